"""Percentile bootstrap intervals for category shares."""

from __future__ import annotations

import numpy as np

from ..errors import EmptyMentions
from ..model import Mention, Scheme
from . import _kernels
from .rng import make_rng

N_RESAMPLES = 1000
_CHUNK = 1 << 22  # resampled indices held in memory at once


def category_labels(mentions, scheme: Scheme) -> np.ndarray:
    scheme = Scheme(scheme)
    cats = [m.category if isinstance(m, Mention) else m for m in mentions]
    return np.array([scheme.index(c) for c in cats], dtype=np.int64)


def bootstrap_shares(labels: np.ndarray, K: int, n_resamples: int = N_RESAMPLES, seed=0) -> np.ndarray:
    """``(n_resamples, K)`` percentage shares from resampling labels with replacement."""
    n = labels.size
    if n == 0:
        raise EmptyMentions("cannot bootstrap zero mentions")
    rng = make_rng(seed)
    rows_per_chunk = max(1, _CHUNK // n)
    parts = []
    done = 0
    while done < n_resamples:
        rows = min(rows_per_chunk, n_resamples - done)
        idx = rng.integers(0, n, size=(rows, n), dtype=np.int64)
        parts.append(_kernels.bootstrap_counts(labels, idx, K))
        done += rows
    counts = np.concatenate(parts, axis=0)
    return 100.0 * counts / n


def bootstrap_ci(mentions, scheme, n_resamples: int = N_RESAMPLES, level: float = 0.95,
                 seed=0) -> dict[str, tuple[float, float]]:
    """Percentile interval of each category's share, in percent."""
    scheme = Scheme(scheme)
    labels = category_labels(mentions, scheme)
    shares = bootstrap_shares(labels, scheme.K, n_resamples, seed)
    tail = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(shares, [tail, 100.0 - tail], axis=0)
    return {c: (float(lo[i]), float(hi[i])) for i, c in enumerate(scheme.categories)}
