"""Proportions, benchmark differences and the closed-form tests."""

from __future__ import annotations

import math
from typing import Callable, Hashable, Mapping, Optional

import numpy as np
from scipy import special

from ..errors import DegenerateP0, EmptyCounts, MissingCategory, NoTestableStrata, SchemeMismatch
from ..model import Scheme, TestKind


def normal_two_tailed(z: float) -> float:
    return float(2.0 * special.ndtr(-abs(z)))


def chi2_sf(x: float, df: int) -> float:
    return float(special.chdtrc(df, max(x, 0.0)))


def proportions(counts: Mapping[str, int], scheme: Optional[Scheme] = None) -> dict[str, float]:
    """Percentage share of each category; categories missing from ``counts``
    are filled with 0 when ``scheme`` is given."""
    keys = list(Scheme(scheme).categories) if scheme is not None else list(counts)
    extra = set(counts) - set(keys)
    if extra:
        raise SchemeMismatch(f"categories {sorted(extra)} not in {Scheme(scheme).value}")
    total = math.fsum(counts.get(k, 0) for k in keys)
    if total <= 0:
        raise EmptyCounts("no mentions to take proportions of")
    return {k: 100.0 * counts.get(k, 0) / total for k in keys}


def diff_vs_benchmark(P: Mapping[str, float], E: Mapping[str, float]) -> dict[str, float]:
    """Observed percentage minus expected proportion, in percentage points."""
    if set(P) != set(E):
        raise SchemeMismatch(f"observed {sorted(P)} vs expected {sorted(E)}")
    return {k: P[k] - 100.0 * E[k] for k in P}


def binom_z(k: int, n: int, p0: float) -> tuple[float, float]:
    """One-sample binomial proportion z-test; returns ``(z, two-tailed p)``."""
    if n < 1:
        raise EmptyCounts("binom_z needs n >= 1")
    if not 0.0 < p0 < 1.0:
        raise DegenerateP0(f"p0 must lie strictly inside (0, 1), got {p0}")
    z = (k / n - p0) / math.sqrt(p0 * (1.0 - p0) / n)
    return z, normal_two_tailed(z)


def stouffer(strata) -> tuple[float, float]:
    """Weighted Stouffer combination, ``w = sqrt(N)``; descriptive strata skipped."""
    usable = [s for s in strata if s.test_kind is not TestKind.DESCRIPTIVE and s.p is not None]
    if not usable:
        raise NoTestableStrata("no stratum carries an inferential test")
    w = np.sqrt(np.array([s.N for s in usable], dtype=float))
    z = np.array([s.z_equivalent for s in usable], dtype=float)
    Z = float(np.dot(w, z) / math.sqrt(np.dot(w, w)))
    return Z, normal_two_tailed(Z)


def omnibus(z_by_category: Mapping[str, float], K: int) -> tuple[float, int, float]:
    """Sum of squared per-category z against chi-square with K-1 df."""
    if len(z_by_category) != K or any(z is None for z in z_by_category.values()):
        raise MissingCategory(f"omnibus needs a z for all {K} categories, got {dict(z_by_category)}")
    chi2 = math.fsum(z * z for z in z_by_category.values())
    df = K - 1
    return chi2, df, chi2_sf(chi2, df)


def holm(p_by_key: Mapping[Hashable, float], alpha: float = 0.05,
         context: Callable[[Hashable], Hashable] = None) -> dict:
    """Holm step-down adjustment, run separately within each context.

    ``context(key)`` names a key's family; by default the first element of a
    tuple key, with all non-tuple keys sharing one family.
    Returns ``{key: (p_adjusted, reject)}``.
    """
    if context is None:
        def context(key):
            return key[0] if isinstance(key, tuple) else None
    families = {}
    for key, p in p_by_key.items():
        families.setdefault(context(key), []).append((key, p))
    out = {}
    for members in families.values():
        m = len(members)
        order = sorted(range(m), key=lambda i: members[i][1])
        running = 0.0
        for rank, i in enumerate(order):
            key, p = members[i]
            running = max(running, min(1.0, (m - rank) * p))
            out[key] = (running, running <= alpha)
    return out
