"""Per-query tests: sign-flip permutation and the adaptive dispatcher."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import special

from ..errors import TooFewQueries
from ..model import TestKind
from . import _kernels
from .betabin import MIN_QUERIES, betabin_lrt
from .rng import make_rng

N_PERMS = 9999
MIN_PERM_QUERIES = 3
_CHUNK = 1 << 20  # sign entries generated per batch


@dataclass(frozen=True)
class QueryObservation:
    query_id: str
    stratum: str
    k: int
    n: int

    def __post_init__(self):
        if self.k < 0 or self.n < 0 or self.k > self.n:
            raise ValueError(f"need 0 <= k <= n, got k={self.k}, n={self.n}")

    @property
    def p_q(self) -> float:
        # a query with no mentions at all contributes a proportion of zero
        return self.k / self.n if self.n else 0.0


@dataclass(frozen=True)
class StratumResult:
    stratum: str
    z_equivalent: Optional[float]
    p: Optional[float]
    N: int
    test_kind: TestKind
    mean_dev: float
    statistic: Optional[float] = None


def signflip_perm(deviations: Sequence[float], n_perms: int = N_PERMS, seed=0) -> tuple[float, float]:
    """Two-tailed sign-flip test of mean deviation zero.

    ``p = (#{|mean_perm| >= |mean_obs|} + 1) / (n_perms + 1)``. Signs come
    from a Philox stream, so results depend only on the inputs and ``seed``.
    """
    d = np.asarray(deviations, dtype=np.float64)
    N = d.size
    if N < MIN_PERM_QUERIES:
        raise TooFewQueries(f"sign-flip test needs >= {MIN_PERM_QUERIES} queries, got {N}")
    mean_dev = float(d.mean())
    observed = abs(float(d.sum()))
    # ties are decided on sums, with slack for summation-order rounding
    threshold = observed - 1e-12 * max(1.0, float(np.abs(d).sum()))
    rng = make_rng(seed)
    rows_per_chunk = max(1, _CHUNK // N)
    count = 0
    done = 0
    while done < n_perms:
        rows = min(rows_per_chunk, n_perms - done)
        count += int(_kernels.signflip_exceedances(d, _sign_rows(rng, rows, N), threshold))
        done += rows
    return mean_dev, (count + 1) / (n_perms + 1)


def _sign_rows(rng, rows: int, N: int) -> np.ndarray:
    # Each row consumes whole 64-bit words, so chunking never shifts the stream.
    words = (N + 63) // 64
    raw = rng.bit_generator.random_raw(rows * words).astype("<u8")
    bits = np.unpackbits(raw.view(np.uint8).reshape(rows, words * 8), axis=1, bitorder="little")
    return bits[:, :N].astype(np.int8) * np.int8(2) - np.int8(1)


def adaptive_test(obs: Sequence[QueryObservation], p0: float, seed=0, *, n_perms: int = N_PERMS,
                  stratum: Optional[str] = None) -> StratumResult:
    """Pick the per-query test from the number of queries.

    N >= 30 queries with counts: Beta-Binomial LRT. 3 <= N: sign-flip
    permutation, converted to a signed z. Fewer: descriptive only.
    """
    if stratum is None:
        stratum = obs[0].stratum if obs else ""
    N = len(obs)
    devs = np.array([o.p_q - p0 for o in obs], dtype=float)
    mean_dev = float(devs.mean()) if N else 0.0
    with_counts = [o for o in obs if o.n > 0]
    if len(with_counts) >= MIN_QUERIES and 0.0 < p0 < 1.0:
        res = betabin_lrt([o.k for o in with_counts], [o.n for o in with_counts], p0)
        return StratumResult(stratum, res.z_equivalent, res.p, N, TestKind.BETABIN_LRT,
                             mean_dev, res.Lambda)
    if N >= MIN_PERM_QUERIES:
        mean_dev, p = signflip_perm(devs, n_perms, seed)
        sign = (mean_dev > 0) - (mean_dev < 0)
        z = sign * float(special.ndtri(1.0 - p / 2.0))
        return StratumResult(stratum, z, p, N, TestKind.SIGNFLIP_PERM, mean_dev, mean_dev)
    return StratumResult(stratum, None, None, N, TestKind.DESCRIPTIVE, mean_dev)
