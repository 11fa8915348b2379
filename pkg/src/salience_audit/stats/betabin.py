"""Beta-Binomial likelihood-ratio test for a mean proportion under overdispersion.

Each query contributes ``k_i ~ BetaBinomial(n_i, a, b)`` with mean
``mu = a / (a + b)`` and dispersion ``M = a + b``. H1 frees both; H0 pins
``mu = p0`` and frees ``M``. The optimisation runs in ``(logit mu, log M)``
inside a box, with L-BFGS-B from five fixed starting points and a coarse grid
as fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from ..errors import DegenerateP0, OptimizerNoConverge, TooFewQueries
from . import _kernels
from .basic import chi2_sf

LOGIT_BOUNDS = (-15.0, 15.0)
LOG_M_BOUNDS = (-6.0, 10.0)
START_LOG_M = (-2.0, 0.0, 2.0, 4.0, 6.0)
MIN_QUERIES = 30
LL_TOL = 1e-8


@dataclass(frozen=True)
class SufficientCounts:
    """Rising-factorial counts: the likelihood depends on the data only
    through these arrays and a constant."""

    ca: np.ndarray
    cb: np.ndarray
    cm: np.ndarray
    const: float
    N: int
    k_total: int
    n_total: int

    @classmethod
    def from_counts(cls, k, n) -> "SufficientCounts":
        k = np.asarray(k, dtype=np.int64)
        n = np.asarray(n, dtype=np.int64)
        if k.shape != n.shape or np.any(k < 0) or np.any(k > n):
            raise ValueError("need 0 <= k_i <= n_i elementwise")
        nmax = int(n.max()) if n.size else 0
        j = np.arange(nmax)
        ca = (k[:, None] > j).sum(axis=0).astype(np.float64)
        cb = ((n - k)[:, None] > j).sum(axis=0).astype(np.float64)
        cm = (n[:, None] > j).sum(axis=0).astype(np.float64)
        const = float(np.sum(special.gammaln(n + 1) - special.gammaln(k + 1)
                             - special.gammaln(n - k + 1)))
        return cls(ca, cb, cm, const, int(k.size), int(k.sum()), int(n.sum()))

    def loglik(self, u: float, v: float) -> float:
        return _kernels.bb_loglik_grad(self.ca, self.cb, self.cm, self.const, u, v)[0]

    def loglik_grad(self, u: float, v: float):
        return _kernels.bb_loglik_grad(self.ca, self.cb, self.cm, self.const, u, v)


def betabinom_loglik(k, n, mu, M) -> float:
    """Total Beta-Binomial log-likelihood of counts ``k`` out of ``n``."""
    suff = SufficientCounts.from_counts(k, n)
    return suff.loglik(special.logit(mu), math.log(M))


@dataclass(frozen=True)
class BetaBinFit:
    u: float
    v: float
    loglik: float

    @property
    def mu(self) -> float:
        return float(special.expit(self.u))

    @property
    def M(self) -> float:
        return math.exp(self.v)


@dataclass(frozen=True)
class BetaBinLRTResult:
    Lambda: float
    z_equivalent: float
    p: float
    h1: BetaBinFit
    h0: BetaBinFit
    N: int
    n_dropped: int


def _best_of(runs):
    runs = [r for r in runs if r is not None and math.isfinite(r[1])]
    return max(runs, key=lambda r: r[1]) if runs else None


def _minimize(fun, x0, bounds):
    try:
        res = optimize.minimize(
            fun, x0, jac=True, method="L-BFGS-B", bounds=bounds,
            options={"ftol": 1e-15, "gtol": 1e-10, "maxiter": 2000},
        )
    except (FloatingPointError, ValueError):
        return None
    if not np.all(np.isfinite(res.x)):
        return None
    return res.x, -float(res.fun)


def fit_h1(suff: SufficientCounts, logit_bounds=LOGIT_BOUNDS, log_m_bounds=LOG_M_BOUNDS,
           extra_starts=()) -> BetaBinFit:
    """Maximise the likelihood over (logit mu, log M) jointly."""
    def negll(x):
        ll, du, dv = suff.loglik_grad(float(x[0]), float(x[1]))
        return -ll, np.array([-du, -dv])

    lo, hi = logit_bounds
    pooled = min(max(suff.k_total / max(suff.n_total, 1), 1e-3), 1 - 1e-3)
    u0 = min(max(float(special.logit(pooled)), lo), hi)
    starts = [(u0, min(max(v, log_m_bounds[0]), log_m_bounds[1])) for v in START_LOG_M]
    starts += [tuple(s) for s in extra_starts]
    bounds = [logit_bounds, log_m_bounds]
    best = _best_of(_minimize(negll, np.array(s, dtype=float), bounds) for s in starts)
    if best is None:
        best = _grid_fallback(lambda u, v: suff.loglik(u, v), logit_bounds, log_m_bounds)
        best = _best_of([best, _minimize(negll, np.array(best[0]), bounds)])
    x, ll = best
    return BetaBinFit(float(x[0]), float(x[1]), ll)


def fit_h0(suff: SufficientCounts, p0: float, log_m_bounds=LOG_M_BOUNDS) -> BetaBinFit:
    """Maximise over log M with the mean held at ``p0``."""
    u = float(special.logit(p0))

    def negll(x):
        ll, _, dv = suff.loglik_grad(u, float(x[0]))
        return -ll, np.array([-dv])

    starts = [min(max(v, log_m_bounds[0]), log_m_bounds[1]) for v in START_LOG_M]
    best = _best_of(_minimize(negll, np.array([s]), [log_m_bounds]) for s in starts)
    if best is None:
        best = _grid_fallback(lambda _u, v: suff.loglik(u, v), (u, u), log_m_bounds)
        if best is not None:
            best = (np.array([best[0][1]]), best[1])
    if best is None:
        raise OptimizerNoConverge("H0 dispersion fit failed from every start and the grid")
    return BetaBinFit(u, float(best[0][0]), best[1])


def _grid_fallback(ll, ubounds, vbounds, size=61):
    us = np.linspace(*ubounds, size) if ubounds[0] != ubounds[1] else np.array([ubounds[0]])
    vs = np.linspace(*vbounds, size)
    best = None
    for u in us:
        for v in vs:
            val = ll(float(u), float(v))
            if math.isfinite(val) and (best is None or val > best[1]):
                best = (np.array([u, v]), val)
    if best is None:
        raise OptimizerNoConverge("log-likelihood is non-finite over the whole grid")
    return best


def betabin_lrt(k, n, p0: float, *, min_queries: int = MIN_QUERIES,
                logit_bounds=LOGIT_BOUNDS, log_m_bounds=LOG_M_BOUNDS) -> BetaBinLRTResult:
    """Likelihood-ratio test of ``mu = p0`` with free dispersion.

    Queries with ``n_i = 0`` carry no likelihood and are dropped (reported in
    ``n_dropped``). ``z_equivalent`` is ``sign(mu_hat - p0) * sqrt(Lambda)``.
    """
    if not 0.0 < p0 < 1.0:
        raise DegenerateP0(f"p0 must lie strictly inside (0, 1), got {p0}")
    k = np.asarray(k, dtype=np.int64)
    n = np.asarray(n, dtype=np.int64)
    keep = n > 0
    dropped = int((~keep).sum())
    k, n = k[keep], n[keep]
    if k.size < min_queries:
        raise TooFewQueries(f"Beta-Binomial LRT needs >= {min_queries} queries with counts, got {k.size}")
    suff = SufficientCounts.from_counts(k, n)
    h0 = fit_h0(suff, p0, log_m_bounds)
    # warm start from the H0 optimum keeps the nested fit at least as good
    start0 = (min(max(h0.u, logit_bounds[0]), logit_bounds[1]), h0.v)
    h1 = fit_h1(suff, logit_bounds, log_m_bounds, extra_starts=[start0])
    Lam = 2.0 * (h1.loglik - h0.loglik)
    if Lam < -1e-6:
        raise OptimizerNoConverge(f"H1 fit worse than H0 (Lambda = {Lam:.3g})")
    Lam = max(Lam, 0.0)
    sign = (h1.mu > p0) - (h1.mu < p0)
    z = sign * math.sqrt(Lam)
    return BetaBinLRTResult(Lam, z, chi2_sf(Lam, 1), h1, h0, int(k.size), dropped)
