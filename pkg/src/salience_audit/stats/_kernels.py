"""Hot inner loops, each in a numba and a pure-numpy flavour.

The numba versions are used when numba imports and ``SALIENCE_AUDIT_NUMBA``
is not set to ``0``. Both flavours take the same arrays and return the same
values (bit-identical for the integer kernels; floating sums may differ in
the last ulp, which callers tolerate).
"""

import math
import os

import numpy as np

__all__ = [
    "USE_NUMBA",
    "signflip_exceedances",
    "bb_loglik_grad",
    "bootstrap_counts",
]


def _numba_requested():
    flag = os.environ.get("SALIENCE_AUDIT_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "no", "off")


# -- pure numpy ----------------------------------------------------------------

def signflip_exceedances_numpy(d, signs, threshold):
    """Count rows of ``signs`` with ``|signs @ d| >= threshold``."""
    sums = signs.astype(np.float64) @ d
    return int(np.count_nonzero(np.abs(sums) >= threshold))


def bb_loglik_grad_numpy(ca, cb, cm, const, u, v):
    """Beta-Binomial log-likelihood from rising-factorial sufficient counts.

    ``ca[j]``, ``cb[j]``, ``cm[j]`` count observations with ``k > j``,
    ``n - k > j`` and ``n > j``. Parameters are ``u = logit(mu)`` and
    ``v = log(M)``; returns ``(loglik, d/du, d/dv)``.
    """
    M = math.exp(v)
    mu = 1.0 / (1.0 + math.exp(-u))
    a = mu * M
    b = (1.0 - mu) * M
    ja = np.arange(ca.shape[0], dtype=np.float64)
    jb = np.arange(cb.shape[0], dtype=np.float64)
    jm = np.arange(cm.shape[0], dtype=np.float64)
    ll = (const + np.dot(ca, np.log(a + ja)) + np.dot(cb, np.log(b + jb))
          - np.dot(cm, np.log(M + jm)))
    ga = np.dot(ca, 1.0 / (a + ja))
    gb = np.dot(cb, 1.0 / (b + jb))
    gm = np.dot(cm, 1.0 / (M + jm))
    du = M * mu * (1.0 - mu) * (ga - gb)
    dv = a * ga + b * gb - M * gm
    return float(ll), float(du), float(dv)


def bootstrap_counts_numpy(labels, idx, K):
    """Per-resample category counts; ``idx`` is ``(B, n)`` indices into labels."""
    B = idx.shape[0]
    flat = labels[idx] + K * np.arange(B, dtype=np.int64)[:, None]
    return np.bincount(flat.ravel(), minlength=B * K).reshape(B, K)


# -- numba ---------------------------------------------------------------------

def _build_numba():
    from numba import njit

    @njit(cache=True)
    def signflip_exceedances_nb(d, signs, threshold):
        P, N = signs.shape
        count = 0
        for p in range(P):
            s = 0.0
            for i in range(N):
                s += signs[p, i] * d[i]
            if abs(s) >= threshold:
                count += 1
        return count

    @njit(cache=True)
    def bb_loglik_grad_nb(ca, cb, cm, const, u, v):
        M = math.exp(v)
        mu = 1.0 / (1.0 + math.exp(-u))
        a = mu * M
        b = (1.0 - mu) * M
        ll = const
        ga = 0.0
        gb = 0.0
        gm = 0.0
        for j in range(ca.shape[0]):
            ll += ca[j] * math.log(a + j)
            ga += ca[j] / (a + j)
        for j in range(cb.shape[0]):
            ll += cb[j] * math.log(b + j)
            gb += cb[j] / (b + j)
        for j in range(cm.shape[0]):
            ll -= cm[j] * math.log(M + j)
            gm += cm[j] / (M + j)
        du = M * mu * (1.0 - mu) * (ga - gb)
        dv = a * ga + b * gb - M * gm
        return ll, du, dv

    @njit(cache=True)
    def bootstrap_counts_nb(labels, idx, K):
        B, n = idx.shape
        out = np.zeros((B, K), dtype=np.int64)
        for r in range(B):
            for i in range(n):
                out[r, labels[idx[r, i]]] += 1
        return out

    return signflip_exceedances_nb, bb_loglik_grad_nb, bootstrap_counts_nb


signflip_exceedances_numba = bb_loglik_grad_numba = bootstrap_counts_numba = None
USE_NUMBA = False
if _numba_requested():
    try:
        (signflip_exceedances_numba, bb_loglik_grad_numba,
         bootstrap_counts_numba) = _build_numba()
        USE_NUMBA = True
    except ImportError:
        pass

if USE_NUMBA:
    signflip_exceedances = signflip_exceedances_numba
    bb_loglik_grad = bb_loglik_grad_numba
    bootstrap_counts = bootstrap_counts_numba
else:
    signflip_exceedances = signflip_exceedances_numpy
    bb_loglik_grad = bb_loglik_grad_numpy
    bootstrap_counts = bootstrap_counts_numpy
