from ._kernels import USE_NUMBA
from .basic import (
    binom_z,
    chi2_sf,
    diff_vs_benchmark,
    holm,
    normal_two_tailed,
    omnibus,
    proportions,
    stouffer,
)
from .betabin import BetaBinLRTResult, SufficientCounts, betabin_lrt, betabinom_loglik, fit_h0, fit_h1
from .bootstrap import bootstrap_ci, bootstrap_shares
from .permutation import QueryObservation, StratumResult, adaptive_test, signflip_perm
from .rng import derive_seed, make_rng

__all__ = [
    "USE_NUMBA",
    "BetaBinLRTResult",
    "QueryObservation",
    "StratumResult",
    "SufficientCounts",
    "adaptive_test",
    "betabin_lrt",
    "betabinom_loglik",
    "binom_z",
    "bootstrap_ci",
    "bootstrap_shares",
    "chi2_sf",
    "derive_seed",
    "diff_vs_benchmark",
    "fit_h0",
    "fit_h1",
    "holm",
    "make_rng",
    "normal_two_tailed",
    "omnibus",
    "proportions",
    "signflip_perm",
    "stouffer",
]
