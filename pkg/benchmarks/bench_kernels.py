"""Time the numba kernels against the pure-numpy fallback.

Each backend runs in its own interpreter because the choice is fixed at
import time by ``SALIENCE_AUDIT_NUMBA``::

    python3 benchmarks/bench_kernels.py            # both backends
    python3 benchmarks/bench_kernels.py --repeat 7
"""

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, timeit
import numpy as np
from salience_audit.stats import _kernels as K
from salience_audit.stats import betabin_lrt, bootstrap_shares, signflip_perm
from salience_audit.stats.rng import make_rng

repeat = int(sys.argv[1])
rng = make_rng(0, "bench")
d = rng.normal(0.05, 0.2, 12)
k_n = rng.integers(4, 13, 200)
k_k = rng.binomial(k_n, 0.3)
labels = rng.integers(0, 5, 5000)

cases = {
    "signflip_perm(N=12, 9999 perms)": lambda: signflip_perm(d, 9999, seed=1),
    "betabin_lrt(200 queries)": lambda: betabin_lrt(k_k, k_n, 0.25),
    "bootstrap_shares(5000 mentions, B=1000)": lambda: bootstrap_shares(labels, 5, 1000, seed=1),
}
for fn in cases.values():
    fn()  # compile / warm caches
out = {name: min(timeit.repeat(fn, number=1, repeat=repeat)) for name, fn in cases.items()}
print(json.dumps({"numba": K.USE_NUMBA, "times": out}))
"""


def run_backend(flag, repeat):
    env = dict(os.environ, SALIENCE_AUDIT_NUMBA=flag)
    proc = subprocess.run([sys.executable, "-c", CHILD, str(repeat)], env=env,
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5, help="best-of repeats per case")
    args = ap.parse_args(argv)

    fast = run_backend("1", args.repeat)
    slow = run_backend("0", args.repeat)
    if not fast["numba"]:
        print("numba is not importable; both columns use numpy", file=sys.stderr)
    width = max(map(len, fast["times"]))
    print(f"{'case':<{width}}  {'numba ms':>9}  {'numpy ms':>9}  {'speedup':>7}")
    for name, t_fast in fast["times"].items():
        t_slow = slow["times"][name]
        print(f"{name:<{width}}  {t_fast * 1e3:9.2f}  {t_slow * 1e3:9.2f}  {t_slow / t_fast:6.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
