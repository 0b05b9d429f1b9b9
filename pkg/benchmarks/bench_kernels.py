"""Time the numba and numpy flavours of each hot kernel, plus an end-to-end fit.

    python benchmarks/bench_kernels.py [--repeats 5] [--n 20000]

Kernel timings call both implementations directly. The end-to-end timing
runs a spline calibration in a subprocess per backend, selected through
SPLINECALIB_BACKEND, so the flag is exercised the way users set it.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from splinecalib import _kernels

END_TO_END = """
import time, numpy as np
from scipy.special import expit, logit
from splinecalib import SplineConfig, fit_spline_binary, fit_isotonic, LabeledScores, _kernels
r = np.random.default_rng(0)
p = r.uniform(size={n}); y = (r.uniform(size={n}) < p).astype(int)
data = LabeledScores(expit(3 * logit(p)), y)
fit_isotonic(data); fit_spline_binary(data, SplineConfig(lambda_grid=(1.0,)))  # warm up / compile
t = time.perf_counter(); fit_isotonic(data); iso = time.perf_counter() - t
t = time.perf_counter(); fit_spline_binary(data); spl = time.perf_counter() - t
print(_kernels.BACKEND, iso, spl)
"""


def bench(fn, args, repeats):
    fn(*args)  # compile / warm caches
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeats))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--knots", type=int, default=200)
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args(argv)

    r = np.random.default_rng(0)
    x = r.uniform(size=args.n)
    knots = np.sort(r.choice(x, args.knots, replace=False))
    y = (r.uniform(size=args.n) < x).astype(np.float64)
    order = np.argsort(x)
    cases = {
        "natural_basis": (x, knots),
        "pava": (y[order], np.ones(args.n)),
        "compact_logit": (x, 1e-4),
    }

    print(f"n={args.n}, knots={args.knots}, best of {args.repeats}")
    print(f"{'kernel':<15}{'numpy ms':>11}{'numba ms':>11}{'speedup':>9}")
    for name, call_args in cases.items():
        t_np = bench(_kernels.get_kernel(name, "numpy"), call_args, args.repeats)
        t_nb = bench(_kernels.get_kernel(name, "numba"), call_args, args.repeats)
        print(f"{name:<15}{1e3 * t_np:>11.3f}{1e3 * t_nb:>11.3f}{t_np / t_nb:>8.1f}x")

    if args.skip_end_to_end:
        return
    print(f"\nend to end (n={args.n}, default lambda grid)")
    print(f"{'backend':<15}{'isotonic s':>11}{'spline s':>11}")
    for backend in ("numpy", "numba"):
        env = {**os.environ, _kernels.BACKEND_ENV: backend}
        out = subprocess.run(
            [sys.executable, "-c", END_TO_END.format(n=args.n)],
            env=env, capture_output=True, text=True, check=True,
        ).stdout.split()
        print(f"{out[0]:<15}{float(out[1]):>11.4f}{float(out[2]):>11.3f}")


if __name__ == "__main__":
    main()
