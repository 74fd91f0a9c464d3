"""Benchmark the compiled pairwise kernel against the NumPy reference.

Runs the same level computation through both backends (and the bucket
counting path for scale), checks that the outputs agree bit for bit, and
prints a timing table.  Usage:

    python benchmarks/bench_kernels.py [--n 20000] [--m 10] [--s 3] [--nu 5]
"""

import argparse
import time

import numpy as np

from qmcpress import DataSet, sobol_net
from qmcpress._kernels import _ref, backend_name
from qmcpress.weights import _bucket_level, lemma4_budget

try:
    from qmcpress._kernels import _fast
except ImportError:
    _fast = None


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=20_000)
    ap.add_argument("--m", type=int, default=10)
    ap.add_argument("--s", type=int, default=3)
    ap.add_argument("--nu", type=int, default=5)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    rng = np.random.default_rng(1)
    data = DataSet(X=rng.random((args.n, args.s)), Y=rng.standard_normal(args.n))
    net = sobol_net(args.s, args.m)
    r = args.nu
    xp = data.prefix(r)
    zp = net.prefix(r)
    budget = min(lemma4_budget(args.s, r, 2, args.m), net.n_points + 1)

    rows = []

    def bench(label, fn, repeat=1):
        t0 = time.perf_counter()
        for _ in range(repeat):
            out = fn()
        dt = (time.perf_counter() - t0) / repeat
        rows.append((label, dt, out))
        return out

    ref = bench("reference pairwise", lambda: _ref.pairwise_st(xp, data.Y, zp, 2, r, budget, False, 1))
    if _fast is not None:
        fast = bench("compiled pairwise", lambda: _fast.pairwise_st(xp, data.Y, zp, 2, r, budget, False, 1))
        if args.threads > 1:
            bench(f"compiled pairwise x{args.threads}",
                  lambda: _fast.pairwise_st(xp, data.Y, zp, 2, r, budget, False, args.threads))
        bench("compiled pairwise+skip", lambda: _fast.pairwise_st(xp, data.Y, zp, 2, r, budget, True, 1))
        assert np.array_equal(ref[0], fast[0]), "S mismatch between backends"
        assert np.array_equal(ref[1], fast[1]), "T mismatch between backends"
    bench("bucket counting", lambda: _bucket_level(zp, xp, data.Y, 2, r))

    base = rows[0][1]
    print(f"active backend: {backend_name()}")
    print(f"N={args.n} L=2^{args.m} s={args.s} r={r}")
    print(f"{'path':<28}{'seconds':>12}{'speedup':>10}")
    for label, dt, _ in rows:
        print(f"{label:<28}{dt:>12.4f}{base / dt:>10.1f}x")
    if _fast is None:
        print("compiled kernel not built (run: python setup.py build_ext --inplace)")


if __name__ == "__main__":
    main()
