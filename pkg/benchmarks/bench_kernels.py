"""Compare the compiled kernels against the pure fallback.

Run from the repo root after an editable install:

    python3 benchmarks/bench_kernels.py [--rows 4096] [--dim 512] [--pairs 4096]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cafscore._kernels import KERNEL_BACKEND
from cafscore._kernels import pure


def _load_compiled():
    try:
        from cafscore._kernels import _fast
    except ImportError:
        return None
    return _fast


def bench(fn, *args, repeat: int = 7) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=4096, help="window count for the dot kernel")
    ap.add_argument("--dim", type=int, default=512, help="embedding width")
    ap.add_argument("--pairs", type=int, default=4096, help="sample count for pair statistics")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    mat = rng.standard_normal((args.rows, args.dim))
    vec = rng.standard_normal(args.dim)
    # a coarse grid so tie handling gets exercised, not just the fast path
    xs = np.round(rng.standard_normal(args.pairs), 1)
    ys = np.round(rng.standard_normal(args.pairs), 1)

    compiled = _load_compiled()
    print(f"active backend at import: {KERNEL_BACKEND}")
    print(f"dot_products: {args.rows} x {args.dim}   pair_stats: n={args.pairs}\n")
    print(f"{'kernel':<10} {'impl':<9} {'best (ms)':>10}")

    rows = [("pure", pure)]
    if compiled is not None:
        rows.append(("compiled", compiled))
    else:
        print("compiled extension not built; showing pure only")

    results = {}
    for name, mod in rows:
        t = bench(mod.dot_products, mat, vec) * 1e3
        results[("dot", name)] = t
        print(f"{'dot':<10} {name:<9} {t:>10.3f}")
    for name, mod in rows:
        t = bench(mod.pair_stats, xs, ys) * 1e3
        results[("pairs", name)] = t
        print(f"{'pairs':<10} {name:<9} {t:>10.3f}")

    if compiled is not None:
        got = compiled.dot_products(mat, vec)
        want = pure.dot_products(mat, vec)
        if not np.allclose(got, want, atol=1e-12):
            print("\nWARNING: kernels disagree on dot products")
            return 1
        if compiled.pair_stats(xs, ys) != pure.pair_stats(xs, ys):
            print("\nWARNING: kernels disagree on pair statistics")
            return 1
        print("\nagreement check: identical outputs")
        for kernel in ("dot", "pairs"):
            speedup = results[(kernel, "pure")] / results[(kernel, "compiled")]
            print(f"{kernel}: compiled is {speedup:.2f}x the pure fallback")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
