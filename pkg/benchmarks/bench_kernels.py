"""Batched expression kernels: numba against the numpy fallback.

    python benchmarks/bench_kernels.py [--envs 256,4096,49152] [--exprs 50] [--repeat 5]

Both backends evaluate the same compiled programs over the same random
environments; results are checked for equality before timing is reported.
"""
import argparse
import random
import time

import numpy as np

from svagen.checker import kernels
from svagen.sva.generate import AstGenerator

WIDTHS = {"a": 1, "b": 1, "req": 1, "ack": 1, "cnt": 4, "data": 8}


def programs(n, seed):
    index = {name: i for i, name in enumerate(WIDTHS)}
    out = []
    for s in range(seed, seed + n):
        expr = AstGenerator(random.Random(s), list(WIDTHS), WIDTHS).bool_expr(4, False)
        out.append(kernels.compile_expr(expr, WIDTHS, index))
    return out


def timed(backend, progs, cols, repeat):
    kernels.set_backend(backend)
    results = [kernels.run(p, cols) for p in progs]  # warm-up, includes jit compile
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for p in progs:
            kernels.run(p, cols)
        best = min(best, time.perf_counter() - t0)
    return best, results


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--envs", default="256,4096,49152", help="comma-separated batch sizes")
    ap.add_argument("--exprs", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    progs = programs(args.exprs, args.seed)
    print(f"{args.exprs} expressions, best of {args.repeat}")
    print(f"{'envs':>8} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for n in (int(x) for x in args.envs.split(",")):
        cols = np.stack([rng.integers(0, 1 << w, size=n) for w in WIDTHS.values()])
        t_np, r_np = timed("numpy", progs, cols, args.repeat)
        if not kernels.HAS_NUMBA:
            print(f"{n:>8} {t_np * 1e3:>10.2f} {'-':>10} {'-':>8}")
            continue
        t_nb, r_nb = timed("numba", progs, cols, args.repeat)
        assert all(np.array_equal(x, y) for x, y in zip(r_np, r_nb))
        print(f"{n:>8} {t_np * 1e3:>10.2f} {t_nb * 1e3:>10.2f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
