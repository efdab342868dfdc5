"""Time the compiled kernels against their numpy/Python twins.

    python benchmarks/bench_kernels.py [--reps 200] [--n 1000 10000] [--mask 256]

Prints one line per (kernel, size, backend) with the best of ``--repeat`` runs
and checks that both backends return the same answer.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from riskcal import kernels


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_wsr(reps: int, n: int, repeat: int) -> dict[str, float]:
    x = np.random.default_rng(0).beta(1, 9, size=(reps, n))
    out = {}
    results = {}
    for name in ("compiled", "python"):
        kernels.set_backend(name)
        out[name] = best_of(lambda: kernels.wsr_ucb_rows(x, 0.1), repeat)
        results[name] = kernels.wsr_ucb_rows(x, 0.1)[0]
    diff = float(np.max(np.abs(results["compiled"] - results["python"])))
    if diff > 1e-9:
        raise SystemExit(f"backends disagree on WSR by {diff:.2e}")
    return out


def bench_labels(side: int, repeat: int) -> dict[str, float]:
    mask = np.random.default_rng(1).random((side, side)) < 0.45
    out = {}
    results = {}
    for name in ("compiled", "python"):
        kernels.set_backend(name)
        out[name] = best_of(lambda: kernels.label_components_8(mask), repeat)
        results[name] = kernels.label_components_8(mask)
    if results["compiled"][1] != results["python"][1] or not np.array_equal(results["compiled"][0], results["python"][0]):
        raise SystemExit("backends disagree on component labels")
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=200, help="rows per WSR batch")
    ap.add_argument("--n", type=int, nargs="+", default=[1000, 10_000], help="losses per row")
    ap.add_argument("--mask", type=int, nargs="+", default=[128, 512], help="mask side lengths")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not kernels.compiled_available():
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
    print(f"{'kernel':<18}{'size':>16}{'compiled s':>14}{'python s':>12}{'speedup':>10}")
    try:
        for n in args.n:
            t = bench_wsr(args.reps, n, args.repeat)
            print(f"{'wsr_ucb_rows':<18}{f'{args.reps}x{n}':>16}{t['compiled']:>14.4f}{t['python']:>12.4f}"
                  f"{t['python'] / t['compiled']:>9.1f}x")
        for side in args.mask:
            t = bench_labels(side, args.repeat)
            print(f"{'label_components':<18}{f'{side}x{side}':>16}{t['compiled']:>14.4f}{t['python']:>12.4f}"
                  f"{t['python'] / t['compiled']:>9.1f}x")
    finally:
        kernels.set_backend("compiled")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
