#!/usr/bin/env python3
"""Benchmark the compiled grid-scan kernel against the pure-numpy fallback.

Workloads mirror what limit-curve evaluation produces: per miscalibration
factor, one kernel call per alpha over a beta grid, scanning the sorted
calibration losses. Outputs are cross-checked for equality while timing.

Run:  python3 benchmarks/bench_kernels.py [--sizes 250,2000,10000] [--repeats 3]
"""

import argparse
import math
import time

import numpy as np

from limitcurves import _scan_py
from limitcurves import backend
from limitcurves.conformal import (
    CalibrationSet,
    WeightBoundSet,
    default_alpha_grid,
    limit_curve,
)

try:
    from limitcurves import _scan_cy
except ImportError:
    _scan_cy = None


def build_workload(n_groups, n_alphas=99, n_levels=49, seed=0):
    rng = np.random.default_rng(seed)
    lower = rng.lognormal(0.0, 0.8, n_groups)
    upper = lower * 2.0
    prefix = np.cumsum(lower)
    suffix = np.concatenate([np.cumsum(upper[::-1])[::-1][1:], [0.0]])
    denom_base = prefix + suffix
    sorted_bound = np.sort(rng.lognormal(0.0, 0.8, n_groups))
    cases = []
    for alpha in np.linspace(0.01, 0.99, n_alphas):
        betas = alpha * np.arange(1, n_levels + 1) / (n_levels + 1)
        positions = np.ceil((n_groups + 1.0) * (1.0 - betas))
        wbars = np.full(n_levels, math.inf)
        ok = positions <= n_groups
        wbars[ok] = sorted_bound[positions[ok].astype(np.int64) - 1]
        thresholds = (1.0 - alpha) / (1.0 - betas)
        cases.append((wbars, thresholds))
    return prefix, denom_base, cases


def time_kernel(impl, prefix, denom_base, cases, repeats):
    best = math.inf
    results = None
    for _ in range(repeats):
        out = []
        start = time.perf_counter()
        for wbars, thresholds in cases:
            out.append(impl.best_stop_index(prefix, denom_base, wbars, thresholds))
        best = min(best, time.perf_counter() - start)
        results = out
    return best, results


def bench_kernels(sizes, repeats):
    print(f"{'groups':>8} {'cells':>10} {'pure (ms)':>11} {'compiled (ms)':>14} {'speedup':>8}")
    for n_groups in sizes:
        prefix, denom_base, cases = build_workload(n_groups)
        cells = len(cases) * len(cases[0][0])
        t_py, r_py = time_kernel(_scan_py, prefix, denom_base, cases, repeats)
        if _scan_cy is None:
            print(f"{n_groups:>8} {cells:>10} {t_py * 1e3:>11.2f} {'n/a':>14} {'n/a':>8}")
            continue
        t_cy, r_cy = time_kernel(_scan_cy, prefix, denom_base, cases, repeats)
        if r_py != [int(v) for v in r_cy]:
            raise AssertionError("kernel outputs differ; benchmark aborted")
        print(
            f"{n_groups:>8} {cells:>10} {t_py * 1e3:>11.2f} {t_cy * 1e3:>14.2f} "
            f"{t_py / t_cy:>8.1f}x"
        )


def bench_end_to_end(n_samples, repeats):
    rng = np.random.default_rng(1)
    losses = rng.normal(size=n_samples)
    base = rng.lognormal(0.0, 0.8, n_samples)
    cal = CalibrationSet.from_shift_weights(losses, base)
    ws = WeightBoundSet(rng.lognormal(0.0, 0.8, n_samples))
    l_max = float(losses.max()) + 1.0
    grid = default_alpha_grid()

    def run_with(impl):
        saved = backend._impl
        backend._impl = impl
        try:
            best = math.inf
            curve = None
            for _ in range(repeats):
                start = time.perf_counter()
                curve = limit_curve(cal, ws, grid, gammas=(1.0, 1.5, 2.0), l_max=l_max)
                best = min(best, time.perf_counter() - start)
            return best, curve
        finally:
            backend._impl = saved

    t_py, c_py = run_with(_scan_py)
    print(f"\nlimit_curve end to end ({n_samples} samples, 3 gammas, 99 alphas):")
    if _scan_cy is None:
        print(f"  pure-numpy: {t_py * 1e3:.1f} ms (compiled kernel not built)")
        return
    t_cy, c_cy = run_with(_scan_cy)
    if [(p.gamma, p.alpha, p.limit, p.trivial) for p in c_py.points] != [
        (p.gamma, p.alpha, p.limit, p.trivial) for p in c_cy.points
    ]:
        raise AssertionError("curves differ between backends; benchmark aborted")
    print(f"  pure-numpy: {t_py * 1e3:.1f} ms   compiled: {t_cy * 1e3:.1f} ms   "
          f"speedup: {t_py / t_cy:.1f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="250,2000,10000")
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--end-to-end-size", type=int, default=5000)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"active backend at import: {backend.BACKEND}\n")
    bench_kernels(sizes, args.repeats)
    bench_end_to_end(args.end_to_end_size, args.repeats)


if __name__ == "__main__":
    main()
