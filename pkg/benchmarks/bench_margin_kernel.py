#!/usr/bin/env python3
"""Benchmark the brute-force privacy-scan kernel: numba vs numpy fallback.

The scan enumerates every grid interval for every admissible query pair, so
work grows like (pairs x intervals); this script times both backends on the
same inputs and reports the speedup.  Run after `pip install -e .`:

    python benchmarks/bench_margin_kernel.py --grids 60 100 160 200
"""

import argparse
import math
import time

import numpy as np

from bounded_laplace import CalibratedMechanism, OutputDomain, PrivacyBudget, calibrate
from bounded_laplace._kernels import available_backends, worst_interval_margin


def build_case(grid):
    domain = OutputDomain(0.0, 1.0, 0.5)
    budget = PrivacyBudget(1.0, 0.0)
    mech = CalibratedMechanism(domain, budget, calibrate(domain, budget).b_star)
    qs = np.linspace(domain.lower, domain.upper, grid)
    xs = np.linspace(domain.lower, domain.upper, grid)
    cdf = mech.cdf(qs[:, None], xs[None, :])
    pa, pb = np.nonzero(np.abs(qs[:, None] - qs[None, :]) <= domain.sensitivity)
    return cdf, pa, pb, math.exp(budget.epsilon)


def best_time(backend, case, repeats):
    cdf, pa, pb, amp = case
    result = worst_interval_margin(cdf, pa, pb, amp, backend=backend)  # warm-up
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        got = worst_interval_margin(cdf, pa, pb, amp, backend=backend)
        best = min(best, time.perf_counter() - t0)
        assert got == result
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--grids", type=int, nargs="+", default=[60, 100, 160, 200])
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    backends = available_backends()
    print(f"available backends: {', '.join(backends)}")
    header = f"{'grid':>6} {'pairs':>8} {'intervals':>10}"
    for b in backends:
        header += f" {b + ' [s]':>12}"
    if len(backends) == 2:
        header += f" {'speedup':>9}"
    print(header)

    for grid in args.grids:
        case = build_case(grid)
        n_pairs = case[1].size
        n_intervals = grid * (grid - 1) // 2
        row = f"{grid:>6} {n_pairs:>8} {n_intervals:>10}"
        times = {}
        margins = {}
        for backend in backends:
            times[backend], margins[backend] = best_time(backend, case, args.repeats)
            row += f" {times[backend]:>12.4f}"
        if len(backends) == 2:
            row += f" {times['numpy'] / times['numba']:>8.1f}x"
            assert margins["numba"] == margins["numpy"], "backends disagree"
        print(row)


if __name__ == "__main__":
    main()
