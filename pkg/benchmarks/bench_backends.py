#!/usr/bin/env python3
"""Compare the compiled kernels against the pure-Python fallback.

Times the two hot paths on both backends: the Monte Carlo event loop and
the tip-age density solve. Run from the repo root after an editable
install:

    python benchmarks/bench_backends.py          # full sizes
    python benchmarks/bench_backends.py --quick  # ~10x smaller
"""

import argparse
import time

import numpy as np

from tanglesim import ExponentialDelay, FixedDelay, SimConfig, ensemble, solve_pde
from tanglesim._kernels import available_backends


def timeit(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = ap.parse_args()

    backends = available_backends()
    if backends == ("pure",):
        print("compiled kernels not built; benchmarking pure only")

    horizon = 60.0 if args.quick else 300.0
    n_runs = 20 if args.quick else 150
    pde_horizon = 60.0 if args.quick else 300.0
    dt = 0.02 if args.quick else 0.01

    sim_cfg = SimConfig(rate=20.0, delay=FixedDelay(5.0), horizon=horizon, seed=7)
    cases = [
        (f"ensemble ({n_runs} runs, rate 20, horizon {horizon:g})",
         lambda b: ensemble(sim_cfg, n_runs, backend=b)),
        (f"density solve fixed h=5 (dt={dt}, horizon {pde_horizon:g})",
         lambda b: solve_pde(FixedDelay(5.0), pde_horizon, dt, backend=b)),
        (f"density solve exponential mu=0.2 (dt={dt}, horizon {pde_horizon:g})",
         lambda b: solve_pde(ExponentialDelay(0.2), pde_horizon, dt, backend=b)),
    ]

    width = max(len(name) for name, _ in cases)
    print(f"{'case':<{width}}  " + "".join(f"{b:>12}" for b in backends) +
          ("     speedup" if len(backends) == 2 else ""))
    for name, make in cases:
        times = {}
        results = {}
        for b in backends:
            times[b], results[b] = timeit(lambda: make(b), repeats=2 if args.quick else 3)
        row = f"{name:<{width}}  " + "".join(f"{times[b]:>11.3f}s" for b in backends)
        if len(backends) == 2:
            row += f"  {times['pure'] / times['compiled']:>9.1f}x"
            a, b = results["compiled"], results["pure"]
            if hasattr(a, "mean"):
                assert np.array_equal(a.mean, b.mean), "backend results differ"
            else:
                assert np.allclose(a.scaled_tips, b.scaled_tips, rtol=1e-9, atol=1e-12)
        print(row)


if __name__ == "__main__":
    main()
