"""Wall time of one workload for several worker counts.

Speedups are normalized by the smallest worker count, so 1.0 means linear
scaling.  On a machine with fewer cores than requested workers the extra
processes only add overhead.

    python3 demos/speedup_report.py 1,2,4
"""
import os
import sys
import time

from picard_bsde import BasketPayoff, PicardSolver, SolverParams, black_scholes, speedup


def main():
    counts = [int(p) for p in (sys.argv[1] if len(sys.argv) > 1 else "1,2").split(",")]
    model = black_scholes(d=5, spot=100.0, rate=0.05, dividend=0.1, volatility=0.25,
                          correlation=0.2, maturity=1.0)
    params = SolverParams(iterations=2, points=500, samples=4000, penalty=1.0, seed=3)
    print(f"{os.cpu_count()} cores visible")
    times = {}
    for p in counts:
        start = time.perf_counter()
        PicardSolver(model, BasketPayoff("put", 100.0), params, p).run()
        times[p] = time.perf_counter() - start
        ref = counts[0]
        print(f"P={p:>3}: {times[p]:7.2f}s  speedup {speedup((ref, times[ref]), (p, times[p])):.3f}")


if __name__ == "__main__":
    main()
