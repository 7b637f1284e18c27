"""Convergence of the Picard iterations for a 5-asset European put basket.

Runs the solver with a modest number of Monte-Carlo samples per point and
prints, iteration by iteration, the price at the spot (with its standard
error), the raw polynomial value and the deltas.  A plain Monte-Carlo price
is computed at the end for comparison.

    python3 demos/european_put_convergence.py [samples]
"""
import sys

import numpy as np

from picard_bsde import BasketPayoff, PicardSolver, SolverParams, black_scholes, mc_european_price


def main():
    samples = int(sys.argv[1]) if len(sys.argv) > 1 else 10000
    model = black_scholes(d=5, spot=100.0, rate=0.05, dividend=0.0, volatility=0.2,
                          correlation=0.1, maturity=3.0)
    put = BasketPayoff("put", 100.0)
    params = SolverParams(iterations=10, points=1000, samples=samples, eta=3, q=1.0, seed=1)
    solver = PicardSolver(model, put, params)
    print(f"basis size p = {solver.basis.p}, M = {samples}")
    print(f"{'k':>3} {'Y0':>9} {'se':>7} {'poly':>9}  delta")

    def show(state):
        r = state.history[-1]
        print(f"{r.k:>3} {r.y0:9.4f} {r.y0_se:7.4f} {r.y0_poly:9.4f}  {np.round(r.delta, 4)}  ({r.seconds:.1f}s)")

    solver.run(show)
    ref = mc_european_price(model, put, 2_000_000, seed=7)
    print(f"plain Monte-Carlo: {ref.price:.4f}  95% CI ({ref.ci[0]:.4f}, {ref.ci[1]:.4f})")


if __name__ == "__main__":
    main()
