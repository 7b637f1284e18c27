"""Hedging an American put basket through the penalized driver.

Solves the same problem twice, with penalty weight 0 (European) and 1
(American), and prints how the deltas settle over the iterations.  The
American price must not fall below the European one.

    python3 demos/american_put_deltas.py
"""
import numpy as np

from picard_bsde import BasketPayoff, SolverParams, black_scholes, solve


def main():
    model = black_scholes(d=5, spot=100.0, rate=0.05, dividend=0.1, volatility=0.25,
                          correlation=0.2, maturity=1.0)
    put = BasketPayoff("put", 100.0)
    for omega in (0.0, 1.0):
        params = SolverParams(iterations=5, points=1000, samples=5000, penalty=omega, seed=1)
        state = solve(model, put, params)
        print(f"omega = {omega}")
        for r in state.history:
            print(f"  k={r.k}  Y0={r.y0:.4f}  delta={np.round(r.delta, 6)}")


if __name__ == "__main__":
    main()
