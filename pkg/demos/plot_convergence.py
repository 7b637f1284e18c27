"""Plot Y0 against the iteration index from a ``convergence.csv``.

    picard-bsde solve --config demos/configs/put5_bs.json --out runs/put5
    python3 demos/plot_convergence.py runs/put5/convergence.csv --benchmark 2.0353

Needs matplotlib (``pip install picard-bsde[plot]``).
"""
import argparse
import csv

import matplotlib.pyplot as plt


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv")
    ap.add_argument("--benchmark", type=float, help="reference price drawn as a line")
    ap.add_argument("--out", help="save to this file instead of showing")
    args = ap.parse_args()

    with open(args.csv) as fh:
        rows = list(csv.DictReader(fh))
    k = [int(r["k"]) for r in rows]
    y0 = [float(r["Y0"]) for r in rows]
    se = [2 * float(r["Y0_se"]) for r in rows]

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.errorbar(k, y0, yerr=se, marker="o", capsize=3, label="Y0")
    if args.benchmark is not None:
        ax.axhline(args.benchmark, color="k", ls="--", lw=1, label="benchmark")
    ax.set_xlabel("iteration")
    ax.set_ylabel("price")
    ax.legend()
    fig.tight_layout()
    if args.out:
        fig.savefig(args.out, dpi=120)
    else:
        plt.show()


if __name__ == "__main__":
    main()
