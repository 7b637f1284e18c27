"""Batch front-end: ``picard-bsde {solve,benchmark,speedup,validate-config}``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from .basis import SparseBasis
from .config import ConfigError, RunConfig, parse_config
from .engine import PicardSolver
from .errors import BSDEError
from .farm import WORKERS_ENV, speedup
from .models import build_domain
from .oracles import mc_european_price

log = logging.getLogger("picard_bsde")

SPEEDUP_COLUMNS = ["P", "seconds", "speedup"]
BENCHMARK_COLUMNS = ["price", "ci_low", "ci_high", "samples"]


def convergence_columns(d: int) -> list[str]:
    return ["k", "Y0"] + [f"delta_{i + 1}" for i in range(d)] + ["seconds", "Y0_poly", "Y0_se"]


def resolved_echo(cfg: RunConfig) -> dict:
    """The configuration plus derived quantities (basis size, domain)."""
    domain = build_domain(cfg.model, cfg.params.kappa)
    basis = SparseBasis(domain, cfg.params.eta, cfg.params.q, cfg.params.family)
    out = cfg.to_dict()
    out["derived"] = {"p": basis.p, "d_prime": basis.d_prime, "domain": domain.to_dict()}
    return out


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    workers = cfg.workers
    if os.environ.get(WORKERS_ENV):
        workers = int(os.environ[WORKERS_ENV])
    if getattr(args, "workers", None) is not None:
        workers = args.workers
    params = cfg.params
    if getattr(args, "seed", None) is not None:
        params = replace(params, seed=args.seed)
    output = args.out if getattr(args, "out", None) else cfg.output
    return replace(cfg, workers=workers, params=params, output=output)


def run_solve(cfg: RunConfig) -> Path:
    """Run the solver, streaming one CSV row per iteration."""
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    solver = PicardSolver(cfg.model, cfg.payoff, cfg.params, cfg.workers)
    echo = resolved_echo(cfg)
    (out / "config_resolved.json").write_text(json.dumps(echo, indent=2))

    start = time.perf_counter()
    with open(out / "convergence.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(convergence_columns(cfg.model.d))

        def emit(state):
            r = state.history[-1]
            writer.writerow([r.k, repr(r.y0)] + [repr(float(v)) for v in r.delta]
                            + [f"{r.seconds:.6f}", repr(r.y0_poly), repr(r.y0_se)])
            fh.flush()

        state = solver.run(emit)

    last = state.history[-1]
    summary = {
        "iterations": last.k,
        "Y0": last.y0,
        "Y0_se": last.y0_se,
        "Y0_poly": last.y0_poly,
        "delta": [float(v) for v in last.delta],
        "wall_seconds": time.perf_counter() - start,
        "workers": cfg.workers,
        "p": solver.basis.p,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    return out


def run_benchmark(cfg: RunConfig, samples: int) -> Path:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    est = mc_european_price(cfg.model, cfg.payoff, samples, seed=cfg.params.seed)
    lo, hi = est.ci
    with open(out / "benchmark.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(BENCHMARK_COLUMNS)
        writer.writerow([repr(est.price), repr(lo), repr(hi), est.samples])
    return out


def write_speedup(path: Path, timings: dict[int, float], reference: int) -> list[list]:
    if reference not in timings:
        raise BSDEError(f"reference processor count {reference} has no timing")
    rows = []
    for p in sorted(timings):
        rows.append([p, timings[p], speedup((reference, timings[reference]), (p, timings[p]))])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SPEEDUP_COLUMNS)
        for p, t, s in rows:
            writer.writerow([p, repr(t), repr(s)])
    return rows


def run_speedup(cfg: RunConfig, worker_counts: list[int], reference: int | None = None,
                timings: dict[int, float] | None = None) -> Path:
    """Time the solver for each worker count (or use injected timings)."""
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    if timings is None:
        timings = {}
        for p in worker_counts:
            start = time.perf_counter()
            PicardSolver(cfg.model, cfg.payoff, cfg.params, p).run()
            timings[p] = time.perf_counter() - start
            log.info("P=%d: %.3fs", p, timings[p])
    if len(timings) < 2 and reference is None:
        reference = next(iter(timings))
    if reference is None:
        reference = 8 if 8 in timings else min(timings)
    write_speedup(out / "speedup.csv", timings, reference)
    return out


def _parse_timings(text: str) -> dict[int, float]:
    out = {}
    for item in text.split(","):
        p, t = item.split(":")
        out[int(p)] = float(t)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="picard-bsde", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--workers", type=int, help=f"worker processes (env {WORKERS_ENV})")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--out", help="output directory")
        return p

    common(sub.add_parser("solve", help="run the Picard solver"))
    bench = common(sub.add_parser("benchmark", help="plain Monte-Carlo European price"))
    bench.add_argument("--samples", type=int, default=2_000_000)
    sp = common(sub.add_parser("speedup", help="scaling report"))
    sp.add_argument("--worker-counts", default="1,2",
                    help="comma separated processor counts to time")
    sp.add_argument("--reference", type=int, help="reference processor count (default 8 if timed)")
    sp.add_argument("--timings", help="inject timings instead of running, e.g. 8:543.677,16:262.047")
    sub.add_parser("validate-config", help="check a configuration").add_argument("--config", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read configuration: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate-config":
        print(json.dumps(resolved_echo(cfg), indent=2))
        return 0

    cfg = _apply_overrides(cfg, args)
    try:
        if args.command == "solve":
            out = run_solve(cfg)
            summary = json.loads((out / "summary.json").read_text())
            print(f"Y0 = {summary['Y0']:.6f} (se {summary['Y0_se']:.6f}), delta = {summary['delta']}")
        elif args.command == "benchmark":
            out = run_benchmark(cfg, args.samples)
            print((out / "benchmark.csv").read_text(), end="")
        else:
            counts = [int(p) for p in args.worker_counts.split(",")]
            timings = _parse_timings(args.timings) if args.timings else None
            out = run_speedup(cfg, counts, args.reference, timings)
            print((out / "speedup.csv").read_text(), end="")
    except BSDEError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
