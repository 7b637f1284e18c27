"""JSON run configuration: parsing, validation and object construction.

Example::

    {
      "model": {"kind": "black_scholes", "dimension": 5, "spot": 100,
                "rate": 0.05, "dividend": 0.0, "volatility": 0.2,
                "correlation": 0.1, "maturity": 3.0},
      "payoff": {"kind": "put", "strike": 100},
      "solver": {"iterations": 10, "points": 1000, "samples": 50000,
                 "eta": 3, "q": 1.0, "penalty": 0.0, "seed": 1},
      "workers": 4,
      "output": "runs/put5"
    }

Every violation is reported with its dotted path; unknown keys are errors.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

from .basis import FAMILIES
from .engine import SolverParams
from .errors import ParameterError
from .models import BLACK_SCHOLES, DUPIRE, BasketPayoff, ModelSpec, admissible_correlation, black_scholes, dupire


class ConfigError(ParameterError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))


_MODEL_KEYS = {
    "kind": str, "dimension": int, "spot": "vector", "rate": float, "dividend": "vector",
    "volatility": "vector", "correlation": float, "maturity": float, "smile_center": "vector",
}
_PAYOFF_KEYS = {"kind": str, "strike": float}
_SOLVER_KEYS = {
    "iterations": int, "points": int, "samples": int, "time_steps": int, "penalty": float,
    "eta": int, "q": float, "kappa": float, "family": str, "seed": int, "ridge": float,
    "exact_bs": bool, "valuation_samples": "optional_int",
}
_TOP_KEYS = {"model", "payoff", "solver", "workers", "output"}


@dataclass
class RunConfig:
    model: ModelSpec
    payoff: BasketPayoff
    params: SolverParams
    workers: int = 1
    output: str = "out"

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "payoff": self.payoff.to_dict(),
            "solver": {f.name: getattr(self.params, f.name) for f in fields(self.params)},
            "workers": self.workers,
            "output": self.output,
        }


def _typed(value, kind, path, problems):
    if kind == "vector":
        if isinstance(value, list):
            for i, v in enumerate(value):
                _typed(v, float, f"{path}[{i}]", problems)
            return value
        return _typed(value, float, path, problems)
    if kind == "optional_int":
        return None if value is None else _typed(value, int, path, problems)
    if kind is bool:
        if not isinstance(value, bool):
            problems.append(f"{path}: expected a boolean, got {value!r}")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            problems.append(f"{path}: expected an integer, got {value!r}")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            problems.append(f"{path}: expected a finite number, got {value!r}")
        return value
    if not isinstance(value, kind):
        problems.append(f"{path}: expected {kind.__name__}, got {value!r}")
    return value


def _section(raw, name, schema, required, problems) -> dict:
    sec = raw.get(name)
    if not isinstance(sec, dict):
        problems.append(f"{name}: missing or not an object")
        return {}
    for key in sec:
        if key not in schema:
            problems.append(f"{name}.{key}: unknown key")
    for key in required:
        if key not in sec:
            problems.append(f"{name}.{key}: missing required field")
    return {k: _typed(v, schema[k], f"{name}.{k}", problems) for k, v in sec.items() if k in schema}


def _vector_ok(value, d, path, problems, positive=False):
    if isinstance(value, list) and len(value) != d:
        problems.append(f"{path}: expected {d} entries, got {len(value)}")
        return False
    vals = value if isinstance(value, list) else [value]
    if positive and any(isinstance(v, (int, float)) and v <= 0 for v in vals):
        problems.append(f"{path}: must be positive")
        return False
    return True


def parse_config_dict(raw: dict) -> RunConfig:
    problems: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["top level must be a JSON object"])
    for key in raw:
        if key not in _TOP_KEYS:
            problems.append(f"{key}: unknown key")

    m = _section(raw, "model", _MODEL_KEYS, ("kind", "dimension", "spot", "rate", "correlation", "maturity"),
                 problems)
    pay = _section(raw, "payoff", _PAYOFF_KEYS, ("kind", "strike"), problems)
    sol = _section(raw, "solver", _SOLVER_KEYS, (), problems)

    workers = raw.get("workers", 1)
    _typed(workers, int, "workers", problems)
    if isinstance(workers, int) and workers < 1:
        problems.append("workers: must be >= 1")
    output = raw.get("output", "out")
    _typed(output, str, "output", problems)

    kind = m.get("kind")
    if kind is not None and kind not in (BLACK_SCHOLES, DUPIRE):
        problems.append(f"model.kind: must be '{BLACK_SCHOLES}' or '{DUPIRE}', got {kind!r}")
    d = m.get("dimension")
    if isinstance(d, int) and d < 1:
        problems.append("model.dimension: must be >= 1")
        d = None
    if isinstance(d, int):
        if "spot" in m:
            _vector_ok(m["spot"], d, "model.spot", problems, positive=True)
        if "dividend" in m:
            _vector_ok(m["dividend"], d, "model.dividend", problems)
        if "smile_center" in m:
            _vector_ok(m["smile_center"], d, "model.smile_center", problems, positive=True)
        rho = m.get("correlation")
        if isinstance(rho, (int, float)) and not isinstance(rho, bool):
            lo, hi = admissible_correlation(d)
            if not rho < hi or (d > 1 and not rho > lo):
                problems.append(f"model.correlation: {rho} outside the admissible interval ({lo:g}, {hi:g})")
    if isinstance(m.get("maturity"), (int, float)) and m["maturity"] <= 0:
        problems.append("model.maturity: must be positive")
    if kind == BLACK_SCHOLES:
        if "volatility" not in m:
            problems.append("model.volatility: required for the black_scholes model")
        elif isinstance(d, int):
            _vector_ok(m["volatility"], d, "model.volatility", problems, positive=True)
    if kind == DUPIRE and "volatility" in m:
        problems.append("model.volatility: not used by the dupire model (local volatility is fixed)")

    if pay.get("kind") is not None and pay["kind"] not in ("put", "call", "constant"):
        problems.append(f"payoff.kind: must be 'put', 'call' or 'constant', got {pay['kind']!r}")
    if isinstance(pay.get("strike"), (int, float)) and pay["strike"] < 0:
        problems.append("payoff.strike: must be >= 0")

    if "family" in sol and sol["family"] not in FAMILIES:
        problems.append(f"solver.family: must be one of {sorted(FAMILIES)}")
    if not problems:
        try:
            SolverParams(**sol)
        except ParameterError as exc:
            problems += [f"solver: {p}" for p in str(exc).split("; ")]

    if problems:
        raise ConfigError(problems)

    common = dict(d=d, spot=m["spot"], rate=m["rate"], dividend=m.get("dividend", 0.0),
                  correlation=m["correlation"], maturity=m["maturity"])
    if kind == BLACK_SCHOLES:
        model = black_scholes(volatility=m["volatility"], **common)
    else:
        model = dupire(smile_center=m.get("smile_center"), **common)
    return RunConfig(model, BasketPayoff(pay["kind"], float(pay["strike"])), SolverParams(**sol),
                     workers, output)


def parse_config(path) -> RunConfig:
    """Load and fully validate a JSON run configuration."""
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"not valid JSON: {exc}"]) from exc
    return parse_config_dict(raw)
