import copy
import csv
import json
from pathlib import Path

import pytest

from picard_bsde.cli import main
from picard_bsde.config import ConfigError, parse_config, parse_config_dict

DEMOS = Path(__file__).resolve().parents[1] / "demos" / "configs"
GOLDEN = Path(__file__).parent / "data" / "golden_headers.csv"

SMALL = {
    "model": {"kind": "black_scholes", "dimension": 2, "spot": 100, "rate": 0.05,
              "dividend": 0.0, "volatility": 0.2, "correlation": 0.1, "maturity": 1.0},
    "payoff": {"kind": "put", "strike": 100},
    "solver": {"iterations": 2, "points": 30, "samples": 200, "seed": 3},
    "workers": 1,
}


def golden():
    with open(GOLDEN) as fh:
        return {row[0]: row[1:] for row in csv.reader(fh)}


def write_config(tmp_path, raw, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return path


def test_put5_config_reports_p84(capsys):
    assert main(["validate-config", "--config", str(DEMOS / "put5_bs.json")]) == 0
    echo = json.loads(capsys.readouterr().out)
    assert echo["derived"]["p"] == 84
    assert len(echo["derived"]["domain"]["lower"]) == 5


@pytest.mark.parametrize("name", sorted(p.name for p in DEMOS.glob("*.json")))
def test_bundled_configs_parse(name):
    parse_config(DEMOS / name)


def test_correlation_rejection_names_interval():
    raw = copy.deepcopy(SMALL)
    raw["model"].update(dimension=5, correlation=-0.5)
    with pytest.raises(ConfigError, match=r"model.correlation.*\(-0.25, 1\)"):
        parse_config_dict(raw)


def test_negative_penalty_rejected():
    raw = copy.deepcopy(SMALL)
    raw["solver"]["penalty"] = -1
    with pytest.raises(ConfigError, match="penalty"):
        parse_config_dict(raw)


def test_all_violations_reported():
    raw = copy.deepcopy(SMALL)
    raw["model"]["spot"] = "x"
    raw["model"]["colour"] = 1
    del raw["model"]["maturity"]
    raw["payoff"]["kind"] = "digital"
    with pytest.raises(ConfigError) as info:
        parse_config_dict(raw)
    text = "\n".join(info.value.problems)
    for key in ("model.spot", "model.colour: unknown key", "model.maturity: missing", "payoff.kind"):
        assert key in text


def test_validate_config_exit_code(tmp_path, capsys):
    raw = copy.deepcopy(SMALL)
    raw["solver"]["q"] = 2.0
    assert main(["validate-config", "--config", str(write_config(tmp_path, raw))]) == 2
    assert "q must" in capsys.readouterr().err


def test_solve_writes_outputs(tmp_path):
    cfg = write_config(tmp_path, SMALL)
    out = tmp_path / "run"
    assert main(["solve", "--config", str(cfg), "--out", str(out), "--seed", "5"]) == 0
    with open(out / "convergence.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == golden()["convergence_d2"]
    assert [r[0] for r in rows[1:]] == ["1", "2"]
    echo = json.loads((out / "config_resolved.json").read_text())
    assert echo["solver"]["seed"] == 5 and echo["derived"]["p"] == 20
    summary = json.loads((out / "summary.json").read_text())
    assert float(rows[-1][1]) == summary["Y0"]


def test_solve_constant_payoff_single_row(tmp_path):
    raw = copy.deepcopy(SMALL)
    raw["model"]["rate"] = 0.0
    raw["payoff"] = {"kind": "constant", "strike": 7.0}
    raw["solver"]["iterations"] = 1
    out = tmp_path / "run"
    assert main(["solve", "--config", str(write_config(tmp_path, raw)), "--out", str(out)]) == 0
    rows = list(csv.reader(open(out / "convergence.csv")))
    assert len(rows) == 2
    assert float(rows[1][1]) == pytest.approx(7.0, rel=1e-12)


def test_workers_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("PICARD_BSDE_WORKERS", "2")
    out = tmp_path / "run"
    assert main(["solve", "--config", str(write_config(tmp_path, SMALL)), "--out", str(out)]) == 0
    assert json.loads((out / "summary.json").read_text())["workers"] == 2


def test_speedup_injected_timings(tmp_path):
    out = tmp_path / "sp"
    cfg = write_config(tmp_path, SMALL)
    assert main(["speedup", "--config", str(cfg), "--out", str(out),
                 "--timings", "8:543.677,16:262.047"]) == 0
    rows = list(csv.reader(open(out / "speedup.csv")))
    assert rows[0] == golden()["speedup"]
    assert float(rows[1][2]) == 1.0
    assert round(float(rows[2][2]), 5) == 1.03737


def test_speedup_single_reference(tmp_path):
    out = tmp_path / "sp"
    cfg = write_config(tmp_path, SMALL)
    assert main(["speedup", "--config", str(cfg), "--out", str(out), "--timings", "8:12.0"]) == 0
    rows = list(csv.reader(open(out / "speedup.csv")))
    assert float(rows[1][2]) == 1.0


def test_speedup_measured(tmp_path):
    out = tmp_path / "sp"
    cfg = write_config(tmp_path, SMALL)
    assert main(["speedup", "--config", str(cfg), "--out", str(out), "--worker-counts", "1,2"]) == 0
    rows = list(csv.reader(open(out / "speedup.csv")))
    assert [r[0] for r in rows[1:]] == ["1", "2"]


def test_benchmark(tmp_path):
    out = tmp_path / "bm"
    cfg = write_config(tmp_path, SMALL)
    assert main(["benchmark", "--config", str(cfg), "--out", str(out), "--samples", "20000"]) == 0
    rows = list(csv.reader(open(out / "benchmark.csv")))
    assert rows[0] == golden()["benchmark"]
    price, lo, hi, n = map(float, rows[1])
    assert lo < price < hi and n == 20000


def test_missing_config_file(tmp_path, capsys):
    assert main(["solve", "--config", str(tmp_path / "nope.json")]) == 2
