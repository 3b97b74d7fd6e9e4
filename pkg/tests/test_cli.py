import csv
import datetime as dt
from pathlib import Path

import pytest
import yaml

from vpmacd.calibration import GridResult, select_lambda
from vpmacd.cli import run
from vpmacd.config import load_config
from vpmacd.market_data import write_csv
from vpmacd.metrics import StrategyReport

from helpers import random_walk_series

STRATEGIES = [
    {"name": "Baseline MACD"},
    {"name": "MACD+lambda", "rule": "lambda_adjusted", "lambda": "calibrate"},
    {"name": "VP-MACD", "indicator": "vp_macd", "rule": "lambda_adjusted", "lambda": "calibrate"},
]


def make_workspace(tmp_path: Path, symbols=("AAA",), strategies=STRATEGIES, **extra) -> Path:
    for k, sym in enumerate(symbols):
        write_csv(random_walk_series(700, seed=100 + k, symbol=sym, start=dt.date(2019, 1, 1)), tmp_path / f"{sym}.csv")
    cfg = {
        "instruments": [{"symbol": s, "path": f"{s}.csv"} for s in symbols],
        "split": {"train_start": "2019-01-01", "train_end": "2020-06-30",
                  "test_start": "2020-07-01", "test_end": "2021-12-31"},
        "strategies": strategies,
        "tests": {"resamples": 200},
        "output_dir": "out",
        **extra,
    }
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(cfg, sort_keys=False))
    return path


def data_rows(path: Path) -> list[list[str]]:
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return list(csv.reader(lines))


def tree(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_backtest_three_strategies(tmp_path, capsys):
    cfg = make_workspace(tmp_path)
    assert run(["backtest", "--config", str(cfg)]) == 0
    rows = data_rows(tmp_path / "out" / "backtest" / "aaa__report.csv")
    assert rows[0][0] == "Strategy" and len(rows) == 4
    assert "Baseline MACD" in capsys.readouterr().out


def test_missing_input_file(tmp_path, capsys):
    cfg = make_workspace(tmp_path)
    (tmp_path / "AAA.csv").unlink()
    assert run(["backtest", "--config", str(cfg)]) == 1
    err = capsys.readouterr().err
    assert "AAA.csv" in err and len(err.strip().splitlines()) == 1


def test_missing_config(tmp_path, capsys):
    assert run(["backtest", "--config", str(tmp_path / "nope.yaml")]) == 1
    assert "nope.yaml" in capsys.readouterr().err


def test_bad_config_value(tmp_path):
    cfg = make_workspace(tmp_path, strategies=[{"name": "X", "rule": "lambda_adjusted", "lambda": 0.5}])
    assert run(["backtest", "--config", str(cfg)]) == 1


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        run(["frobnicate"])
    assert exc.value.code == 1


def test_bad_data_exit_code(tmp_path):
    cfg = make_workspace(tmp_path)
    p = tmp_path / "AAA.csv"
    lines = p.read_text().splitlines()
    lines[5] = lines[5].split(",")[0] + ",10,5,9,10,1000"  # high below low
    p.write_text("\n".join(lines) + "\n")
    assert run(["backtest", "--config", str(cfg)]) == 2


def test_report_rerun_is_byte_identical(tmp_path):
    cfg = make_workspace(tmp_path)
    assert run(["report", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert run(["report", "--config", str(cfg), "--out", str(tmp_path / "b")]) == 0
    a, b = tree(tmp_path / "a"), tree(tmp_path / "b")
    assert a.keys() == b.keys() and a == b
    assert "report.txt" in a


def test_calibrate_sweep_and_summary(tmp_path):
    cfg = make_workspace(tmp_path)
    assert run(["calibrate", "--config", str(cfg)]) == 0
    out = tmp_path / "out" / "calibration"
    for name in ("macd-lambda", "vp-macd"):
        rows = data_rows(out / f"aaa__{name}__sweep.csv")
        assert len(rows) == 1 + 11
        results = [GridResult(float(r[0]), StrategyReport(
            int(r[1]), *[None if x == "" else float(x) for x in r[2:]])) for r in rows[1:]]
        summary = {r[1]: r for r in data_rows(out / "lambda_summary.csv")[1:]}
        label = "MACD+lambda" if name == "macd-lambda" else "VP-MACD"
        assert float(summary[label][2]) == select_lambda(results).lam


def test_policy_override(tmp_path):
    policy = {"primary_key": "min:max_drawdown", "tie_breakers": ["sharpe"]}
    cfg = make_workspace(tmp_path, calibration={"policy": policy})
    assert run(["calibrate", "--config", str(cfg)]) == 0
    summary = data_rows(tmp_path / "out" / "calibration" / "lambda_summary.csv")
    assert summary[1][3].startswith("min:max_drawdown > max:sharpe")


def test_compare_rows_and_seed(tmp_path):
    cfg = make_workspace(tmp_path)
    assert run(["compare", "--config", str(cfg), "--seed", "42"]) == 0
    path = tmp_path / "out" / "compare" / "tests.csv"
    text = path.read_text()
    assert "# seed 42" in text.splitlines()
    rows = data_rows(path)
    assert len(rows) == 1 + 9
    first = text
    assert run(["compare", "--config", str(cfg), "--seed", "42"]) == 0
    assert path.read_text() == first
    assert run(["compare", "--config", str(cfg), "--seed", "43"]) == 0
    assert path.read_text() != first


def test_compare_needs_two_strategies(tmp_path):
    cfg = make_workspace(tmp_path, strategies=[{"name": "Only"}])
    assert run(["compare", "--config", str(cfg)]) == 1


def test_config_digest_changes_with_content(tmp_path):
    cfg = make_workspace(tmp_path)
    d1 = load_config(cfg).digest()
    assert load_config(cfg).digest() == d1
    assert load_config(cfg, seed=9).digest() != d1


@pytest.mark.parametrize("name", ["indices.yaml", "reference.yaml"])
def test_example_configs_run(tmp_path, name):
    repo = Path(__file__).resolve().parents[1]
    (tmp_path / "configs").mkdir()
    (tmp_path / "data").mkdir()
    cfg = tmp_path / "configs" / name
    cfg.write_text((repo / "configs" / name).read_text())
    for k, sym in enumerate(("SPY", "QQQ", "DIA")):
        write_csv(random_walk_series(2100, seed=k, symbol=sym, start=dt.date(2018, 1, 1)), tmp_path / "data" / f"{sym}.csv")
    assert run(["report", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
    rows = data_rows(tmp_path / "out" / "backtest" / "spy__report.csv")
    assert len(rows) == 4
    if name == "reference.yaml":
        assert "λ = 0.90" in rows[2][0] and "λ = 0.88" in rows[3][0]
