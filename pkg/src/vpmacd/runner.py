"""Command orchestration: load data, calibrate, backtest, compare, write outputs.

Each step returns in-memory results and optionally writes its files under an
output directory. Everything is sequential and ordered by the config, so a
rerun with the same inputs produces byte-identical files.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

from .backtest import Ledger, write_equity_csv, write_trades_csv
from .calibration import GridResult, Selection, select_lambda, sweep_lambda, write_sweep_csv
from .config import RunConfig, resolve_path
from .market_data import MarketDataError, OhlcvSeries, blocking_violations, parse_csv, validate
from .metrics import StrategyReport, build_report, render_table, write_report_csv
from .pipeline import Strategy, run_strategy
from .signals import Rule
from .stats import Method, PairResult, TestResult, compare_pair, write_histogram_csv, write_method_table, write_tests_csv


class DataError(ValueError):
    """Input data cannot support the requested run."""


def slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-") or "x"


def load_data(cfg: RunConfig, config_path: Path) -> dict[str, OhlcvSeries]:
    data = {}
    for inst in cfg.instruments:
        path = resolve_path(config_path, inst.path)
        try:
            series = parse_csv(path, inst.symbol)
        except MarketDataError as exc:
            raise DataError(f"{path}: {exc}") from None
        bad = blocking_violations(validate(series))
        if bad:
            first = bad[0]
            raise DataError(f"{path}: {len(bad)} invalid bar(s), first {first.rule} on {first.date}")
        data[inst.symbol] = series
    return data


@dataclass(frozen=True)
class Calibrated:
    symbol: str
    strategy: str
    results: tuple[GridResult, ...]
    selection: Selection


@dataclass(frozen=True)
class StrategyRun:
    symbol: str
    label: str
    strategy: Strategy
    ledger: Ledger
    report: StrategyReport


def _label(strategy: Strategy) -> str:
    if strategy.rule is Rule.LAMBDA_ADJUSTED:
        return f"{strategy.name} (λ = {strategy.lam:.2f})"
    return strategy.name


def calibrate(
    cfg: RunConfig,
    data: dict[str, OhlcvSeries],
    out: Path | None = None,
    only_pending: bool = False,
) -> dict[tuple[str, str], Calibrated]:
    """Sweep and select lambda for every lambda-rule strategy on the training window.

    With ``only_pending`` only strategies whose lambda is "calibrate" are swept.
    """
    split = cfg.split.to_spec()
    policy = cfg.calibration.policy.to_policy()
    bt = cfg.backtest_config()
    done: dict[tuple[str, str], Calibrated] = {}
    for sym, series in data.items():
        train = series.between(split.train_start, split.train_end)
        history = series if cfg.indicator_history == "full" else None
        for model in cfg.strategies:
            if model.rule is not Rule.LAMBDA_ADJUSTED or (only_pending and not model.calibrated):
                continue
            strat = cfg.strategy(model, sym)
            try:
                results = sweep_lambda(train, strat, cfg.calibration.grid, bt, history=history, ddof=cfg.sharpe_ddof)
            except ValueError as exc:
                raise DataError(f"{sym}/{model.name}: calibration failed: {exc}") from None
            try:
                selection = select_lambda(results, policy)
            except ValueError as exc:
                raise DataError(f"{sym}/{model.name}: {exc}") from None
            done[(sym, model.name)] = Calibrated(sym, model.name, tuple(results), selection)
    if out is not None and done:
        _write_calibration(cfg, done, out / "calibration")
    return done


def _write_calibration(cfg: RunConfig, done: dict[tuple[str, str], Calibrated], out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    header = cfg.header()
    split = cfg.split
    for (sym, name), cal in done.items():
        write_sweep_csv(
            cal.results,
            out / f"{slug(sym)}__{slug(name)}__sweep.csv",
            header + [f"instrument {sym}", f"strategy {name}", f"train {split.train_start}..{split.train_end}"],
        )
    with (out / "lambda_summary.csv").open("w", newline="", encoding="utf-8") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["instrument", "strategy", "lambda", "criterion"])
        for (sym, name), cal in done.items():
            w.writerow([sym, name, f"{cal.selection.lam:.2f}", cal.selection.criterion])
    (out / "lambda_summary.txt").write_text(render_lambda_table(done), encoding="utf-8")


def render_lambda_table(done: dict[tuple[str, str], Calibrated]) -> str:
    symbols = list(dict.fromkeys(sym for sym, _ in done))
    names = list(dict.fromkeys(name for _, name in done))
    rows = [["Index", *names, "Selection Criterion"]]
    for sym in symbols:
        crit = next(c.selection.criterion for (s, _), c in done.items() if s == sym)
        cells = [f"{done[(sym, n)].selection.lam:.2f}" if (sym, n) in done else "—" for n in names]
        rows.append([sym, *cells, crit])
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for k, row in enumerate(rows):
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def resolve_strategies(
    cfg: RunConfig,
    data: dict[str, OhlcvSeries],
    out: Path | None = None,
    calibrated: dict[tuple[str, str], Calibrated] | None = None,
) -> dict[str, list[Strategy]]:
    """Concrete strategies per instrument, calibrating any lambda left as "calibrate"."""
    cal = calibrated
    if cal is None:
        pending = any(m.calibrated for m in cfg.strategies)
        cal = calibrate(cfg, data, out, only_pending=True) if pending else {}
    resolved: dict[str, list[Strategy]] = {}
    for sym in data:
        strategies = []
        for model in cfg.strategies:
            lam = cal[(sym, model.name)].selection.lam if model.calibrated else None
            strategies.append(cfg.strategy(model, sym, lam))
        resolved[sym] = strategies
    return resolved


def backtest(
    cfg: RunConfig,
    data: dict[str, OhlcvSeries],
    out: Path | None = None,
    calibrated: dict[tuple[str, str], Calibrated] | None = None,
) -> dict[str, list[StrategyRun]]:
    split = cfg.split.to_spec()
    bt = cfg.backtest_config()
    runs: dict[str, list[StrategyRun]] = {}
    for sym, strategies in resolve_strategies(cfg, data, out, calibrated).items():
        series = data[sym]
        sym_runs = []
        for strat in strategies:
            try:
                ledger = run_strategy(
                    series, strat, bt, split.test_start, split.test_end,
                    warmup_history=cfg.indicator_history == "full",
                )
            except ValueError as exc:
                raise DataError(f"{sym}/{strat.name}: {exc}") from None
            sym_runs.append(StrategyRun(sym, _label(strat), strat, ledger, build_report(ledger, bt, cfg.sharpe_ddof)))
        runs[sym] = sym_runs
    if out is not None:
        _write_backtest(cfg, runs, out / "backtest")
    return runs


def render_reports(cfg: RunConfig, runs: dict[str, list[StrategyRun]]) -> str:
    split = cfg.split
    blocks = []
    for sym, sym_runs in runs.items():
        title = f"{sym}  test {split.test_start}..{split.test_end}"
        blocks.append(render_table([(r.label, r.report) for r in sym_runs], title))
    return "\n".join(blocks)


def _write_backtest(cfg: RunConfig, runs: dict[str, list[StrategyRun]], out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    header = cfg.header()
    for sym, sym_runs in runs.items():
        h = header + [f"instrument {sym}", f"test {cfg.split.test_start}..{cfg.split.test_end}"]
        write_report_csv([(r.label, r.report) for r in sym_runs], out / f"{slug(sym)}__report.csv", h)
        for r in sym_runs:
            stem = f"{slug(sym)}__{slug(r.strategy.name)}"
            sh = h + [f"strategy {r.label}"]
            write_trades_csv(r.ledger, out / f"{stem}__trades.csv", sh)
            write_equity_csv(r.ledger, out / f"{stem}__equity.csv", sh)
    text = "\n".join(f"# {line}" for line in header) + "\n\n" + render_reports(cfg, runs)
    (out / "report.txt").write_text(text, encoding="utf-8")


def compare(
    cfg: RunConfig,
    runs: dict[str, list[StrategyRun]],
    out: Path | None = None,
) -> list[tuple[str, PairResult]]:
    tests = cfg.tests.to_config()
    rows: list[tuple[str, PairResult]] = []
    for sym, sym_runs in runs.items():
        by_name = {r.strategy.name: r for r in sym_runs}
        for k, (new, old) in enumerate(cfg.pair_list(), start=1):
            try:
                pair = compare_pair(
                    by_name[new].ledger.equity, by_name[old].ledger.equity, tests,
                    label=f"Pair {k}", new_name=new, old_name=old,
                )
            except ValueError as exc:
                raise DataError(f"{sym}: {exc}") from None
            rows.append((sym, pair))
    if out is not None:
        _write_compare(cfg, rows, out / "compare")
    return rows


def _write_compare(cfg: RunConfig, rows: list[tuple[str, PairResult]], out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    t = cfg.tests
    header = cfg.header() + [
        f"seed {t.seed}", f"resamples {t.resamples}", f"block_len {t.block_len}", f"nw_lag {t.nw_lag}",
    ]
    write_tests_csv(rows, out / "tests.csv", header)
    for method, name in ((Method.TTEST, "ttest"), (Method.NEWEY_WEST, "newey_west"), (Method.BLOCK_BOOTSTRAP, "bootstrap")):
        write_method_table(rows, method, out / f"{name}_table.csv", header)
    for sym, pair in rows:
        res = pair.results[Method.BLOCK_BOOTSTRAP]
        if isinstance(res, TestResult):
            write_histogram_csv(
                res, t.histogram_bins,
                out / f"{slug(sym)}__{slug(pair.label)}__bootstrap_hist.csv",
                header + [f"instrument {sym}", f"{pair.label}: {pair.new} vs. {pair.old}"],
            )


def render_tests(rows: list[tuple[str, PairResult]]) -> str:
    lines = [f"{'Instrument':<10}  {'Comparison':<40}  {'Method':<15}  {'stat':>9}  {'p':>7}"]
    for sym, pair in rows:
        for method in Method:
            res = pair.results[method]
            cmp = f"{pair.label}: {pair.new} vs. {pair.old}"
            if isinstance(res, TestResult):
                stat = "—" if res.statistic is None else f"{res.statistic:.4f}"
                lines.append(f"{sym:<10}  {cmp:<40}  {method.value:<15}  {stat:>9}  {res.p_value:>7.4f}")
            else:
                lines.append(f"{sym:<10}  {cmp:<40}  {method.value:<15}  {res:>17}")
    return "\n".join(lines) + "\n"
