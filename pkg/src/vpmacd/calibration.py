"""Grid search over the buy-threshold multiplier and deterministic selection."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .backtest import BacktestConfig, run_backtest
from .metrics import METRIC_NAMES, StrategyReport, build_report
from .pipeline import Strategy, compute_triple, signals_in_window
from .market_data import OhlcvSeries
from .signals import check_lambda, lambda_adjusted_signals

DEFAULT_GRID: tuple[float, ...] = tuple(round(0.80 + 0.02 * k, 2) for k in range(11))

# metrics where smaller is better
ASCENDING_METRICS = frozenset({"max_drawdown"})


class NoFeasibleLambda(ValueError):
    pass


@dataclass(frozen=True)
class GridResult:
    lam: float
    report: StrategyReport


@dataclass(frozen=True)
class MetricKey:
    name: str
    ascending: bool = False

    def __post_init__(self) -> None:
        if self.name not in METRIC_NAMES:
            raise ValueError(f"unknown metric {self.name!r}; expected one of {', '.join(METRIC_NAMES)}")

    @classmethod
    def parse(cls, text: "str | MetricKey") -> "MetricKey":
        """``"sharpe"``, ``"min:max_drawdown"`` or ``"max:expectancy"``."""
        if isinstance(text, MetricKey):
            return text
        if ":" in text:
            direction, name = text.split(":", 1)
            if direction not in ("min", "max"):
                raise ValueError(f"bad direction {direction!r} in {text!r}")
            return cls(name, direction == "min")
        return cls(text, text in ASCENDING_METRICS)

    def __str__(self) -> str:
        return f"{'min' if self.ascending else 'max'}:{self.name}"

    def score(self, report: StrategyReport) -> float:
        """Larger is better; absent metrics rank last."""
        value = report.get(self.name)
        if value is None or (isinstance(value, float) and math.isnan(value)):
            return -math.inf
        return -float(value) if self.ascending else float(value)


@dataclass(frozen=True)
class SelectionPolicy:
    primary_key: MetricKey = field(default_factory=lambda: MetricKey("sharpe"))
    tie_breakers: tuple[MetricKey, ...] = (MetricKey("expectancy"), MetricKey("max_drawdown", ascending=True))
    # metric -> (lower, upper); either bound may be None
    constraints: Mapping[str, tuple[float | None, float | None]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "primary_key", MetricKey.parse(self.primary_key))
        object.__setattr__(self, "tie_breakers", tuple(MetricKey.parse(k) for k in self.tie_breakers))
        for name in self.constraints:
            if name not in METRIC_NAMES:
                raise ValueError(f"unknown metric {name!r} in constraints")

    @property
    def keys(self) -> tuple[MetricKey, ...]:
        return (self.primary_key, *self.tie_breakers)

    def feasible(self, report: StrategyReport) -> bool:
        for name, (lo, hi) in self.constraints.items():
            value = report.get(name)
            if value is None:
                return False
            if lo is not None and value < lo:
                return False
            if hi is not None and value > hi:
                return False
        return True


@dataclass(frozen=True)
class Selection:
    lam: float
    criterion: str
    ranking: tuple[tuple[float, tuple[float, ...]], ...]
    comparisons: tuple[str, ...]
    excluded: tuple[float, ...] = ()


def sweep_lambda(
    train: OhlcvSeries,
    strategy: Strategy,
    grid: Sequence[float] = DEFAULT_GRID,
    config: BacktestConfig = BacktestConfig(),
    history: OhlcvSeries | None = None,
    ddof: int = 1,
) -> list[GridResult]:
    """One backtest + report per grid value on the training bars, ascending in lambda.

    ``history`` (bars up to the end of ``train``) is used for indicator
    warm-up when given; the indicator lines are computed once and shared
    across grid points.
    """
    base = history.between(None, train.dates[-1]) if history is not None else train
    triple = compute_triple(base, strategy)
    out = []
    for lam in sorted(check_lambda(g) for g in grid):
        sigs = signals_in_window(lambda_adjusted_signals(triple, lam), train.dates[0], train.dates[-1])
        ledger = run_backtest(train, sigs, config)
        out.append(GridResult(lam, build_report(ledger, config, ddof)))
    return out


def select_lambda(results: Sequence[GridResult], policy: SelectionPolicy = SelectionPolicy()) -> Selection:
    """Lexicographic choice over the policy keys; exact ties go to the smaller lambda."""
    if not results:
        raise NoFeasibleLambda("no grid results to choose from")
    feasible = [r for r in results if policy.feasible(r.report)]
    excluded = tuple(sorted(r.lam for r in results if not policy.feasible(r.report)))
    if not feasible:
        raise NoFeasibleLambda("no grid value satisfies the selection constraints")

    keys = policy.keys
    scored = [(tuple(k.score(r.report) for k in keys), r.lam) for r in feasible]
    scored.sort(key=lambda item: (tuple(-s for s in item[0]), item[1]))
    best_scores, best_lam = scored[0]

    comparisons = []
    for scores, lam in scored[1:]:
        decided = "lambda (exact tie)"
        for key, a, b in zip(keys, best_scores, scores):
            if a != b:
                decided = str(key)
                break
        comparisons.append(f"{best_lam:.2f} over {lam:.2f} by {decided}")

    criterion = " > ".join(str(k) for k in keys)
    return Selection(
        lam=best_lam,
        criterion=criterion,
        ranking=tuple((lam, scores) for scores, lam in scored),
        comparisons=tuple(comparisons),
        excluded=excluded,
    )


SWEEP_COLUMNS = ("lambda", "trades", "win_ratio", "total_pnl", "pnl_ratio", "sharpe", "max_drawdown", "expectancy")


def _num(x) -> str:
    return "" if x is None else repr(float(x))


def write_sweep_csv(results: Sequence[GridResult], path: str | Path, header: Sequence[str] = ()) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in results:
            rep = r.report
            w.writerow([f"{r.lam:.2f}", rep.total_trades, _num(rep.win_ratio), _num(rep.total_pnl),
                        _num(rep.pnl_ratio), _num(rep.sharpe), _num(rep.max_drawdown), _num(rep.expectancy)])
