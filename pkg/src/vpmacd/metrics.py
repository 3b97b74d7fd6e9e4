"""Trade- and equity-level performance metrics.

Undefined metrics (no trades, no losses, zero return variance) are carried
as ``None`` in :class:`StrategyReport`, shown as "—" in text tables and as
an empty cell in CSV.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .backtest import BacktestConfig, EquityCurve, Ledger, Trade, daily_returns

TRADING_DAYS = 252
ABSENT = "—"

TABLE_COLUMNS = ("Strategy", "Trades", "Win Rate", "Total PnL", "PnL Ratio", "Sharpe", "Max DD", "Expectancy")


class MetricUndefined(ValueError):
    """Raised when a metric has no meaningful value for the input."""


class NoTrades(MetricUndefined):
    pass


class NoLosses(MetricUndefined):
    pass


class ZeroVariance(MetricUndefined):
    pass


@dataclass(frozen=True)
class StrategyReport:
    total_trades: int
    win_ratio: float | None
    total_pnl: float
    pnl_ratio: float | None
    sharpe: float | None
    max_drawdown: float
    expectancy: float | None

    def get(self, name: str) -> float | None:
        return getattr(self, name)


METRIC_NAMES = tuple(StrategyReport.__dataclass_fields__)


def _pnls(trades: Iterable[Trade | float]) -> np.ndarray:
    return np.array([t.pnl if isinstance(t, Trade) else t for t in trades], dtype=np.float64)


def win_ratio(trades: Sequence[Trade | float]) -> float:
    """Share of trades with strictly positive pnl; breakeven trades are not wins."""
    pnl = _pnls(trades)
    if pnl.size == 0:
        raise NoTrades("win ratio needs at least one trade")
    return int((pnl > 0).sum()) / pnl.size


def pnl_ratio(trades: Sequence[Trade | float]) -> float:
    """Average win over average loss magnitude.

    Losing trades are all non-winners, so breakeven trades dilute the average
    loss. Returns 0.0 when there are losses but no wins.
    """
    pnl = _pnls(trades)
    if pnl.size == 0:
        raise NoTrades("pnl ratio needs at least one trade")
    wins = pnl[pnl > 0]
    losses = pnl[pnl <= 0]
    loss_total = -math.fsum(losses)
    if losses.size == 0 or loss_total == 0:
        raise NoLosses("pnl ratio undefined without losing trades")
    if wins.size == 0:
        return 0.0
    return (math.fsum(wins) / wins.size) / (loss_total / losses.size)


def expectancy(trades: Sequence[Trade | float]) -> float:
    pnl = _pnls(trades)
    if pnl.size == 0:
        raise NoTrades("expectancy needs at least one trade")
    wins = pnl[pnl > 0]
    losses = pnl[pnl <= 0]
    w = wins.size / pnl.size
    avg_gain = math.fsum(wins) / wins.size if wins.size else 0.0
    avg_loss = -math.fsum(losses) / losses.size if losses.size else 0.0
    return w * avg_gain - (1.0 - w) * avg_loss


def total_pnl(equity: EquityCurve | Sequence[float]) -> float:
    values = equity.values if isinstance(equity, EquityCurve) else np.asarray(equity, dtype=np.float64)
    if len(values) == 0:
        raise ValueError("empty equity curve")
    return float(values[-1] - values[0])


def sharpe(returns: Sequence[float], ddof: int = 1, periods: int = TRADING_DAYS) -> float:
    """Annualised mean/std of periodic returns, zero risk-free rate."""
    r = np.asarray(returns, dtype=np.float64)
    if r.size < 2:
        raise ZeroVariance("need at least two returns")
    sd = float(np.std(r, ddof=ddof))
    if np.all(r == r[0]) or not math.isfinite(sd):
        raise ZeroVariance("returns have zero variance")
    return float(np.mean(r)) / sd * math.sqrt(periods)


def max_drawdown(equity: EquityCurve | Sequence[float]) -> float:
    values = equity.values if isinstance(equity, EquityCurve) else np.asarray(equity, dtype=np.float64)
    if len(values) == 0:
        raise ValueError("empty equity curve")
    peak = np.maximum.accumulate(values)
    return float(np.max((peak - values) / peak))


def _maybe(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except MetricUndefined:
        return None


def build_report(ledger: Ledger, config: BacktestConfig | None = None, ddof: int = 1) -> StrategyReport:
    trades = ledger.trades
    rets = daily_returns(ledger.equity) if len(ledger.equity) >= 2 else np.array([])
    return StrategyReport(
        total_trades=len(trades),
        win_ratio=_maybe(win_ratio, trades),
        total_pnl=total_pnl(ledger.equity),
        pnl_ratio=_maybe(pnl_ratio, trades),
        sharpe=_maybe(sharpe, rets, ddof=ddof),
        max_drawdown=max_drawdown(ledger.equity),
        expectancy=_maybe(expectancy, trades),
    )


def _fmt(value: float | None, pattern: str) -> str:
    return ABSENT if value is None else pattern.format(value)


def _money(value: float | None) -> str:
    if value is None:
        return ABSENT
    sign = "-" if value < 0 else ""
    return f"{sign}${abs(value):,.2f}"


def format_row(name: str, rep: StrategyReport) -> list[str]:
    """Human-readable cells in table order; drawdown shown as a negative percent."""
    return [
        name,
        str(rep.total_trades),
        _fmt(None if rep.win_ratio is None else rep.win_ratio * 100, "{:.2f}%"),
        _money(rep.total_pnl),
        _fmt(rep.pnl_ratio, "{:.2f}"),
        _fmt(rep.sharpe, "{:.2f}"),
        f"{-rep.max_drawdown * 100:.2f}%",
        _money(rep.expectancy),
    ]


def render_table(rows: Sequence[tuple[str, StrategyReport]], title: str = "") -> str:
    cells = [list(TABLE_COLUMNS)] + [format_row(name, rep) for name, rep in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(TABLE_COLUMNS))]
    lines = [title] if title else []
    for k, row in enumerate(cells):
        parts = [row[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(parts).rstrip())
        if k == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _num(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_report_csv(
    rows: Sequence[tuple[str, StrategyReport]], path: str | Path, header: Sequence[str] = ()
) -> None:
    """Machine-readable report; absent metrics are empty cells."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE_COLUMNS)
        for name, rep in rows:
            w.writerow(
                [name, rep.total_trades, _num(rep.win_ratio), _num(rep.total_pnl), _num(rep.pnl_ratio),
                 _num(rep.sharpe), _num(rep.max_drawdown), _num(rep.expectancy)]
            )


def report_dict(rep: StrategyReport) -> dict:
    return asdict(rep)
