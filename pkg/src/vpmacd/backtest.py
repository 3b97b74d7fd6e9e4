"""Long-only, next-open execution portfolio simulation.

A signal dated on bar t is executed at the open of bar t+1. Costs are applied
multiplicatively to the execution price: buys fill at ``open * (1 + c)`` and
sells at ``open * (1 - c)`` with ``c = one_way_cost_bps / 10_000``. Equity is
marked to each bar's close.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .market_data import OhlcvSeries
from .signals import Side, TradeSignal

log = logging.getLogger(__name__)


class SignalDateNotInSeries(KeyError):
    def __init__(self, date: dt.date) -> None:
        super().__init__(f"signal date {date} not in series")
        self.date = date


class SeriesTooShort(ValueError):
    pass


@dataclass(frozen=True)
class BacktestConfig:
    initial_capital: float = 100_000.0
    one_way_cost_bps: float = 4.0
    min_unit: int = 1

    def __post_init__(self) -> None:
        if not self.initial_capital > 0:
            raise ValueError("initial_capital must be positive")
        if self.one_way_cost_bps < 0:
            raise ValueError("one_way_cost_bps must be non-negative")
        if self.min_unit < 1:
            raise ValueError("min_unit must be >= 1")

    @property
    def cost_rate(self) -> float:
        return self.one_way_cost_bps / 10_000.0


@dataclass(frozen=True)
class Trade:
    entry_date: dt.date
    exit_date: dt.date
    entry_price: float
    exit_price: float
    shares: int
    pnl: float


@dataclass(frozen=True)
class OpenPosition:
    entry_date: dt.date
    entry_price: float
    shares: int


@dataclass(frozen=True)
class SkippedSignal:
    date: dt.date
    side: Side
    reason: str


@dataclass(frozen=True, eq=False)
class EquityCurve:
    dates: tuple[dt.date, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if len(values) != len(self.dates):
            raise ValueError("values and dates differ in length")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Ledger:
    trades: tuple[Trade, ...]
    equity: EquityCurve
    open_position: OpenPosition | None = None
    cash: np.ndarray | None = field(default=None, repr=False)
    shares: np.ndarray | None = field(default=None, repr=False)
    skipped: tuple[SkippedSignal, ...] = ()


def run_backtest(
    series: OhlcvSeries,
    signals: Sequence[TradeSignal],
    config: BacktestConfig = BacktestConfig(),
) -> Ledger:
    n = len(series)
    by_index: dict[int, Side] = {}
    for sig in signals:
        try:
            i = series.index_of(sig.date)
        except KeyError:
            raise SignalDateNotInSeries(sig.date) from None
        by_index[i] = sig.side

    c = config.cost_rate
    unit = config.min_unit
    cash = float(config.initial_capital)
    held = 0
    entry: OpenPosition | None = None
    trades: list[Trade] = []
    skipped: list[SkippedSignal] = []
    equity = np.empty(n)
    cash_path = np.empty(n)
    share_path = np.empty(n, dtype=np.int64)

    pending: tuple[int, Side] | None = None
    for t in range(n):
        if pending is not None:
            sig_t, side = pending
            pending = None
            opened = float(series.open[t])
            if side is Side.BUY:
                price = opened * (1.0 + c)
                shares = int(math.floor(cash / price / unit)) * unit
                while shares > 0 and shares * price > cash:
                    shares -= unit
                if shares == 0:
                    skipped.append(SkippedSignal(series.dates[sig_t], side, "InsufficientCapital"))
                    log.warning(
                        "%s: buy on %s skipped, cash %.2f below one unit at %.4f",
                        series.symbol, series.dates[sig_t], cash, price,
                    )
                else:
                    cash -= shares * price
                    held = shares
                    entry = OpenPosition(series.dates[t], price, shares)
            else:
                assert entry is not None
                price = opened * (1.0 - c)
                cash += held * price
                trades.append(
                    Trade(
                        entry_date=entry.entry_date,
                        exit_date=series.dates[t],
                        entry_price=entry.entry_price,
                        exit_price=price,
                        shares=held,
                        pnl=held * (price - entry.entry_price),
                    )
                )
                held = 0
                entry = None

        side = by_index.get(t)
        if side is not None:
            actionable = (side is Side.BUY and held == 0) or (side is Side.SELL and held > 0)
            if actionable:
                if t + 1 < n:
                    pending = (t, side)
                else:
                    skipped.append(SkippedSignal(series.dates[t], side, "NoNextBar"))

        cash_path[t] = cash
        share_path[t] = held
        equity[t] = cash + held * float(series.close[t])

    return Ledger(
        trades=tuple(trades),
        equity=EquityCurve(series.dates, equity),
        open_position=entry,
        cash=cash_path,
        shares=share_path,
        skipped=tuple(skipped),
    )


def daily_returns(equity: EquityCurve | Sequence[float]) -> np.ndarray:
    values = np.asarray(equity.values if isinstance(equity, EquityCurve) else equity, dtype=np.float64)
    if len(values) < 2:
        raise SeriesTooShort("need at least two equity values for returns")
    return values[1:] / values[:-1] - 1.0


def write_trades_csv(ledger: Ledger, path: str | Path, header: Sequence[str] = ()) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["entry_date", "exit_date", "shares", "entry_price", "exit_price", "pnl"])
        for tr in ledger.trades:
            w.writerow(
                [tr.entry_date.isoformat(), tr.exit_date.isoformat(), tr.shares,
                 f"{tr.entry_price:.6f}", f"{tr.exit_price:.6f}", f"{tr.pnl:.6f}"]
            )


def write_equity_csv(ledger: Ledger, path: str | Path, header: Sequence[str] = ()) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "value"])
        for d, v in zip(ledger.equity.dates, ledger.equity.values):
            w.writerow([d.isoformat(), f"{v:.6f}"])
