"""Crossover rules turning MACD-style lines into dated buy/sell signals.

The rules emit a raw signal stream; whether a signal is actionable (flat vs.
long) is decided by the backtest.
"""

from __future__ import annotations

import datetime as dt
import enum
from dataclasses import dataclass

import numpy as np

from .indicators import IndicatorSeries, MacdTriple

LAMBDA_MIN = 0.8
LAMBDA_MAX = 1.0


class Side(str, enum.Enum):
    BUY = "Buy"
    SELL = "Sell"


class Rule(str, enum.Enum):
    SIGNAL_CROSS = "signal_cross"
    ZERO_CROSS = "zero_cross"
    LAMBDA_ADJUSTED = "lambda_adjusted"


class LambdaOutOfRange(ValueError):
    def __init__(self, lam: float) -> None:
        super().__init__(f"lambda {lam} outside [{LAMBDA_MIN}, {LAMBDA_MAX}]")
        self.lam = lam


def check_lambda(lam: float) -> float:
    if not (LAMBDA_MIN <= lam <= LAMBDA_MAX):
        raise LambdaOutOfRange(lam)
    return float(lam)


@dataclass(frozen=True)
class TradeSignal:
    date: dt.date
    side: Side


@dataclass(frozen=True)
class RuleConfig:
    rule: Rule = Rule.SIGNAL_CROSS
    lam: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "rule", Rule(self.rule))
        if self.rule is Rule.LAMBDA_ADJUSTED:
            object.__setattr__(self, "lam", check_lambda(self.lam))


def _emit(dates, buy: np.ndarray, sell: np.ndarray) -> list[TradeSignal]:
    # buy is listed first in every rule, so it wins when both legs fire
    sell = sell & ~buy
    out = []
    for t in np.flatnonzero(buy | sell):
        out.append(TradeSignal(dates[t], Side.BUY if buy[t] else Side.SELL))
    return out


def _pairwise_valid(*series: IndicatorSeries) -> np.ndarray:
    ok = np.logical_and.reduce([s.valid for s in series])
    both = np.zeros_like(ok)
    both[1:] = ok[1:] & ok[:-1]
    return both


def _cross(line: np.ndarray, buy_ref: np.ndarray, sell_ref: np.ndarray, ok: np.ndarray):
    prev_line, cur_line = line[:-1], line[1:]
    with np.errstate(invalid="ignore"):
        buy = (prev_line <= buy_ref[:-1]) & (cur_line > buy_ref[1:])
        sell = (prev_line >= sell_ref[:-1]) & (cur_line < sell_ref[1:])
    buy = np.concatenate(([False], buy)) & ok
    sell = np.concatenate(([False], sell)) & ok
    return buy, sell


def crossover_signals(triple: MacdTriple) -> list[TradeSignal]:
    """Buy when the line crosses above its signal line, sell when it crosses below."""
    line, sig = triple.macd_line, triple.signal_line
    ok = _pairwise_valid(line, sig)
    buy, sell = _cross(line.values, sig.values, sig.values, ok)
    return _emit(line.dates, buy, sell)


def zero_line_signals(macd: IndicatorSeries) -> list[TradeSignal]:
    ok = _pairwise_valid(macd)
    zero = np.zeros(len(macd))
    buy, sell = _cross(macd.values, zero, zero, ok)
    return _emit(macd.dates, buy, sell)


def lambda_adjusted_signals(triple: MacdTriple, lam: float) -> list[TradeSignal]:
    """Crossover with the buy threshold at ``lam * signal``.

    The sell leg keeps the unscaled signal line. When the signal line is
    negative, lam < 1 raises the buy threshold rather than lowering it.
    """
    lam = check_lambda(lam)
    line, sig = triple.macd_line, triple.signal_line
    ok = _pairwise_valid(line, sig)
    buy, sell = _cross(line.values, lam * sig.values, sig.values, ok)
    return _emit(line.dates, buy, sell)


def generate_signals(triple: MacdTriple, config: RuleConfig) -> list[TradeSignal]:
    if config.rule is Rule.SIGNAL_CROSS:
        return crossover_signals(triple)
    if config.rule is Rule.ZERO_CROSS:
        return zero_line_signals(triple.macd_line)
    return lambda_adjusted_signals(triple, config.lam)
