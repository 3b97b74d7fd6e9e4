"""Strategy definitions and the indicator -> signal -> backtest chain."""

from __future__ import annotations

import datetime as dt
import enum
from dataclasses import dataclass, field, replace

from .backtest import BacktestConfig, Ledger, run_backtest
from .indicators import AdjustedPriceParams, MacdParams, MacdTriple, adjusted_price, macd_lines, vp_macd_lines
from .market_data import OhlcvSeries
from .signals import Rule, RuleConfig, TradeSignal, generate_signals


class Indicator(str, enum.Enum):
    MACD = "macd"
    VP_MACD = "vp_macd"


@dataclass(frozen=True)
class Strategy:
    name: str
    indicator: Indicator = Indicator.MACD
    rule: Rule = Rule.SIGNAL_CROSS
    lam: float = 1.0
    macd: MacdParams = field(default_factory=MacdParams)
    adjusted: AdjustedPriceParams = field(default_factory=AdjustedPriceParams)

    def __post_init__(self) -> None:
        object.__setattr__(self, "indicator", Indicator(self.indicator))
        object.__setattr__(self, "rule", Rule(self.rule))
        RuleConfig(self.rule, self.lam)  # validates lambda for the lambda rule

    @property
    def rule_config(self) -> RuleConfig:
        return RuleConfig(self.rule, self.lam)

    def with_lambda(self, lam: float) -> "Strategy":
        return replace(self, lam=lam)

    @property
    def warmup(self) -> int:
        """Bars consumed before the first signal can fire."""
        base = self.macd.signal_warmup + 1
        if self.indicator is Indicator.VP_MACD:
            base += self.adjusted.warmup
        return base


def compute_triple(series: OhlcvSeries, strategy: Strategy) -> MacdTriple:
    if strategy.indicator is Indicator.MACD:
        return macd_lines(series.close, strategy.macd, series.dates)
    return vp_macd_lines(adjusted_price(series, strategy.adjusted), strategy.macd)


def signals_in_window(
    signals: list[TradeSignal], start: dt.date | None, end: dt.date | None
) -> list[TradeSignal]:
    return [
        s for s in signals
        if (start is None or s.date >= start) and (end is None or s.date <= end)
    ]


def run_strategy(
    series: OhlcvSeries,
    strategy: Strategy,
    config: BacktestConfig = BacktestConfig(),
    start: dt.date | None = None,
    end: dt.date | None = None,
    warmup_history: bool = True,
) -> Ledger:
    """Backtest ``strategy`` over the bars dated start..end.

    With ``warmup_history`` the indicators also see the bars before ``start``
    (never those after ``end``); otherwise they are computed on the window
    alone and the first ``strategy.warmup`` bars cannot trade.
    """
    window = series.between(start, end)
    history = series.between(None, end) if warmup_history else window
    triple = compute_triple(history, strategy)
    sigs = signals_in_window(generate_signals(triple, strategy.rule_config), window.dates[0], window.dates[-1])
    return run_backtest(window, sigs, config)
