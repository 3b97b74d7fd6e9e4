"""SMA, EMA, MACD and the volume-price-adjusted price pipeline.

Every indicator returns an :class:`IndicatorSeries` whose ``valid`` mask marks
the warmed-up region. Invalid slots hold NaN and are never read by the
signal rules.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .market_data import Bar, OhlcvSeries


class WindowExceedsSeries(ValueError):
    def __init__(self, needed: int, available: int, what: str = "series") -> None:
        super().__init__(f"{what} needs {needed} observations, only {available} available")
        self.needed = needed
        self.available = available


@dataclass(frozen=True, eq=False)
class IndicatorSeries:
    dates: tuple[dt.date, ...]
    values: np.ndarray
    valid: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64)
        if len(values) != len(self.dates):
            raise ValueError("values and dates differ in length")
        valid = np.isfinite(values) if self.valid is None else np.array(self.valid, dtype=bool)
        values[~valid] = np.nan
        values.flags.writeable = False
        valid.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def valid_from(self) -> int:
        """Index of the first valid value (``len(self)`` when none is)."""
        idx = np.flatnonzero(self.valid)
        return int(idx[0]) if idx.size else len(self.values)

    @property
    def n_valid(self) -> int:
        return int(self.valid.sum())

    def scaled(self, factor: float) -> "IndicatorSeries":
        return IndicatorSeries(self.dates, self.values * factor, self.valid)


@dataclass(frozen=True)
class EmaParams:
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("EMA period must be >= 1")

    @property
    def alpha(self) -> float:
        return 2.0 / (self.n + 1)


@dataclass(frozen=True)
class MacdParams:
    n_fast: int = 12
    n_slow: int = 26
    n_signal: int = 9

    def __post_init__(self) -> None:
        if min(self.n_fast, self.n_slow, self.n_signal) < 1:
            raise ValueError("MACD periods must be >= 1")
        if not self.n_fast < self.n_slow:
            raise ValueError("n_fast must be smaller than n_slow")

    @property
    def signal_warmup(self) -> int:
        return (self.n_slow - 1) + (self.n_signal - 1)


@dataclass(frozen=True)
class AdjustedPriceParams:
    n_window: int = 20
    sigma_window: int = 20

    def __post_init__(self) -> None:
        if self.n_window < 1:
            raise ValueError("n_window must be >= 1")
        if self.sigma_window < 2:
            raise ValueError("sigma_window must be >= 2")

    @property
    def warmup(self) -> int:
        return self.n_window + self.sigma_window - 1


@dataclass(frozen=True)
class MacdTriple:
    macd_line: IndicatorSeries
    signal_line: IndicatorSeries
    histogram: IndicatorSeries

    @property
    def dates(self) -> tuple[dt.date, ...]:
        return self.macd_line.dates

    def scaled(self, factor: float) -> "MacdTriple":
        return MacdTriple(
            self.macd_line.scaled(factor),
            self.signal_line.scaled(factor),
            self.histogram.scaled(factor),
        )


def _as_array(values) -> np.ndarray:
    if isinstance(values, IndicatorSeries):
        return np.asarray(values.values, dtype=np.float64)
    return np.asarray(values, dtype=np.float64)


def _dates_for(values, dates: Sequence[dt.date] | None, n: int) -> tuple:
    if dates is not None:
        return tuple(dates)
    if isinstance(values, IndicatorSeries):
        return values.dates
    return tuple(range(n))  # type: ignore[arg-type]


def sma(values, n: int, dates: Sequence[dt.date] | None = None) -> IndicatorSeries:
    """Trailing arithmetic mean over ``n`` observations; valid from index n-1."""
    x = _as_array(values)
    if n < 1:
        raise ValueError("SMA period must be >= 1")
    if len(x) < n:
        raise WindowExceedsSeries(n, len(x), "SMA")
    out = np.full(len(x), np.nan)
    out[n - 1 :] = np.lib.stride_tricks.sliding_window_view(x, n).mean(axis=1)
    return IndicatorSeries(_dates_for(values, dates, len(x)), out)


def ema(values, params: EmaParams | int, dates: Sequence[dt.date] | None = None) -> IndicatorSeries:
    """Exponential moving average seeded with the SMA of the first n valid inputs.

    Input NaNs (invalid slots) before the seed push the seed later. An
    invalid slot after seeding yields an invalid output there while the
    recursion state carries over unchanged.
    """
    if isinstance(params, int):
        params = EmaParams(params)
    x = _as_array(values)
    n, alpha = params.n, params.alpha
    finite = np.isfinite(x)
    out = np.full(len(x), np.nan)

    # first run of n consecutive valid observations
    run, seed_at = 0, -1
    for t in range(len(x)):
        run = run + 1 if finite[t] else 0
        if run == n:
            seed_at = t
            break
    if seed_at < 0:
        raise WindowExceedsSeries(n, int(finite.sum()), "EMA")

    state = math.fsum(x[seed_at - n + 1 : seed_at + 1]) / n
    out[seed_at] = state
    keep = 1.0 - alpha
    for t in range(seed_at + 1, len(x)):
        if finite[t]:
            state = alpha * x[t] + keep * state
            out[t] = state
    return IndicatorSeries(_dates_for(values, dates, len(x)), out)


def _macd_from_values(x, dates, params: MacdParams, what: str) -> MacdTriple:
    fast = ema(x, params.n_fast, dates)
    slow = ema(x, params.n_slow, dates)
    line_vals = fast.values - slow.values
    line = IndicatorSeries(fast.dates, line_vals)
    if line.n_valid < params.n_signal:
        raise WindowExceedsSeries(params.n_signal, line.n_valid, f"{what} signal line")
    signal = ema(line, params.n_signal)
    hist = IndicatorSeries(line.dates, line.values - signal.values)
    return MacdTriple(line, signal, hist)


def macd_lines(prices, params: MacdParams = MacdParams(), dates: Sequence[dt.date] | None = None) -> MacdTriple:
    x = _as_array(prices)
    need = params.n_slow + params.n_signal
    if len(x) < need:
        raise WindowExceedsSeries(need, len(x), "MACD")
    return _macd_from_values(prices, dates, params, "MACD")


def body_ratio(bar: Bar) -> float:
    """|close - open| / (high - low), or 0 for a bar with no range."""
    rng = bar.high - bar.low
    if rng <= 0:
        return 0.0
    return abs(bar.close - bar.open) / rng


def body_ratios(series: OhlcvSeries) -> np.ndarray:
    rng = series.high - series.low
    body = np.abs(series.close - series.open)
    out = np.zeros(len(series))
    np.divide(body, rng, out=out, where=rng > 0)
    return out


def range_volatility(series: OhlcvSeries, sigma_window: int = 20) -> IndicatorSeries:
    """Rolling sample std of the daily high-low range, divided by that day's close."""
    if sigma_window < 2:
        raise ValueError("sigma_window must be >= 2")
    n = len(series)
    if n < sigma_window:
        raise WindowExceedsSeries(sigma_window, n, "range volatility")
    rng = series.high - series.low
    windows = np.lib.stride_tricks.sliding_window_view(rng, sigma_window)
    std = windows.std(axis=1, ddof=1)
    out = np.full(n, np.nan)
    out[sigma_window - 1 :] = std / series.close[sigma_window - 1 :]
    return IndicatorSeries(series.dates, out)


def adjusted_price(series: OhlcvSeries, params: AdjustedPriceParams = AdjustedPriceParams()) -> IndicatorSeries:
    """Volume-weighted adjusted price over the N bars strictly before each day.

    A day whose lookback window has zero total volume is marked invalid.
    """
    n = len(series)
    need = params.n_window + params.sigma_window
    if n < need:
        raise WindowExceedsSeries(need, n, "adjusted price")
    sigma = range_volatility(series, params.sigma_window).values
    r = body_ratios(series)
    weighted = series.close * series.volume * sigma * r
    vol = series.volume
    N = params.n_window
    out = np.full(n, np.nan)
    for t in range(params.warmup, n):
        den = math.fsum(vol[t - N : t])
        if den > 0:
            out[t] = math.fsum(weighted[t - N : t]) / den
    return IndicatorSeries(series.dates, out)


def vp_macd_lines(adjusted: IndicatorSeries, params: MacdParams = MacdParams()) -> MacdTriple:
    need = params.n_slow + params.n_signal
    if adjusted.n_valid < need:
        raise WindowExceedsSeries(need, adjusted.n_valid, "VP-MACD")
    return _macd_from_values(adjusted, None, params, "VP-MACD")
