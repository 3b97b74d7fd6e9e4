"""Synthetic fixtures and brute-force oracles shared by the test modules."""

from __future__ import annotations

import datetime as dt

import numpy as np

from vpmacd.indicators import IndicatorSeries, MacdTriple
from vpmacd.market_data import OhlcvSeries


def trading_days(n: int, start: dt.date = dt.date(2018, 1, 1)) -> tuple[dt.date, ...]:
    out, d = [], start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += dt.timedelta(days=1)
    return tuple(out)


def random_walk_series(n: int, seed: int, symbol: str = "TEST", drift: float = 0.0003,
                       vol: float = 0.012, start: dt.date = dt.date(2018, 1, 1)) -> OhlcvSeries:
    rng = np.random.default_rng(seed)
    close = 100.0 * np.exp(np.cumsum(rng.normal(drift, vol, n)))
    open_ = np.r_[close[0], close[:-1]] * np.exp(rng.normal(0.0, vol / 3, n))
    high = np.maximum(open_, close) * np.exp(np.abs(rng.normal(0.0, vol / 2, n)))
    low = np.minimum(open_, close) * np.exp(-np.abs(rng.normal(0.0, vol / 2, n)))
    volume = rng.integers(1_000_000, 50_000_000, n).astype(float)
    return OhlcvSeries(symbol, trading_days(n, start), open_, high, low, close, volume)


def series_from_arrays(open_, high, low, close, volume, symbol="T", start=dt.date(2020, 1, 1)) -> OhlcvSeries:
    n = len(close)
    return OhlcvSeries(symbol, trading_days(n, start), open_, high, low, close, volume)


def triple_from_lists(line, signal) -> MacdTriple:
    dates = trading_days(len(line))
    line = np.asarray(line, dtype=float)
    signal = np.asarray(signal, dtype=float)
    return MacdTriple(
        IndicatorSeries(dates, line),
        IndicatorSeries(dates, signal),
        IndicatorSeries(dates, line - signal),
    )


def brute_force_rule(line, buy_ref, sell_ref, dates):
    """Day-by-day literal evaluation of a two-condition cross rule.

    ``buy_ref``/``sell_ref`` are the thresholds compared with the line. A day
    where either side is missing (NaN) at t-1 or t never fires; when both
    legs hold, the buy case is taken.
    """
    out = []
    for t in range(1, len(line)):
        vals = (line[t - 1], line[t], buy_ref[t - 1], buy_ref[t], sell_ref[t - 1], sell_ref[t])
        if any(v != v for v in vals):  # NaN check without numpy
            continue
        if line[t - 1] <= buy_ref[t - 1] and line[t] > buy_ref[t]:
            out.append((dates[t], "Buy"))
        elif line[t - 1] >= sell_ref[t - 1] and line[t] < sell_ref[t]:
            out.append((dates[t], "Sell"))
    return out


def as_pairs(signals):
    return [(s.date, s.side.value) for s in signals]


def ar1(T: int, rho: float, sigma: float, seed: int, burn: int = 500) -> np.ndarray:
    rng = np.random.default_rng(seed)
    e = rng.normal(0.0, sigma, T + burn)
    x = np.empty_like(e)
    x[0] = e[0] / np.sqrt(1 - rho**2)
    for t in range(1, len(e)):
        x[t] = rho * x[t - 1] + e[t]
    return x[burn:]
