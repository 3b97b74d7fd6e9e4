"""One-sided tests for "new strategy beats old" on daily return differences.

All three tests share the null mean(new - old) <= 0 against mean > 0.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats as sps

from .backtest import EquityCurve, daily_returns

RNG_NAME = "PCG64"


class StatsError(ValueError):
    pass


class SeriesTooShort(StatsError):
    pass


class ZeroVariance(StatsError):
    pass


class NonPositiveLongRunVariance(StatsError):
    pass


class BlockLongerThanSeries(StatsError):
    pass


class DateMismatch(StatsError):
    pass


class Method(str, enum.Enum):
    TTEST = "TTest"
    NEWEY_WEST = "NeweyWest"
    BLOCK_BOOTSTRAP = "BlockBootstrap"


@dataclass(frozen=True, eq=False)
class DiffSeries:
    dates: tuple[dt.date, ...]
    d: np.ndarray

    def __post_init__(self) -> None:
        d = np.array(self.d, dtype=np.float64)
        if len(d) != len(self.dates):
            raise ValueError("dates and differences differ in length")
        d.flags.writeable = False
        object.__setattr__(self, "d", d)

    def __len__(self) -> int:
        return len(self.d)

    @classmethod
    def from_values(cls, d: Sequence[float]) -> "DiffSeries":
        return cls(tuple(range(len(d))), np.asarray(d, dtype=np.float64))  # type: ignore[arg-type]


@dataclass(frozen=True)
class TestResult:
    method: Method
    statistic: float | None
    p_value: float
    params: dict = field(default_factory=dict)
    resample_means: np.ndarray | None = field(default=None, repr=False, compare=False)
    observed_mean: float | None = None

    __test__ = False  # not a pytest class


@dataclass(frozen=True)
class TestConfig:
    nw_lag: int | str = "auto"
    resamples: int = 1000
    block_len: int = 5
    seed: int = 0

    __test__ = False


def _as_diff(diff: DiffSeries | Sequence[float]) -> np.ndarray:
    return diff.d if isinstance(diff, DiffSeries) else np.asarray(diff, dtype=np.float64)


def one_sided_t(diff: DiffSeries | Sequence[float]) -> TestResult:
    d = _as_diff(diff)
    T = d.size
    if T < 2:
        raise SeriesTooShort("t-test needs at least two observations")
    s = float(np.std(d, ddof=1))
    if s == 0 or np.all(d == d[0]):
        raise ZeroVariance("difference series has zero variance")
    t = float(np.mean(d)) / (s / math.sqrt(T))
    p = float(sps.t.sf(t, df=T - 1))
    return TestResult(Method.TTEST, t, p, {"df": T - 1})


def auto_lag(T: int) -> int:
    return int(math.floor(4.0 * (T / 100.0) ** (2.0 / 9.0)))


def long_run_variance(d: np.ndarray, lag: int) -> float:
    """Bartlett-weighted sum of autocovariances (denominator T)."""
    T = d.size
    e = d - d.mean()
    s = float(e @ e) / T
    for j in range(1, lag + 1):
        gamma = float(e[j:] @ e[:-j]) / T
        s += 2.0 * (1.0 - j / (lag + 1.0)) * gamma
    return s


def newey_west_t(diff: DiffSeries | Sequence[float], lag: int | str = "auto") -> TestResult:
    d = _as_diff(diff)
    T = d.size
    chosen = auto_lag(T) if lag == "auto" else int(lag)
    if chosen < 0:
        raise ValueError("lag must be non-negative")
    if T < chosen + 2:
        raise SeriesTooShort(f"Newey-West with lag {chosen} needs at least {chosen + 2} observations")
    S = long_run_variance(d, chosen)
    params = {"lag": chosen, "lag_rule": "auto" if lag == "auto" else "fixed", "df": T - 1}
    if not S > 0:
        raise NonPositiveLongRunVariance(f"long-run variance {S!r} at lag {chosen}")
    t = float(np.mean(d)) / math.sqrt(S / T)
    p = float(sps.t.sf(t, df=T - 1))
    return TestResult(Method.NEWEY_WEST, t, p, params)


def block_bootstrap_indices(T: int, resamples: int, block_len: int, seed: int) -> np.ndarray:
    """Index matrix (resamples x T) of circular block resamples.

    All block starts are drawn up front in resample order, so the result
    depends only on the arguments.
    """
    n_blocks = -(-T // block_len)
    rng = np.random.Generator(np.random.PCG64(seed))
    starts = rng.integers(0, T, size=(resamples, n_blocks), dtype=np.int64)
    offsets = np.arange(block_len, dtype=np.int64)
    idx = (starts[:, :, None] + offsets[None, None, :]) % T
    return idx.reshape(resamples, n_blocks * block_len)[:, :T]


def circular_block_bootstrap(
    diff: DiffSeries | Sequence[float], resamples: int = 1000, block_len: int = 5, seed: int = 0
) -> TestResult:
    d = _as_diff(diff)
    T = d.size
    if resamples < 1:
        raise ValueError("resamples must be >= 1")
    if block_len < 1:
        raise ValueError("block_len must be >= 1")
    if T < block_len:
        raise BlockLongerThanSeries(f"block length {block_len} exceeds series length {T}")
    observed = float(np.mean(d))
    idx = block_bootstrap_indices(T, resamples, block_len, seed)
    means = d[idx].mean(axis=1)
    centered = means - observed
    hits = int(np.count_nonzero(centered >= observed))
    p = (1 + hits) / (resamples + 1)
    params = {"resamples": resamples, "block_len": block_len, "seed": seed, "rng": RNG_NAME}
    return TestResult(Method.BLOCK_BOOTSTRAP, None, p, params, resample_means=means, observed_mean=observed)


def diff_series(new: EquityCurve, old: EquityCurve) -> DiffSeries:
    if tuple(new.dates) != tuple(old.dates):
        raise DateMismatch("equity curves cover different dates")
    r_new = daily_returns(new)
    r_old = daily_returns(old)
    return DiffSeries(tuple(new.dates[1:]), r_new - r_old)


@dataclass(frozen=True)
class PairResult:
    label: str
    new: str
    old: str
    results: dict  # Method -> TestResult, or Method -> str for an error state
    diff: DiffSeries = field(repr=False)


def _attempt(fn, *args, **kwargs) -> TestResult | str:
    try:
        return fn(*args, **kwargs)
    except StatsError as exc:
        return type(exc).__name__


def compare_pair(
    new: EquityCurve,
    old: EquityCurve,
    config: TestConfig = TestConfig(),
    label: str = "",
    new_name: str = "new",
    old_name: str = "old",
) -> PairResult:
    """Run all three tests on new-minus-old daily returns.

    A test that cannot be computed (for example zero variance) is recorded
    by its error name instead of a result.
    """
    try:
        diff = diff_series(new, old)
    except DateMismatch:
        raise DateMismatch(f"{new_name!r} and {old_name!r} cover different dates") from None
    results = {
        Method.TTEST: _attempt(one_sided_t, diff),
        Method.NEWEY_WEST: _attempt(newey_west_t, diff, config.nw_lag),
        Method.BLOCK_BOOTSTRAP: _attempt(
            circular_block_bootstrap, diff, config.resamples, config.block_len, config.seed
        ),
    }
    return PairResult(label, new_name, old_name, results, diff)


def histogram(values: np.ndarray, bins: int) -> tuple[np.ndarray, np.ndarray]:
    counts, edges = np.histogram(np.asarray(values, dtype=np.float64), bins=bins)
    return edges, counts


def _params_text(params: dict) -> str:
    return ";".join(f"{k}={params[k]}" for k in sorted(params))


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.6f}"


def write_tests_csv(
    rows: Sequence[tuple[str, PairResult]], path: str | Path, header: Sequence[str] = ()
) -> None:
    """Long format: one row per (instrument, pair, method)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["instrument", "pair", "new", "old", "method", "statistic", "p_value", "status", "params"])
        for instrument, pair in rows:
            for method in Method:
                res = pair.results[method]
                if isinstance(res, TestResult):
                    w.writerow([instrument, pair.label, pair.new, pair.old, method.value,
                                _fmt(res.statistic), _fmt(res.p_value), "ok", _params_text(res.params)])
                else:
                    w.writerow([instrument, pair.label, pair.new, pair.old, method.value, "", "", res, ""])


def write_method_table(
    rows: Sequence[tuple[str, PairResult]],
    method: Method,
    path: str | Path,
    header: Sequence[str] = (),
) -> None:
    """Wide format: one row per pair, (t, p) column pair per instrument."""
    instruments: list[str] = []
    by_pair: dict[str, dict[str, PairResult]] = {}
    for instrument, pair in rows:
        if instrument not in instruments:
            instruments.append(instrument)
        by_pair.setdefault(f"{pair.label}: {pair.new} vs. {pair.old}", {})[instrument] = pair
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        cols = ["Comparison"]
        for sym in instruments:
            cols += [f"{sym} (t)", f"{sym} (p)"]
        w.writerow(cols)
        for label, per in by_pair.items():
            row = [label]
            for sym in instruments:
                res = per[sym].results[method] if sym in per else None
                if isinstance(res, TestResult):
                    row += [_fmt(res.statistic), _fmt(res.p_value)]
                else:
                    row += ["", ""]
            w.writerow(row)


def write_histogram_csv(result: TestResult, bins: int, path: str | Path, header: Sequence[str] = ()) -> None:
    if result.resample_means is None:
        raise ValueError("result carries no bootstrap resample means")
    edges, counts = histogram(result.resample_means, bins)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        fh.write(f"# observed_mean={result.observed_mean!r} p_value={result.p_value!r} "
                 f"{_params_text(result.params)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_left", "bin_right", "count"])
        for k in range(bins):
            w.writerow([repr(float(edges[k])), repr(float(edges[k + 1])), int(counts[k])])
