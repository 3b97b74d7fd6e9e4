"""Daily OHLCV ingestion, validation and train/test partitioning.

Series are held column-wise in read-only numpy arrays so that the indicator
code can work on them directly; ``OhlcvSeries.bars`` gives the row view.
"""

from __future__ import annotations

import bisect
import csv
import datetime as dt
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

REQUIRED_COLUMNS = ("date", "open", "high", "low", "close", "volume")


class MarketDataError(ValueError):
    """Base class for ingestion failures."""


class MissingColumn(MarketDataError):
    def __init__(self, column: str, path: str | Path | None = None) -> None:
        where = f" in {path}" if path is not None else ""
        super().__init__(f"missing column {column!r}{where}")
        self.column = column


class UnparsableRow(MarketDataError):
    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"line {line}: {reason}")
        self.line = line


class EmptyFile(MarketDataError):
    pass


class DuplicateDate(MarketDataError):
    def __init__(self, date: dt.date) -> None:
        super().__init__(f"duplicate date {date.isoformat()}")
        self.date = date


class EmptyPartition(MarketDataError):
    pass


@dataclass(frozen=True)
class Bar:
    date: dt.date
    open: float
    high: float
    low: float
    close: float
    volume: float


def _frozen(values: Iterable[float]) -> np.ndarray:
    if not isinstance(values, (np.ndarray, list, tuple)):
        values = list(values)
    arr = np.array(values, dtype=np.float64)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class OhlcvSeries:
    """An ordered daily bar series for one instrument."""

    symbol: str
    dates: tuple[dt.date, ...]
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray
    volume: np.ndarray
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        n = len(self.dates)
        for name in ("open", "high", "low", "close", "volume"):
            arr = getattr(self, name)
            if not (isinstance(arr, np.ndarray) and arr.dtype == np.float64 and not arr.flags.writeable):
                arr = _frozen(arr)
                object.__setattr__(self, name, arr)
            if arr.shape != (n,):
                raise ValueError(f"{name} has length {arr.shape[0]}, expected {n}")
        if n == 0:
            raise EmptyFile(f"series {self.symbol!r} has no bars")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if cur == prev:
                raise DuplicateDate(cur)
            if cur < prev:
                raise ValueError("dates must be strictly increasing")
        object.__setattr__(self, "_index", {d: i for i, d in enumerate(self.dates)})

    @classmethod
    def from_bars(cls, symbol: str, bars: Sequence[Bar]) -> "OhlcvSeries":
        return cls(
            symbol=symbol,
            dates=tuple(b.date for b in bars),
            open=_frozen(b.open for b in bars),
            high=_frozen(b.high for b in bars),
            low=_frozen(b.low for b in bars),
            close=_frozen(b.close for b in bars),
            volume=_frozen(b.volume for b in bars),
        )

    def __len__(self) -> int:
        return len(self.dates)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OhlcvSeries):
            return NotImplemented
        return (
            self.symbol == other.symbol
            and self.dates == other.dates
            and all(
                np.array_equal(getattr(self, k), getattr(other, k))
                for k in ("open", "high", "low", "close", "volume")
            )
        )

    def bar(self, i: int) -> Bar:
        return Bar(
            self.dates[i],
            float(self.open[i]),
            float(self.high[i]),
            float(self.low[i]),
            float(self.close[i]),
            float(self.volume[i]),
        )

    @property
    def bars(self) -> list[Bar]:
        return [self.bar(i) for i in range(len(self))]

    def __iter__(self) -> Iterator[Bar]:
        return (self.bar(i) for i in range(len(self)))

    def index_of(self, date: dt.date) -> int:
        """Position of ``date``; raises KeyError when absent."""
        return self._index[date]

    def slice(self, start: int, stop: int) -> "OhlcvSeries":
        return OhlcvSeries(
            symbol=self.symbol,
            dates=self.dates[start:stop],
            open=_frozen(self.open[start:stop]),
            high=_frozen(self.high[start:stop]),
            low=_frozen(self.low[start:stop]),
            close=_frozen(self.close[start:stop]),
            volume=_frozen(self.volume[start:stop]),
        )

    def between(self, start: dt.date | None, end: dt.date | None) -> "OhlcvSeries":
        """Bars with start <= date <= end (either bound may be open)."""
        lo = 0 if start is None else bisect.bisect_left(self.dates, start)
        hi = len(self) if end is None else bisect.bisect_right(self.dates, end)
        if hi <= lo:
            raise EmptyPartition(f"no bars between {start} and {end}")
        return self.slice(lo, hi)

    def scaled(self, factor: float) -> "OhlcvSeries":
        """Copy with every price multiplied by ``factor``; volume untouched."""
        return OhlcvSeries(
            symbol=self.symbol,
            dates=self.dates,
            open=_frozen(self.open * factor),
            high=_frozen(self.high * factor),
            low=_frozen(self.low * factor),
            close=_frozen(self.close * factor),
            volume=self.volume,
        )


@dataclass(frozen=True)
class SplitSpec:
    train_start: dt.date
    train_end: dt.date
    test_start: dt.date
    test_end: dt.date

    def __post_init__(self) -> None:
        if self.train_start > self.train_end:
            raise ValueError("train_start after train_end")
        if self.test_start > self.test_end:
            raise ValueError("test_start after test_end")
        if not self.train_end < self.test_start:
            raise ValueError("train and test windows overlap")


@dataclass(frozen=True)
class Violation:
    date: dt.date
    rule: str
    detail: str = ""


def _parse_float(text: str, line: int, column: str) -> float:
    text = text.strip()
    if not text:
        raise UnparsableRow(line, f"empty {column}")
    try:
        value = float(text)
    except ValueError:
        raise UnparsableRow(line, f"bad {column} value {text!r}") from None
    if not math.isfinite(value):
        raise UnparsableRow(line, f"non-finite {column} value {text!r}")
    return value


def parse_csv(path: str | Path, symbol: str | None = None) -> OhlcvSeries:
    """Read a daily OHLCV CSV file.

    Columns are matched by header name, case-insensitively and in any order;
    extra columns are ignored. Rows are returned sorted by date.
    """
    path = Path(path)
    if symbol is None:
        symbol = path.stem
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not any(h.strip() for h in header):
            raise EmptyFile(f"{path} is empty")
        names = [h.strip().lower() for h in header]
        cols = {}
        for required in REQUIRED_COLUMNS:
            if required not in names:
                raise MissingColumn(required.capitalize(), path)
            cols[required] = names.index(required)

        bars: list[Bar] = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(names):
                raise UnparsableRow(line_no, f"expected {len(names)} fields, got {len(row)}")
            raw_date = row[cols["date"]].strip()
            try:
                date = dt.date.fromisoformat(raw_date)
            except ValueError:
                raise UnparsableRow(line_no, f"bad date {raw_date!r}") from None
            values = [_parse_float(row[cols[c]], line_no, c) for c in REQUIRED_COLUMNS[1:]]
            bars.append(Bar(date, *values))

    if not bars:
        raise EmptyFile(f"{path} has a header but no rows")
    bars.sort(key=lambda b: b.date)
    for prev, cur in zip(bars, bars[1:]):
        if prev.date == cur.date:
            raise DuplicateDate(cur.date)
    return OhlcvSeries.from_bars(symbol, bars)


def write_csv(series: OhlcvSeries, path: str | Path) -> None:
    # repr() round-trips float64 exactly
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["Date", "Open", "High", "Low", "Close", "Volume"])
        for b in series:
            writer.writerow(
                [b.date.isoformat(), repr(b.open), repr(b.high), repr(b.low), repr(b.close), repr(b.volume)]
            )


def validate(series: OhlcvSeries) -> list[Violation]:
    """Check every bar invariant; returns one Violation per broken rule.

    Zero-volume bars are reported as ``ZeroVolume`` but are otherwise legal.
    """
    out: list[Violation] = []
    for b in series:
        if min(b.open, b.high, b.low, b.close) <= 0:
            out.append(Violation(b.date, "NonPositivePrice"))
        if b.volume < 0:
            out.append(Violation(b.date, "NegativeVolume", f"volume={b.volume}"))
        elif b.volume == 0:
            out.append(Violation(b.date, "ZeroVolume"))
        if b.high < b.low:
            out.append(Violation(b.date, "RangeInverted", f"high={b.high} low={b.low}"))
            continue
        if not (b.low <= b.open <= b.high):
            out.append(Violation(b.date, "OpenOutsideRange", f"open={b.open}"))
        if not (b.low <= b.close <= b.high):
            out.append(Violation(b.date, "CloseOutsideRange", f"close={b.close}"))
    return out


def blocking_violations(violations: Iterable[Violation]) -> list[Violation]:
    """Violations that make a series unusable (everything except ZeroVolume)."""
    return [v for v in violations if v.rule != "ZeroVolume"]


def split(series: OhlcvSeries, spec: SplitSpec) -> tuple[OhlcvSeries, OhlcvSeries]:
    try:
        train = series.between(spec.train_start, spec.train_end)
    except EmptyPartition:
        raise EmptyPartition(
            f"{series.symbol}: no bars in train window {spec.train_start}..{spec.train_end}"
        ) from None
    try:
        test = series.between(spec.test_start, spec.test_end)
    except EmptyPartition:
        raise EmptyPartition(
            f"{series.symbol}: no bars in test window {spec.test_start}..{spec.test_end}"
        ) from None
    return train, test
