import datetime as dt
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vpmacd.market_data import (
    Bar,
    DuplicateDate,
    EmptyFile,
    EmptyPartition,
    MissingColumn,
    OhlcvSeries,
    SplitSpec,
    UnparsableRow,
    parse_csv,
    split,
    validate,
    write_csv,
)

from helpers import random_walk_series, trading_days


def _write(tmp_path: Path, text: str, name: str = "X.csv") -> Path:
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_three_rows(tmp_path):
    p = _write(tmp_path, "Date,Open,High,Low,Close,Volume\n"
                         "2024-01-02,10,11,9,10.5,1000\n"
                         "2024-01-03,10.5,12,10,11,2000\n"
                         "2024-01-04,11,11.5,10.5,11.2,1500\n")
    s = parse_csv(p)
    assert len(s) == 3
    assert s.symbol == "X"
    assert s.dates == (dt.date(2024, 1, 2), dt.date(2024, 1, 3), dt.date(2024, 1, 4))
    assert s.bars[1] == Bar(dt.date(2024, 1, 3), 10.5, 12.0, 10.0, 11.0, 2000.0)


def test_header_case_and_order_free(tmp_path):
    p = _write(tmp_path, "volume,CLOSE,low,High,open,date,Adj Close\n"
                         "1000,10.5,9,11,10,2024-01-02,10.4\n")
    bar = parse_csv(p).bars[0]
    assert bar == Bar(dt.date(2024, 1, 2), 10.0, 11.0, 9.0, 10.5, 1000.0)


def test_out_of_order_rows_sorted(tmp_path):
    p = _write(tmp_path, "Date,Open,High,Low,Close,Volume\n"
                         "2024-01-04,3,3,3,3,3\n"
                         "2024-01-02,1,1,1,1,1\n"
                         "2024-01-03,2,2,2,2,2\n")
    s = parse_csv(p)
    expected = [
        Bar(dt.date(2024, 1, 2), 1, 1, 1, 1, 1),
        Bar(dt.date(2024, 1, 3), 2, 2, 2, 2, 2),
        Bar(dt.date(2024, 1, 4), 3, 3, 3, 3, 3),
    ]
    assert s.bars == expected


def test_duplicate_date(tmp_path):
    p = _write(tmp_path, "Date,Open,High,Low,Close,Volume\n"
                         "2024-01-02,1,1,1,1,1\n"
                         "2024-01-02,2,2,2,2,2\n")
    with pytest.raises(DuplicateDate):
        parse_csv(p)


def test_missing_column(tmp_path):
    p = _write(tmp_path, "Date,Open,High,Low,Close\n2024-01-02,1,1,1,1\n")
    with pytest.raises(MissingColumn, match="Volume"):
        parse_csv(p)


@pytest.mark.parametrize("row,line", [
    ("2024-01-02,1,1,1,,1", 2),
    ("2024-13-02,1,1,1,1,1", 2),
    ("2024-01-02,1,abc,1,1,1", 2),
    ("2024-01-02,1,1", 2),
])
def test_unparsable_row(tmp_path, row, line):
    p = _write(tmp_path, "Date,Open,High,Low,Close,Volume\n" + row + "\n")
    with pytest.raises(UnparsableRow) as exc:
        parse_csv(p)
    assert exc.value.line == line


def test_unparsable_reports_line_number(tmp_path):
    p = _write(tmp_path, "Date,Open,High,Low,Close,Volume\n2024-01-02,1,1,1,1,1\n2024-01-03,1,1,x,1,1\n")
    with pytest.raises(UnparsableRow) as exc:
        parse_csv(p)
    assert exc.value.line == 3


@pytest.mark.parametrize("text", ["", "Date,Open,High,Low,Close,Volume\n"])
def test_empty_file(tmp_path, text):
    with pytest.raises(EmptyFile):
        parse_csv(_write(tmp_path, text))


def _series(bars):
    return OhlcvSeries.from_bars("T", bars)


def test_validate_range_inverted():
    s = _series([Bar(dt.date(2024, 1, 2), 10, 9, 11, 10, 100)])
    v = validate(s)
    assert [x.rule for x in v] == ["RangeInverted"]
    assert v[0].date == dt.date(2024, 1, 2)


def test_validate_close_outside_range():
    s = _series([Bar(dt.date(2024, 1, 2), 10, 11, 9, 12, 100)])
    assert [x.rule for x in validate(s)] == ["CloseOutsideRange"]


def test_validate_clean():
    assert validate(random_walk_series(5, seed=1)) == []


def test_validate_flags_volume_issues():
    s = _series([
        Bar(dt.date(2024, 1, 2), 10, 11, 9, 10, 0),
        Bar(dt.date(2024, 1, 3), 10, 11, 9, 10, -5),
    ])
    assert [x.rule for x in validate(s)] == ["ZeroVolume", "NegativeVolume"]


def test_split_sizes_by_hand():
    s = random_walk_series(10, seed=2)
    d = s.dates
    spec = SplitSpec(d[0], d[5], d[6], d[9])
    train, test = split(s, spec)
    assert (len(train), len(test)) == (6, 4)
    assert train.dates == d[:6] and test.dates == d[6:]


def test_split_before_series_start():
    s = random_walk_series(10, seed=2)
    spec = SplitSpec(dt.date(2000, 1, 1), dt.date(2000, 12, 31), dt.date(2001, 1, 1), dt.date(2001, 12, 31))
    with pytest.raises(EmptyPartition):
        split(s, spec)


def test_split_spec_rejects_overlap():
    with pytest.raises(ValueError):
        SplitSpec(dt.date(2020, 1, 1), dt.date(2021, 1, 1), dt.date(2021, 1, 1), dt.date(2022, 1, 1))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 60))
def test_round_trip(tmp_path_factory, seed, n):
    s = random_walk_series(n, seed=seed, symbol="RT")
    p = tmp_path_factory.mktemp("rt") / "RT.csv"
    write_csv(s, p)
    assert parse_csv(p) == s


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), cut=st.integers(1, 28))
def test_split_preserves_bars_and_disjoint(seed, cut):
    s = random_walk_series(30, seed=seed)
    d = s.dates
    train, test = split(s, SplitSpec(d[0], d[cut - 1], d[cut], d[-1]))
    assert train.dates[-1] < test.dates[0]
    for part in (train, test):
        for b in part:
            assert b == s.bar(s.index_of(b.date))


def test_series_arrays_are_read_only():
    s = random_walk_series(5, seed=3)
    with pytest.raises(ValueError):
        s.close[0] = 1.0
    assert isinstance(s.close, np.ndarray)


def test_trading_days_helper_skips_weekends():
    assert all(d.weekday() < 5 for d in trading_days(20))
