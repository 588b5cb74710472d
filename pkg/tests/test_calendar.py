import csv
import datetime as dt
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from hybridload.calendar import (DayClass, classify_day, day_type, offset_code, read_holidays,
                                 segment)

DATA = Path(__file__).parent / "data"


def test_known_days():
    assert dt.date(2009, 4, 2).weekday() == 3  # a Thursday
    assert classify_day(dt.date(2009, 4, 2)) == DayClass(1, 3)
    assert classify_day(dt.date(2009, 1, 5)) == DayClass(0, 1)
    assert day_type(dt.date(2009, 8, 2)) == 6
    assert day_type(dt.date(2009, 6, 7)) == 5
    assert day_type(dt.date(2009, 12, 6)) == 7
    assert day_type(dt.date(2009, 3, 1)) == 4


def test_segments_follow_month_list():
    want = [1, 1, 2, 3, 4, 5, 5, 6, 6, 7, 8, 9]
    assert [segment(dt.date(2001, m, 15)) for m in range(1, 13)] == want


def test_snapshot_fourteen_years():
    with open(DATA / "calendar_1996_2009.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 14 * 365 + 4  # 1996, 2000, 2004, 2008 are leap years
    for row in rows:
        d = dt.date.fromisoformat(row["date"])
        assert classify_day(d) == DayClass(int(row["day_type"]), int(row["segment"])), d


def test_total_over_range_and_sunday_subtypes_only_in_their_months():
    d, end = dt.date(1996, 1, 1), dt.date(2031, 12, 31)
    allowed = {5: {6, 7}, 6: {8}, 7: {12}}
    seen = set()
    while d <= end:
        c = classify_day(d)
        assert c == classify_day(d)
        if c.day_type in allowed:
            assert d.weekday() == 6 and d.month in allowed[c.day_type]
        if d.weekday() == 6:
            assert c.day_type >= 4
        seen.add(c)
        d += dt.timedelta(days=1)
    assert {c.day_type for c in seen} == set(range(8))
    assert {c.segment for c in seen} == set(range(1, 10))


@given(st.dates(dt.date(1600, 1, 1), dt.date(2400, 12, 31)))
def test_total_over_four_centuries(d):
    c = classify_day(d)
    assert 0 <= c.day_type <= 7 and 1 <= c.segment <= 9
    assert -3 <= offset_code(d) <= 7


def test_dayclass_validation_and_keys():
    with pytest.raises(ValueError):
        DayClass(8, 1)
    with pytest.raises(ValueError):
        DayClass(0, 10)
    c = DayClass(5, 5)
    assert DayClass.parse(c.key()) == c
    assert DayClass(0, 2) < DayClass(1, 1)


def test_read_holidays(tmp_path):
    p = tmp_path / "h.txt"
    p.write_text("# fixed dates\n2000-01-01\n\n2000-05-01\n")
    assert read_holidays(p) == {dt.date(2000, 1, 1), dt.date(2000, 5, 1)}
