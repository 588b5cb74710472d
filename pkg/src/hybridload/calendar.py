"""Day classes (day type x seasonal segment) and the weekly offset code."""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass

# Jan-Feb, Mar, Apr, May, Jun-Jul, Aug-Sep, Oct, Nov, Dec
_SEGMENT_OF_MONTH = {1: 1, 2: 1, 3: 2, 4: 3, 5: 4, 6: 5, 7: 5,
                     8: 6, 9: 6, 10: 7, 11: 8, 12: 9}

DAY_TYPE_NAMES = ("Mon", "Tue-Thu", "Fri", "Sat", "Sun (rest)",
                  "Sun (Jun-Jul)", "Sun (Aug)", "Sun (Dec)")


@dataclass(frozen=True, order=True)
class DayClass:
    day_type: int
    segment: int

    def __post_init__(self):
        if not 0 <= self.day_type <= 7:
            raise ValueError(f"day_type {self.day_type} outside 0..7")
        if not 1 <= self.segment <= 9:
            raise ValueError(f"segment {self.segment} outside 1..9")

    def key(self) -> str:
        return f"{self.day_type}-{self.segment}"

    @classmethod
    def parse(cls, key: str) -> "DayClass":
        a, b = key.split("-")
        return cls(int(a), int(b))


def day_type(date: dt.date) -> int:
    wd = date.weekday()
    if wd == 0:
        return 0
    if wd in (1, 2, 3):
        return 1
    if wd == 4:
        return 2
    if wd == 5:
        return 3
    if date.month in (6, 7):
        return 5
    if date.month == 8:
        return 6
    if date.month == 12:
        return 7
    return 4


def segment(date: dt.date) -> int:
    return _SEGMENT_OF_MONTH[date.month]


def classify_day(date: dt.date) -> DayClass:
    return DayClass(day_type(date), segment(date))


def offset_code(date: dt.date) -> int:
    """Calendar stand-in for the expert seasonal offset, in -3..7.

    Winter holiday periods get -3..0, spring 1, summer 2..6 (peaking in
    August), autumn 7.
    """
    m, d = date.month, date.day
    if (m == 12 and d >= 20) or (m == 1 and d <= 5):
        return -3
    if m == 2 and 8 <= d <= 28:
        return -2
    if m == 1 or m == 2:
        return 0
    if m == 12:
        return -1
    if 3 <= m <= 5:
        return 1
    if m == 6:
        return 2
    if m == 7:
        return 3 if d < 14 else 4
    if m == 8:
        return 6 if d < 20 else 5
    return 7


def read_holidays(path) -> set[dt.date]:
    out = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                out.add(dt.date.fromisoformat(line))
    return out
