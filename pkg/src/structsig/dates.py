"""
Calendar arithmetic, holiday regressors and daily/weekly embedding.

Days of the week are numbered 1 = Sunday, ..., 7 = Saturday.  Dates are
``datetime.date`` values (proleptic Gregorian, full leap-year rules).
"""
import calendar
import datetime as dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "date_to_day", "day_to_date", "day_of_week", "weekly_to_date",
    "find_holiday", "gethol", "DailyRegressor", "WeeklySample",
    "daily_to_weekly", "weekly_to_daily", "read_holidays", "write_holidays",
    "SUNDAY", "MONDAY", "TUESDAY", "WEDNESDAY", "THURSDAY", "FRIDAY", "SATURDAY",
]

SUNDAY, MONDAY, TUESDAY, WEDNESDAY, THURSDAY, FRIDAY, SATURDAY = range(1, 8)


def date_to_day(d):
    """Ordinal day within the year, 1..366."""
    return d.timetuple().tm_yday


def day_to_date(index, year):
    """
    Date with day index `index` relative to Jan 1 of `year` (index 1).

    Indices <= 0 roll back into prior years, indices past the year end roll
    forward.  `year` may also be a date, whose year is used.
    """
    if isinstance(year, dt.date):
        year = year.year
    return dt.date(int(year), 1, 1) + dt.timedelta(days=int(index) - 1)


def day_of_week(d):
    """Day of the week, 1 = Sunday .. 7 = Saturday."""
    return d.isoweekday() % 7 + 1


def _day_lead(year, first_day):
    # days of the first custom week that fall before Jan 1
    return (day_of_week(dt.date(year, 1, 1)) - first_day) % 7


def weekly_to_date(first_day, begin, T):
    """
    First day of week `begin = (year, week)` and last day of the T-th week.
    """
    year, week = begin
    if not 1 <= week <= 53:
        raise ValueError("week index must lie in 1..53")
    ell = 7 * (week - 1) - _day_lead(year, first_day) + 1
    start = day_to_date(ell, year)
    return start, start + dt.timedelta(days=7 * int(T) - 1)


def find_holiday(month, weekday, nth, years):
    """
    Dates of the `nth` `weekday` (1 = Sunday) of `month` for each year.

    nth = -1 selects the last such weekday of the month.
    """
    out = []
    for y in years:
        days = [dt.date(y, month, d) for d in range(1, calendar.monthrange(y, month)[1] + 1)
                if day_of_week(dt.date(y, month, d)) == weekday]
        if nth == -1:
            out.append(days[-1])
        elif 1 <= nth <= len(days):
            out.append(days[nth - 1])
        else:
            raise ValueError(f"no occurrence {nth} of weekday {weekday} in {y}-{month}")
    return out


@dataclass(frozen=True)
class DailyRegressor:
    values: np.ndarray
    start: dt.date
    end: dt.date

    @property
    def dates(self):
        return [self.start + dt.timedelta(days=i) for i in range(self.values.size)]


def gethol(holidays, fore, aft, start, end, center=True):
    """
    Daily holiday regressor.

    Each occurrence h switches on the days h - fore .. h + aft.  With
    `center`, the indicator is centred by its long-run mean for each calendar
    day (month, day), taken over every full year spanned by `holidays`, so
    fixed-date holidays give an identically zero regressor.
    """
    holidays = sorted(holidays)
    if not holidays:
        raise ValueError("holiday date list is empty")
    span0 = dt.date(holidays[0].year, 1, 1)
    span1 = dt.date(holidays[-1].year, 12, 31)
    lo, hi = min(span0, start), max(span1, end)
    n = (hi - lo).days + 1
    ind = np.zeros(n)
    for h in holidays:
        a = (h - lo).days - fore
        ind[max(a, 0):min(a + fore + aft + 1, n)] = 1.0
    if center:
        if start < span0 or end > span1:
            raise ValueError("holiday list must span the requested date range")
        days = [lo + dt.timedelta(days=i) for i in range(n)]
        key = np.array([d.month * 32 + d.day for d in days])
        inside = np.array([span0 <= d <= span1 for d in days])
        means = np.zeros(13 * 32)
        counts = np.bincount(key[inside], minlength=means.size)
        sums = np.bincount(key[inside], weights=ind[inside], minlength=means.size)
        np.divide(sums, counts, out=means, where=counts > 0)
        ind = ind - means[key]
    i0 = (start - lo).days
    i1 = (end - lo).days + 1
    return DailyRegressor(ind[i0:i1].copy(), start, end)


@dataclass(frozen=True)
class WeeklySample:
    """Daily values embedded as rows of 7 (one column per day of the week)."""
    values: np.ndarray
    first_day: int
    begin: tuple
    lead: int

    @property
    def start_date(self):
        return weekly_to_date(self.first_day, self.begin, self.values.shape[0])[0]


def daily_to_weekly(series, first_day, start):
    """
    Embed a daily series as a 7-variate weekly series.

    Missing markers (NaN) pad the first and last weeks; ``begin`` carries
    the year of `start` and the week index w = ceil((ell - 1)/7) + 1 where
    ell is the day index of the first day of the first week.
    """
    x = np.asarray(series, dtype=float).ravel()
    lead = (day_of_week(start) - first_day) % 7
    rows = -(-(lead + x.size) // 7)
    padded = np.full(rows * 7, np.nan)
    padded[lead:lead + x.size] = x
    ell = date_to_day(start) - lead
    week = -(-(ell - 1) // 7) + 1
    return WeeklySample(padded.reshape(rows, 7), int(first_day), (start.year, int(week)), lead)


def weekly_to_daily(sample, first_day=None, begin=None, drop_padding=False):
    """
    Inverse of daily_to_weekly.  Returns (values, start_date).

    The start date is the first day of the first week, recovered through
    ell = 7(w - 1) - day_lead + 1 with rollback into the prior year when
    ell <= 0.  With `drop_padding`, leading and trailing missing markers are
    removed and the start date is advanced accordingly.
    """
    if isinstance(sample, WeeklySample):
        vals, first_day, begin = sample.values, sample.first_day, sample.begin
    else:
        vals = np.asarray(sample, dtype=float)
    if vals.ndim != 2 or vals.shape[1] != 7:
        raise ValueError("weekly sample must have 7 columns")
    x = vals.ravel()
    start = weekly_to_date(first_day, begin, vals.shape[0])[0]
    if drop_padding:
        ok = np.nonzero(~np.isnan(x))[0]
        if ok.size == 0:
            return x[:0], start
        start = start + dt.timedelta(days=int(ok[0]))
        x = x[ok[0]:ok[-1] + 1]
    return x.copy(), start


def read_holidays(path):
    """Read a holiday file with one "MM DD YYYY" date per line."""
    out = []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        m, d, y = (int(p) for p in parts[:3])
        out.append(dt.date(y, m, d))
    return out


def write_holidays(path, dates):
    Path(path).write_text("".join(f"{d.month:02d} {d.day:02d} {d.year:04d}\n" for d in dates))
