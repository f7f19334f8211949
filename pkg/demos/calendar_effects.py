"""
Daily calendar handling: holiday regressors and weekly embedding.

Thanksgiving moves within November, so its window regressor survives
centring, while a fixed-date holiday such as Christmas centres to zero and
is absorbed by the seasonal.  A daily series starting on a Friday is then
embedded as rows of seven days beginning on Saturdays.
"""
import datetime as dt

import numpy as np

from structsig import dates

years = range(2015, 2026)
thanks = dates.find_holiday(11, dates.THURSDAY, 4, years)
xmas = [dt.date(y, 12, 25) for y in years]

start, end = dt.date(2019, 11, 20), dt.date(2019, 12, 31)
tg = dates.gethol(thanks, 1, 2, start, end)
xm = dates.gethol(xmas, 1, 1, start, end)
print("Thanksgiving 2019:", thanks[4])
print("centred Thanksgiving regressor, Nov 26-Dec 1:",
      tg.values[6:12].round(3))
print("max |centred Christmas regressor|:", np.abs(xm.values).max())

x = np.arange(1.0, 15.0)
w = dates.daily_to_weekly(x, dates.SATURDAY, dt.date(2020, 2, 28))
print("first week label (year, week):", w.begin, "with", w.lead, "leading blanks")
print(w.values)
back, first = dates.weekly_to_daily(w, drop_padding=True)
print("round trip start:", first, "values equal:", np.array_equal(back, x))
