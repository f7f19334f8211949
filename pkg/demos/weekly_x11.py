"""
Nonparametric filters for weekly data with a fractional period.

The weekly year has s = 365.25/7 = 52.1786 weeks.  The trend filter built
from the cepstral product polynomial annihilates every seasonal harmonic
2 pi k/s exactly, even though s is not an integer.  The monthly case
reproduces the classical 2x12 moving average, and a daily trading-day
kernel is re-expressed as a 7 x 7 matrix filter for weekly-embedded data.
"""
import numpy as np

import structsig as ss

s = 365.25 / 7
trend, seasonal, sa = ss.x11_filters(s)
k = np.arange(1, int(s // 2) + 1)
resp = np.abs(trend.frf(2 * np.pi * k / s))
print(f"weekly trend: {trend.m} taps, max |FRF| at harmonics {resp.max():.1e}")
print(f"coefficient sums: trend {trend.coeffs.sum():.12f}, "
      f"seasonal {seasonal.coeffs.sum():.1e}")

monthly = ss.x11_filters(12)[0].coeffs
print("monthly trend weights x 24:", (24 * monthly).round(6))

# a centred 7-day average acting on daily data, embedded for weekly rows
day7 = ss.FilterKernel(np.full(7, 1 / 7), 3)
emb = ss.hi_to_low(day7, 7)
print(f"embedded kernel: {emb.m} matrix lags, shift {emb.shift}")

long = ss.hi_to_low(ss.FilterKernel(np.full(367, 1 / 367), 183), 7)
print(f"367-day kernel embedded: {long.m} lags, shift {long.shift}")
