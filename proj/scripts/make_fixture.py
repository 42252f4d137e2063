#!/usr/bin/env python3
"""Regenerates the bundled data snapshot (data/*.csv).

Wide JHU-style layout, one logistic outbreak curve per region with seeded
noise, covering 2020-01-22 .. 2020-05-01. Deaths and recoveries are lagged
fractions of the confirmed curve. Rerunning reproduces the checked-in files
byte for byte.
"""

import csv
import datetime as dt
import os

import numpy as np

START = dt.date(2020, 1, 22)
END = dt.date(2020, 5, 1)
DAYS = (END - START).days + 1  # 101

# country, province, lat, lon, final_size, midpoint_day, growth_rate
# Magnitudes are compressed relative to the historical record (max/median kept
# within ~20x) so corpus-wide min-max scaling leaves every region's daily
# curve in a trainable range; validation regions keep their real-world scale.
REGIONS = [
    ("China", "Hubei", 30.98, 112.27, 52000, 18, 0.22),
    ("China", "Beijing", 40.18, 116.41, 16000, 25, 0.15),
    ("China", "Guangdong", 23.34, 113.42, 20000, 22, 0.18),
    ("Australia", "New South Wales", -33.87, 151.21, 26000, 58, 0.16),
    ("Australia", "Victoria", -37.81, 144.96, 18000, 62, 0.15),
    ("France", "", 46.23, 2.21, 70000, 68, 0.12),
    ("France", "French Polynesia", -17.68, -149.41, 15000, 60, 0.12),
    ("Netherlands", "", 52.13, 5.29, 38000, 70, 0.11),
    ("Netherlands", "Aruba", 12.52, -69.97, 16000, 64, 0.12),
    ("Denmark", "", 56.26, 9.5, 24000, 66, 0.11),
    ("Denmark", "Faroe Islands", 61.89, -6.91, 17000, 56, 0.16),
    ("Germany", "", 51.17, 10.45, 80000, 66, 0.13),
    ("Brazil", "", -14.24, -51.93, 60000, 78, 0.1),
    ("US", "", 37.09, -95.71, 90000, 70, 0.12),
    ("Belgium", "", 50.83, 4.47, 49000, 70, 0.12),
    ("Spain", "", 40.46, -3.75, 88000, 66, 0.14),
    ("Italy", "", 41.87, 12.57, 85000, 62, 0.12),
    ("Malaysia", "", 4.21, 101.98, 22000, 60, 0.12),
    ("Vietnam", "", 14.06, 108.28, 16000, 52, 0.1),
    ("Iran", "", 32.43, 53.69, 55000, 58, 0.11),
    ("UEA", "", 23.42, 53.85, 28000, 72, 0.11),
    ("Singapore", "", 1.35, 103.82, 32000, 76, 0.13),
    ("Thailand", "", 15.87, 100.99, 21000, 60, 0.11),
    ("Korea, South", "", 35.91, 127.77, 27000, 38, 0.16),
    ("Japan", "", 36.2, 138.25, 30000, 72, 0.09),
    ("Russia", "", 61.52, 105.32, 65000, 78, 0.13),
    ("Chile", "", -35.68, -71.54, 33000, 74, 0.1),
    ("India", "", 20.59, 78.96, 45000, 76, 0.11),
    ("Greece", "", 39.07, 21.82, 19000, 62, 0.11),
    ("Mexico", "", 23.63, -102.55, 36000, 78, 0.1),
    ("Mongolia", "", 46.86, 103.85, 15000, 54, 0.09),
    ("Philippines", "", 12.88, 121.77, 26000, 70, 0.1),
    ("New Zealand", "", -40.9, 174.89, 18000, 60, 0.14),
    ("South Africa", "", -30.56, 22.94, 23000, 72, 0.1),
    ("Botswana", "", -22.33, 24.68, 15500, 68, 0.09),
    ("Uruguay", "", -32.52, -55.77, 17500, 62, 0.11),
    ("Paraguay", "", -23.44, -58.44, 16500, 66, 0.09),
    ("Madagascar", "", -18.77, 46.87, 15800, 68, 0.09),
    ("Peru", "", -9.19, -75.02, 37000, 74, 0.12),
    ("Portugal", "", 39.4, -8.22, 42000, 66, 0.12),
    ("Hungary", "", 47.16, 19.5, 20000, 70, 0.1),
    ("Kenya", "", -0.02, 37.91, 16800, 72, 0.09),
    ("Ireland", "", 53.41, -8.24, 34000, 70, 0.12),
    ("Israel", "", 31.05, 34.85, 31000, 66, 0.13),
    ("Norway", "", 60.47, 8.47, 25000, 58, 0.12),
    ("Mauritius", "", -20.35, 57.55, 17200, 60, 0.14),
    ("Rwanda", "", -1.94, 29.87, 15200, 66, 0.1),
    ("Iceland", "", 64.96, -19.02, 19500, 56, 0.15),
    ("Kazakhstan", "", 48.02, 66.92, 24500, 72, 0.11),
    ("Switzerland", "", 46.82, 8.23, 48000, 62, 0.13),
    ("Cyprus", "", 35.13, 33.43, 18500, 64, 0.11),
    ("Zimbabwe", "", -19.02, 29.15, 15400, 70, 0.08),
    ("Indonesia", "", -0.79, 113.92, 30000, 108, 0.08),
    ("Sweden", "", 60.13, 18.64, 21000, 74, 0.1),
    ("Saudi Arabia", "", 23.89, 45.08, 25000, 90, 0.12),
    ("Argentina", "", -38.42, -63.62, 4500, 80, 0.1),
]


def logistic(t, k, t0, r):
    return k / (1.0 + np.exp(-r * (t - t0)))


def make_confirmed(rng, k, t0, r):
    t = np.arange(DAYS, dtype=float)
    smooth = logistic(t, k, t0, r)
    daily = np.diff(np.concatenate([[0.0], smooth]))
    noise = rng.lognormal(mean=0.0, sigma=0.18, size=DAYS)
    daily = daily * noise
    cum = np.cumsum(daily)
    return np.round(cum).astype(int)


def lagged_fraction(rng, confirmed, fraction, lag):
    shifted = np.concatenate([np.zeros(lag, dtype=int), confirmed[: DAYS - lag]])
    noise = rng.normal(loc=1.0, scale=0.05, size=DAYS)
    series = np.round(shifted * fraction * noise).astype(int)
    return np.maximum.accumulate(np.clip(series, 0, None))


def date_header():
    cols = []
    day = START
    while day <= END:
        cols.append(f"{day.month}/{day.day}/{str(day.year)[2:]}")
        day += dt.timedelta(days=1)
    return cols


def main():
    out_dir = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "data")
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(20200122)

    header = ["Province/State", "Country/Region", "Lat", "Long"] + date_header()
    rows = {"confirmed": [], "deaths": [], "recovered": []}
    for country, province, lat, lon, k, t0, r in REGIONS:
        confirmed = make_confirmed(rng, k, t0, r)
        deaths = lagged_fraction(rng, confirmed, 0.06, 7)
        recovered = lagged_fraction(rng, confirmed, 0.45, 14)
        meta = [province, country, f"{lat:.4f}", f"{lon:.4f}"]
        rows["confirmed"].append(meta + [str(v) for v in confirmed])
        rows["deaths"].append(meta + [str(v) for v in deaths])
        rows["recovered"].append(meta + [str(v) for v in recovered])

    for name, data in rows.items():
        path = os.path.join(out_dir, f"time_series_{name}.csv")
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            writer.writerows(data)
        print(f"wrote {path} ({len(data)} regions, {DAYS} days)")


if __name__ == "__main__":
    main()
