"""Generate the bundled synthetic AGC day and hourly clearing prices.

Signal: AR(1) dispatch with hour-dependent volatility plus occasional
ramps, clipped to [-1, 1], sampled every 4 s. Prices follow a two-hump
daily shape in $/MW. Deterministic (fixed seed).
"""
import csv
import datetime as dt
import sys

import numpy as np

rng = np.random.default_rng(20240831)
start = dt.datetime(2024, 8, 31)
step = 4
per_hour = 3600 // step

vol = 0.05 + 0.05 * (1 + np.sin(np.arange(24) / 24 * 2 * np.pi * 2 + 0.7)) / 2
vol += rng.uniform(0.0, 0.03, 24)

out_dir = sys.argv[1]
g = 0.0
with open(f"{out_dir}/sample_agc.csv", "w", newline="") as f:
    w = csv.writer(f, lineterminator="\n")
    w.writerow(["timestamp", "signal"])
    for h in range(24):
        for k in range(per_hour):
            g = 0.97 * g + rng.normal(0.0, vol[h])
            g = float(np.clip(g, -1.0, 1.0))
            t = start + dt.timedelta(seconds=h * 3600 + k * step)
            w.writerow([t.strftime("%Y-%m-%d %H:%M:%S"), f"{g:.4f}"])

hours = np.arange(24)
price = 12 + 14 * np.exp(-((hours - 8.5) / 2.0) ** 2) + 26 * np.exp(-((hours - 17.5) / 2.5) ** 2)
price += rng.uniform(-3.0, 3.0, 24)
price = np.clip(price, 8.0, 45.0)
with open(f"{out_dir}/sample_prices.csv", "w", newline="") as f:
    w = csv.writer(f, lineterminator="\n")
    w.writerow(["period", "price_usd_per_mw"])
    for h in hours:
        w.writerow([int(h), f"{price[h]:.2f}"])
