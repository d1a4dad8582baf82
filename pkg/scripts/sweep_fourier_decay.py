"""Ratio of |sigma_hat(x)| to the cap measure cap(xi(x), 1/|x|) across l^q gauges.

Usage: python scripts/sweep_fourier_decay.py [--gauges euclidean,lq4,lq:6,lq:8] [--max-radius 256]
"""

import argparse
from pathlib import Path

import numpy as np

from conelab import caps
from conelab import geometry as geo
from conelab.cli import write_csv
from conelab.config import make_gauge


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--gauges", default="euclidean,lq4,lq:6,lq:8")
    ap.add_argument("--directions", type=int, default=64)
    ap.add_argument("--max-radius", type=float, default=256)
    ap.add_argument("--out", default="results/fourier_decay")
    args = ap.parse_args()

    radii = 2.0 ** np.arange(2, np.log2(args.max_radius) + 0.25, 0.5)
    dirs, _ = geo.sphere_directions(2, args.directions)
    rows = []
    for name in args.gauges.split(","):
        df = make_gauge(name, 2)
        base = geo.gauss_points(df, dirs)
        for r in radii:
            cap = caps.cap_measures(df, base, [1 / r])[:, 0]
            vals = np.array([abs(caps.surface_fourier(df, r * u)) for u in dirs])
            ratio = vals / cap
            rows.append([name, r, ratio.max(), int(ratio.argmax()), vals.max()])
        worst = max(row[2] for row in rows if row[0] == name)
        print(f"{name}: max |sigma_hat| / cap = {worst:.3f}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "ratios.csv", ["gauge", "radius", "max_ratio", "worst_direction", "max_abs"], rows)


if __name__ == "__main__":
    main()
