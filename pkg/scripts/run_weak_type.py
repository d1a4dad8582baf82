"""Weak-type quasinorms of the cone multiplier on atoms, swept over the order delta.

Usage: python scripts/run_weak_type.py [--gauge euclidean] [--offsets -0.6,-0.3,0,0.5] [--n 256]
"""

import argparse
from pathlib import Path

from conelab.cli import write_csv
from conelab.config import make_gauge
from conelab.operator import delta_critical
from conelab.weaktype import weak_type_experiment


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--gauge", default="euclidean")
    ap.add_argument("--p", type=float, default=2 / 3)
    ap.add_argument("--offsets", default="-0.3,0.0", help="delta minus the critical order")
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--scales", type=int, default=5, help="atoms of diameter 2^-j for j = 0..scales")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results/weak_type")
    args = ap.parse_args()

    df = make_gauge(args.gauge, 2)
    crit = delta_critical(args.p, 2)
    rows = []
    for off in (float(s) for s in args.offsets.split(",")):
        res = weak_type_experiment(df, args.p, crit + off, range(args.scales + 1), n=args.n, seed=args.seed)
        full = [r.quasinorm_full for r in res]
        print(f"delta={crit + off:.3f}: " + " ".join(f"{q:.4g}" for q in full)
              + f"  max/min {max(full) / min(full):.2f}")
        rows += [[r.delta, r.j, r.diameter, r.quasinorm_full, r.quasinorm_cone] for r in res]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "sweep.csv", ["delta", "j", "diameter", "quasinorm_full", "quasinorm_cone"], rows)


if __name__ == "__main__":
    main()
