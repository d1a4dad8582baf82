"""Level-set constants and lambda-slopes of the five envelope families over levels l.

Usage: python scripts/run_lemma43.py [--gauge lq4] [--p 0.5] [--levels -2..2]
"""

import argparse
from pathlib import Path

from conelab.cli import write_csv
from conelab.config import make_gauge
from conelab.envelopes import FAMILIES, constant_spread, lemma43_measure_check


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--gauge", default="lq4")
    ap.add_argument("--p", type=float, default=2 / 3)
    ap.add_argument("--levels", default="-2..2")
    ap.add_argument("--out", default="results/lemma43")
    args = ap.parse_args()

    lo, hi = (int(s) for s in args.levels.split(".."))
    df = make_gauge(args.gauge, 2)
    rows = lemma43_measure_check(df, args.p, families=FAMILIES, levels=range(lo, hi + 1))
    for case in ("i", "ii"):
        for fam in FAMILIES:
            slopes = [r.slope for r in rows if r.family == fam and r.case == case]
            print(f"case {case:2s} family {fam}: spread {constant_spread(rows, fam, case):.4f}, "
                  f"slope {slopes[0]:.3f}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "constants.csv", ["family", "case", "l", "constant", "slope"],
              [[r.family, r.case, r.l, r.constant, r.slope] for r in rows])


if __name__ == "__main__":
    main()
