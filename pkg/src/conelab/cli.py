"""Command line entry point: ``conelab <command> --config <path> [--out <dir>]``.

Exit status is 0 when every check passes, 1 when a check fails, 2 for usage
errors and 3 when a computation refuses for lack of resolution.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

from .config import COMMANDS, LEMMAS, ConfigError, load_config
from .errors import ConelabError, DomainError, ResolutionError
from .pipelines import Outcome, run

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RESOLUTION = 0, 1, 2, 3


def _cell(v):
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _json_value(v):
    if hasattr(v, "item"):
        v = v.item()
    if isinstance(v, float) and v != v:
        return None
    return v


def write_summary(path: Path, command: str, params: dict, outcome: Outcome, wall: float,
                  note: str | None = None) -> None:
    summary = {
        "command": command,
        "params": params,
        "assertions": {k: ("pass" if v else "fail") for k, v in outcome.checks.items()},
        "constants": {k: _json_value(v) for k, v in outcome.constants.items()},
        "wall_time": wall,
    }
    if note is not None:
        summary["params"] = dict(params, note=note)
    path.write_text(json.dumps(summary, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conelab", description="Cone multiplier experiments.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("lemma", nargs="?", help=f"lemma name for lemma-check: {', '.join(LEMMAS)}")
    ap.add_argument("--config", required=True, help="key=value experiment file")
    ap.add_argument("--out", help="output directory (default: config 'output' or ./conelab_out)")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.command == "lemma-check" and args.lemma not in LEMMAS:
        print(f"conelab: lemma-check needs one of {', '.join(LEMMAS)}", file=sys.stderr)
        return EXIT_USAGE
    if args.command != "lemma-check" and args.lemma is not None:
        print(f"conelab: unexpected argument {args.lemma!r}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"conelab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = Path(args.out or cfg.output or "conelab_out")
    out_dir.mkdir(parents=True, exist_ok=True)
    label = args.command if args.lemma is None else f"{args.command} {args.lemma}"
    start = time.perf_counter()
    try:
        outcome = run(cfg, args.command, args.lemma)
    except (ConfigError, DomainError) as exc:
        print(f"conelab: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResolutionError as exc:
        print(f"conelab: resolution refused: {exc}", file=sys.stderr)
        refusal = Outcome(checks={"resolution": False},
                          constants={"required_resolution": exc.required})
        write_summary(out_dir / "summary.json", label, cfg.params(), refusal,
                      time.perf_counter() - start, note=str(exc))
        return EXIT_RESOLUTION
    except ConelabError as exc:
        print(f"conelab: {exc}", file=sys.stderr)
        return EXIT_FAIL
    wall = time.perf_counter() - start
    for name, (header, rows) in outcome.tables.items():
        write_csv(out_dir / name, header, rows)
    write_summary(out_dir / "summary.json", label, cfg.params(), outcome, wall)
    for name, ok in outcome.checks.items():
        print(f"{'PASS' if ok else 'FAIL'} {label}: {name}")
    return EXIT_OK if outcome.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
