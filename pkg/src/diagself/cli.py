"""Command-line entry points: ``run``, ``diag`` and ``eval``.

Exit codes: 0 success, 1 bad input (config or code text), 2 population
extinct, 3 diag search found nothing.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import diagonal as dg
from .config import config_to_dict, load_config
from .dsl import ALL_KINDS, ParseError, parse_text, run as run_code, to_text
from .engine import ConfigError, run

METRIC_FIELDS = ["generation", "pop", "mean_points", "punishments", "diag_success"]

EXIT_OK, EXIT_INPUT, EXIT_EXTINCT, EXIT_NONE = 0, 1, 2, 3


def write_events(events, path: Path) -> None:
    with open(path, "w", newline="\n") as f:
        for ev in events:
            f.write(json.dumps(ev.record(), sort_keys=True, separators=(",", ":")) + "\n")


def write_metrics(rows, path: Path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=METRIC_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report, log = run(cfg)
    write_events(log.events(), out / "events.jsonl")
    write_metrics(report.rows, out / "metrics.csv")
    doc = json.loads(report.to_json())
    doc["config"] = config_to_dict(cfg)
    (out / "report.json").write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    last = report.rows[-1] if report.rows else None
    print(f"{report.generations_executed} generations, "
          f"final pop {last['pop'] if last else len(report.final_population)}, "
          f"{len(report.adoptions)} adoptions")
    if report.extinct:
        print("population extinct", file=sys.stderr)
        return EXIT_EXTINCT
    return EXIT_OK


def _read_codes(lines, first_line: int) -> list:
    codes = []
    for i, text in enumerate(lines, start=first_line):
        text = text.strip()
        if not text or text.startswith(";"):
            continue
        try:
            codes.append(parse_text(text))
        except ParseError as exc:
            raise ParseError(f"line {i}: {exc.msg}", exc.pos) from None
    return codes


def cmd_diag(args) -> int:
    lines = Path(args.file).read_text().splitlines()
    budget = dg.SearchBudget(max_size=args.max_size, fuel_per_eval=args.fuel,
                             lit_range=args.lit_range, kinds=ALL_KINDS)
    try:
        if args.mode == "fit":
            seq = _read_codes(lines, 1)
            if len(seq) < 2:
                print("error: fit needs at least two codes", file=sys.stderr)
                return EXIT_INPUT
            found = dg.find_fitting_recursor(seq, budget)
        else:
            if "---" not in [l.strip() for l in lines]:
                print("error: separate mode needs a '---' line between rejected and retained",
                      file=sys.stderr)
                return EXIT_INPUT
            cut = [l.strip() for l in lines].index("---")
            rejected = _read_codes(lines[:cut], 1)
            retained = _read_codes(lines[cut + 1:], cut + 2)
            n = dg.negative_diagonalize(rejected, retained, budget)
            found = None if n is None else n.code
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except dg.OverlappingSamples as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if found is None:
        print("none")
        return EXIT_NONE
    print(to_text(found))
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        code = parse_text(args.code)
        inp = parse_text(args.input)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(run_code(code, inp, args.fuel))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="diagself", description="Diagonalizing self-editing programs.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a population simulation")
    r.add_argument("--config", required=True, help="JSON config file")
    r.add_argument("--seed", type=int, help="override the config seed")
    r.add_argument("--out", default="out", help="output directory (default: out)")
    r.set_defaults(func=cmd_run)

    d = sub.add_parser("diag", help="one-shot diagonalization over a file of codes")
    d.add_argument("file", help="one code per line; separate mode splits on a '---' line")
    d.add_argument("--mode", choices=["fit", "separate"], default="fit")
    d.add_argument("--max-size", type=int, default=4)
    d.add_argument("--fuel", type=int, default=200)
    d.add_argument("--lit-range", type=int, default=2)
    d.set_defaults(func=cmd_diag)

    e = sub.add_parser("eval", help="evaluate a code on an input")
    e.add_argument("code")
    e.add_argument("input", nargs="?", default="(lit 0)")
    e.add_argument("--fuel", type=int, default=1000)
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
