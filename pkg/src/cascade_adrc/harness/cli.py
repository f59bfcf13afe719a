"""Command-line interface: ``simulate``, ``bode``, ``experiment``, ``validate``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from ..errors import ConfigError
from .config import EXPERIMENT_IDS, load_preset, load_spec, with_overrides
from .runner import emit_bode, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGED = 3


def _taus(text: str) -> list[float]:
    if not text.strip():
        return []
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cascade-adrc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run every sweep point and seed of a config file")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="run this single seed instead of the config's list")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("bode", help="write frequency-response curves")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lpf-taus", type=_taus, help="comma-separated filter time constants [s]")
    p.add_argument("--svg", action="store_true", help="also write SVG charts")

    p = sub.add_parser("experiment", help="run a built-in experiment")
    p.add_argument("id", choices=EXPERIMENT_IDS[:-1])
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("validate", help="check a config file and print a summary")
    p.add_argument("--spec", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            spec = load_spec(args.spec)
            runs = spec.runs()
            axes = ", ".join(f"{n}={list(v)}" for n, v in spec.sweep) or "none"
            print(f"ok: id={spec.id} sweep={axes} seeds={list(spec.seeds)} runs={len(runs)}")
            return EXIT_OK
        if args.command == "bode":
            spec = load_spec(args.spec)
            if args.svg:
                spec = replace(spec, svg=True)
            for path in emit_bode(spec, args.out, args.lpf_taus):
                print(path)
            return EXIT_OK
        if args.command == "experiment":
            spec = load_preset(args.id)
        else:
            spec = load_spec(args.spec)
            if args.seed is not None:
                spec = with_overrides(spec, seeds=[args.seed])
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        result = run_experiment(spec, args.out, jobs=args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for row in result.summary:
        metrics = " ".join(f"{k}={_short(row[k])}" for k in ("iae", "effort", "jitter", "ripple_amplitude"))
        print(f"{row['config_id']}: {metrics} diverged={row['n_diverged']}/{row['n_seeds']}")
    print(f"outputs in {result.output_dir}")
    return EXIT_DIVERGED if result.diverged else EXIT_OK


def _short(v) -> str:
    return "n/a" if v is None else f"{v:.4g}"
