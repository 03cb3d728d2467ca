"""Command-line entry point: ``wavelab <subcommand> [options]``.

Exit codes: 0 success, 1 configuration error, 2 precondition refusal,
3 numerical divergence in a single run.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .config import ConfigError, load_config
from .experiments import RUNNERS, Divergence, Refusal, run_experiment
from .nonlinearity import SpecSyntaxError, parse_spec, radial_witness, regularity_gate

EXIT_OK, EXIT_CONFIG, EXIT_REFUSED, EXIT_DIVERGED = 0, 1, 2, 3


def _subcommand(experiment: str) -> str:
    return experiment.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavelab", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    for experiment in RUNNERS:
        p = sub.add_parser(_subcommand(experiment), help=f"run the {experiment} experiment")
        p.add_argument("--config", required=True, help="JSON experiment configuration")
        p.add_argument("--out", help="output directory (default: config 'output' or ./out/<experiment>)")
        p.add_argument("--seed", type=int, help="override the configuration seed")
        p.add_argument("--override-gate", action="store_true", help="run despite a failed admissibility gate")
        p.add_argument("--threads", type=int, default=1, help="worker processes for sweep points")

    p = sub.add_parser("gate", help="print the admissibility verdict for (n, k, s)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--radial", action="store_true", help="data and equation are radial")

    p = sub.add_parser("radial-check", help="classify a nonlinearity as rotation invariant or not")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="take the nonlinearity from an experiment configuration")
    src.add_argument("--spec", help="file in the nonlinearity text format")
    src.add_argument("--spec-text", help="nonlinearity text given inline")
    return parser


def _run_gate(args) -> int:
    try:
        verdict = regularity_gate(args.n, args.k, args.s, args.radial)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(verdict.describe())
    return EXIT_OK


def _run_radial_check(args) -> int:
    try:
        if args.config:
            spec = load_config(args.config).nonlinearity
        else:
            text = args.spec_text
            if args.spec:
                with open(args.spec) as fh:
                    text = fh.read()
            spec = parse_spec(text)
    except (ConfigError, SpecSyntaxError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    witness = radial_witness(spec)
    if witness is None:
        print("radial")
    else:
        print("not radial")
        print(f"witness: {witness.describe()}")
    return EXIT_OK


def _run_experiment(args) -> int:
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    experiment = args.command.replace("-", "_")
    if cfg.experiment != experiment:
        print(f"config error: file describes {cfg.experiment!r}, not {experiment!r}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.override_gate:
        cfg = replace(cfg, override_gate=True)
    out = args.out or cfg.output or f"out/{experiment}"
    try:
        report = run_experiment(cfg, out, threads=max(1, args.threads))
    except Refusal as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except Divergence as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in report.files:
        print(path)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "gate":
        return _run_gate(args)
    if args.command == "radial-check":
        return _run_radial_check(args)
    return _run_experiment(args)


if __name__ == "__main__":
    sys.exit(main())
