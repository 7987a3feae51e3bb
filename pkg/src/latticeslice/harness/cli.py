"""Command-line entry point."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..errors import ConfigError, EmptyInput, InvalidParameter, LatticeSliceError, ParseError, UnknownSuite
from .config import ExperimentConfig, load_config
from .io import atomic_write, emit_plot_data
from .runner import generate, run_config
from .suites import SUITES, verify_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_ONLY = {"massdim": "mass", "countdim": "counting", "slicedim": "slice", "sweep": "sweep"}


def _common(suppress: bool) -> argparse.ArgumentParser:
    # subcommand copies must not reset flags given before the subcommand
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment config (JSON)", **kw)
    common.add_argument("--out", type=Path, help="output directory", **kw)
    common.add_argument("--seed", type=int, help="seed for randomized suites and configs", **kw)
    common.add_argument("--format", choices=("csv", "json"), dest="fmt",
                        **(kw or {"default": "csv"}))
    return common


def _parser() -> argparse.ArgumentParser:
    common = _common(suppress=True)
    p = argparse.ArgumentParser(prog="latticeslice", parents=[_common(suppress=False)],
                                description="Dimension traces, slices and sweeps for leveled lattice sets.")
    sub = p.add_subparsers(dest="cmd", required=True)
    sub.add_parser("generate", parents=[common], help="write the set description and its points")
    sub.add_parser("massdim", parents=[common], help="mass-dimension traces of the config")
    sub.add_parser("countdim", parents=[common], help="counting-dimension traces of the config")
    sub.add_parser("slicedim", parents=[common], help="slice and tube-mass traces of the config")
    sub.add_parser("sweep", parents=[common], help="parameter sweeps of the config")
    v = sub.add_parser("verify", parents=[common], help="run a pinned verification suite")
    v.add_argument("suite", help=f"one of: {', '.join(SUITES)}")
    e = sub.add_parser("emit-plot-data", parents=[common], help="merge trace CSVs into long format")
    e.add_argument("traces", nargs="*", type=Path)
    return p


def _need_config(args) -> ExperimentConfig:
    if args.config is None:
        raise ConfigError("--config is required for this command")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _run(args) -> int:
    if args.cmd == "verify":
        rep = verify_suite(args.suite, args.seed)
        text = json.dumps(rep.to_json(), indent=2, sort_keys=True) + "\n"
        if args.out is not None:
            atomic_write(args.out / f"verify_{args.suite}.json", text)
        if args.fmt == "json":
            sys.stdout.write(text)
        else:
            for c in rep.checks:
                status = "PASS" if c.passed else "FAIL"
                tag = " (info)" if c.informational else ""
                print(f"{status} {c.id}{tag} [{c.citation}] measured={json.dumps(c.measured)} tol: {c.tolerance}")
            print(f"suite {rep.suite}: {'PASS' if rep.passed else 'FAIL'}")
        return EXIT_OK if rep.passed else EXIT_FAIL
    if args.cmd == "emit-plot-data":
        text = emit_plot_data(args.traces)
        if args.out is not None:
            atomic_write(args.out / "plot_data.csv", text)
        else:
            sys.stdout.write(text)
        return EXIT_OK
    cfg = _need_config(args)
    if args.cmd == "generate":
        paths = generate(cfg, args.out)
    else:
        paths = run_config(cfg, args.out, args.fmt, only=_ONLY[args.cmd])
    for path in paths:
        print(path)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return _run(args)
    except (ConfigError, InvalidParameter, UnknownSuite, ParseError, EmptyInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LatticeSliceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
