"""Command-line interface.

Subcommands mirror the verification scenarios (solve-wave, spectrum,
evolve, damping, equivalence, whitham-compare, full-pipeline) plus
`defaults` (print the default configuration) and `report` (render a
completed artifact directory).  The output root comes from --out or the
LLELAB_OUT environment variable.

Exit codes: 0 pass, 1 criterion failure, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__
from .config import default_config, dump_config, load_config
from .exceptions import (
    ConfigurationError,
    LlelabError,
    MissingArtifactError,
)
from .pipeline import SCENARIOS, run_scenario
from .report import emit_report

EXIT_PASS = 0
EXIT_CRITERION_FAILURE = 1
EXIT_CONFIGURATION_ERROR = 2
EXIT_NUMERICAL_FAILURE = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="llelab",
        description="Numerical laboratory for periodic waves of the "
        "Lugiato-Lefever equation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("defaults", help="print the default configuration as YAML")

    for name in SCENARIOS:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument("-c", "--config", type=Path, default=None,
                       help="YAML configuration file (defaults otherwise)")
        p.add_argument("-o", "--out", type=Path, default=None,
                       help="artifact directory (default: $LLELAB_OUT/<scenario> "
                       "or ./out/<scenario>)")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE",
                       help="override a configuration entry (dotted path)")
        p.add_argument("--jobs", type=int, default=None,
                       help="cap worker counts for parallel stages")

    rep = sub.add_parser("report", help="render summary.md and figures from artifacts")
    rep.add_argument("artifact_dir", type=Path)
    return parser


def _output_dir(args, scenario: str) -> Path:
    if args.out is not None:
        return args.out
    root = os.environ.get("LLELAB_OUT", "out")
    return Path(root) / scenario


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "defaults":
        sys.stdout.write(dump_config(default_config()))
        return EXIT_PASS

    if args.command == "report":
        try:
            path = emit_report(args.artifact_dir)
        except MissingArtifactError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIGURATION_ERROR
        print(path)
        return EXIT_PASS

    try:
        cfg = load_config(args.config, args.overrides)
        if args.jobs is not None:
            cfg["jobs"] = args.jobs
        out = _output_dir(args, args.command)
        code, summary = run_scenario(cfg, args.command, out)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIGURATION_ERROR
    except LlelabError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL_FAILURE
    for key, value in summary.items():
        if not isinstance(value, (dict, list)):
            print(f"{key}: {value}")
    print(f"artifacts: {out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
