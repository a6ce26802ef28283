"""Command-line front end.

One subcommand per experiment, each taking ``--config`` plus optional
``--seed`` and ``--out-dir`` overrides, and a ``plotdata`` converter that
re-emits contour/error-bar CSVs in a two-column gnuplot layout.  Exit
codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import EXPERIMENTS, ConfigError, load_scenario
from .scenarios import run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twosb",
        description="Sideband-separating receiver simulation and digital "
        "sideband-rejection compensation experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="scenario TOML file")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out-dir", default=None, help="override the output directory")
    p = sub.add_parser("plotdata", help="convert a result CSV to gnuplot two-column blocks")
    p.add_argument("csv", help="contours_*.csv or errorbars_*.csv file")
    p.add_argument("--out", default=None, help="output path (default: alongside, .dat)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "plotdata":
        from .csvio import write_plotdata

        src = Path(args.csv)
        out = Path(args.out) if args.out else src.with_suffix(".dat")
        try:
            write_plotdata(src, out)
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        return 0
    try:
        cfg = load_scenario(
            args.config,
            experiment=args.command,
            seed=args.seed,
            out_dir=args.out_dir,
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    status, _ = run_experiment(cfg)
    return status


if __name__ == "__main__":
    sys.exit(main())
