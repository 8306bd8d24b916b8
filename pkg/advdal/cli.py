"""
Argument parsing and command dispatch.

Global options apply to all subcommands and each subcommand implements its
own options in :mod:`advdal.commands`. To add a new command, extend
``build_parser`` and ``run_command``.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .commands import BenchCommand, ReportCommand, RunCommand, VerifyOneCommand
from .config import ConfigManager
from .errors import EXIT_SUCCESS, EXIT_USAGE_ERROR, handle_error

logger = logging.getLogger(__name__)


def _positive_float(value: str) -> float:
    try:
        parsed = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {value!r}")
    if not parsed > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return parsed


def _non_negative_int(value: str) -> int:
    try:
        parsed = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {value!r}")
    if parsed < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {value}")
    return parsed


def build_parser() -> argparse.ArgumentParser:
    """Construct the argument parser used for all commands.

    Returns
    -------
    argparse.ArgumentParser
        Fully configured parser with subcommands.
    """
    parser = argparse.ArgumentParser(
        prog="advdal",
        description=(
            "Deep active learning with formally verified adversarial examples. "
            "Runs experiment grids, rebuilds reports and inspects single verifier harvests."
        ),
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  advdal run --config experiments/blobs.conf --out results/blobs
  advdal run --config experiments/mnist.conf --out results/mnist --seed 3 --workers 4
  advdal report --out results/mnist
  advdal verify-one --model results/mnist/models/random-fv_adv-run0.advm \\
                    --config experiments/mnist.conf --index 17 --eps 0.05 --k 5
  advdal bench --hidden 8 --inputs 4 --queries 100
        """,
    )

    parser.add_argument("--version", action="store_true", help="Show the program's version number and exit")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="Enable debug output; repeat to include the verifier query trace")

    subparsers = parser.add_subparsers(dest="command", metavar="<command>", help="Available subcommands")

    # run command
    run_parser = subparsers.add_parser("run", help="Run every (strategy x augmentation) cell of an experiment")
    run_parser.add_argument("--config", required=True, help="Experiment configuration file")
    run_parser.add_argument("--out", default="results", help="Output directory (default: results)")
    run_parser.add_argument("--seed", type=int, help="Override experiment.seed")
    run_parser.add_argument("--workers", type=_non_negative_int,
                            help="Worker threads; 0 means available parallelism (overrides experiment.workers)")
    run_parser.add_argument("--time-limit-secs", type=_positive_float, dest="time_limit_secs",
                            help="Per-harvest verifier time budget (overrides harvest.time_limit)")

    # report command
    report_parser = subparsers.add_parser("report", help="Rebuild summary.txt and curves.svg from run CSVs")
    report_parser.add_argument("--out", default="results", help="Directory holding the per-cell CSVs")

    # verify-one command
    verify_parser = subparsers.add_parser("verify-one", help="Harvest counterexamples around one dataset input")
    verify_parser.add_argument("--model", required=True, help="Serialized model (.advm)")
    verify_parser.add_argument("--config", required=True, help="Experiment configuration naming the dataset")
    verify_parser.add_argument("--index", type=int, required=True, help="Sample index in the chosen split")
    verify_parser.add_argument("--eps", type=float,
                               help="Initial L-infinity radius (default: experiment.fixed_query_eps)")
    verify_parser.add_argument("--k", type=int, default=1, help="Counterexamples to collect (default: 1)")
    verify_parser.add_argument("--split", choices=["test", "train"], default="test", help="Dataset split")
    verify_parser.add_argument("--time-limit-secs", type=_positive_float, dest="time_limit_secs",
                               help="Harvest time budget (overrides harvest.time_limit)")

    # bench command
    bench_parser = subparsers.add_parser("bench", help="Measure verifier node throughput on random networks")
    bench_parser.add_argument("--hidden", type=int, default=8, help="Hidden units (default: 8)")
    bench_parser.add_argument("--inputs", type=int, default=4, help="Input dimension (default: 4)")
    bench_parser.add_argument("--classes", type=int, default=3, help="Output classes (default: 3)")
    bench_parser.add_argument("--queries", type=int, default=50, help="Robustness queries (default: 50)")
    bench_parser.add_argument("--seed", type=int, default=0, help="Seed for networks and queries")
    bench_parser.add_argument("--time-limit-secs", type=_positive_float, dest="time_limit_secs", default=5.0,
                              help="Per-query time budget (default: 5)")
    return parser


def run_command(args: argparse.Namespace) -> int:
    """Dispatch the parsed arguments to the corresponding subcommand.

    Parameters
    ----------
    args:
        The parsed arguments from :func:`build_parser`.

    Returns
    -------
    int
        Exit code.
    """
    verbose = getattr(args, "verbose", 0) > 0
    try:
        if args.version and not args.command:
            print(f"advdal {__version__}")
            return EXIT_SUCCESS
        if not args.command:
            build_parser().print_help(sys.stderr)
            return EXIT_USAGE_ERROR

        config_path = getattr(args, "config", None)
        cfg_mgr = ConfigManager(config_path=Path(config_path) if config_path else None)

        if args.command == "run":
            return RunCommand(args, cfg_mgr).run()
        elif args.command == "report":
            return ReportCommand(args, cfg_mgr).run()
        elif args.command == "verify-one":
            return VerifyOneCommand(args, cfg_mgr).run()
        elif args.command == "bench":
            return BenchCommand(args, cfg_mgr).run()
        else:
            print(f"Error: Unknown subcommand '{args.command}'.", file=sys.stderr)
            print("Use -h or --help for usage information.", file=sys.stderr)
            return EXIT_USAGE_ERROR
    except (KeyboardInterrupt, Exception) as e:
        return handle_error(e, verbose)
