"""
Entry point for the `advdal` command line application.

This module parses the command line, configures logging and maps the
outcome to a process exit code. Subcommand definitions live in
:mod:`advdal.cli`.
"""
from __future__ import annotations

import logging
import sys

from .cli import build_parser, run_command
from .errors import EXIT_GENERAL_ERROR, EXIT_INTERRUPTED, EXIT_SUCCESS, EXIT_USAGE_ERROR

logger = logging.getLogger(__name__)

TRACE_LOGGER = "advdal.lib.verifier.trace"


def configure_logging(verbose_level: int) -> None:
    """INFO by default, DEBUG from one ``--verbose``; the verifier trace needs two."""
    level = logging.DEBUG if verbose_level > 0 else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("advdal").setLevel(level)
    logging.getLogger(TRACE_LOGGER).setLevel(logging.DEBUG if verbose_level >= 2 else logging.INFO)


def main(argv: list[str] | None = None) -> int:
    """Entry point for the ``advdal`` command.

    Parameters
    ----------
    argv : list of str, optional
        Arguments to parse, by default ``sys.argv[1:]``

    Returns
    -------
    int
        Exit code: ``0`` success, ``1`` runtime failure, ``2`` usage,
        configuration or format error, ``130`` interrupted.
    """
    if argv is None:
        argv = sys.argv[1:]

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # --help exits with 0, usage errors with 2
        return EXIT_SUCCESS if e.code in (0, None) else EXIT_USAGE_ERROR

    verbose_level = getattr(args, "verbose", 0) or 0
    configure_logging(verbose_level)

    try:
        return run_command(args)
    except KeyboardInterrupt:
        print("Interrupted", file=sys.stderr)
        return EXIT_INTERRUPTED
    except Exception:
        logger.exception("Unexpected error occurred")
        return EXIT_GENERAL_ERROR


if __name__ == "__main__":
    sys.exit(main())
