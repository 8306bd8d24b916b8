"""
Standardized error handling for advdal.

This module provides consistent error handling patterns including
custom exceptions, error formatting, and standardized exit codes.
"""
from __future__ import annotations

import sys
from typing import Optional


# Exit codes
EXIT_SUCCESS = 0
EXIT_GENERAL_ERROR = 1
EXIT_USAGE_ERROR = 2
EXIT_INTERRUPTED = 130


class AdvdalError(Exception):
    """Base exception for all advdal errors."""

    def __init__(self, message: str, exit_code: int = EXIT_GENERAL_ERROR):
        """Initialize error with message and exit code.

        Parameters
        ----------
        message : str
            Error message
        exit_code : int
            Exit code for CLI
        """
        super().__init__(message)
        self.exit_code = exit_code


class InvalidArgumentError(AdvdalError, ValueError):
    """Operation called with arguments that violate its preconditions."""

    def __init__(self, message: str):
        super().__init__(f"Invalid argument: {message}", EXIT_USAGE_ERROR)


class FormatError(AdvdalError, ValueError):
    """Malformed binary input (IDX, CIFAR-10 or model container)."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"Format error: {message} at byte {offset}", EXIT_USAGE_ERROR)
        self.offset = offset


class ConfigError(AdvdalError):
    """Error in configuration parsing or validation."""

    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        location = ""
        if line is not None:
            location += f"line {line}: "
        if key is not None:
            location += f"{key}: "
        super().__init__(f"Configuration error: {location}{message}", EXIT_USAGE_ERROR)
        self.line = line
        self.key = key


class OutputError(AdvdalError):
    """Error writing reports, CSVs or models."""

    def __init__(self, message: str):
        super().__init__(f"Output error: {message}", EXIT_GENERAL_ERROR)


def handle_error(error: BaseException, verbose: bool = False) -> int:
    """Handle errors with consistent formatting and exit codes.

    Parameters
    ----------
    error : BaseException
        Exception to handle
    verbose : bool
        Whether to show full traceback

    Returns
    -------
    int
        Exit code
    """
    if isinstance(error, AdvdalError):
        print(f"Error: {error}", file=sys.stderr)
        return error.exit_code
    elif isinstance(error, FileNotFoundError):
        print(f"Error: File not found: {error}", file=sys.stderr)
        return EXIT_USAGE_ERROR
    elif isinstance(error, KeyboardInterrupt):
        print("\nOperation cancelled by user", file=sys.stderr)
        return EXIT_INTERRUPTED
    else:
        if verbose:
            import traceback
            traceback.print_exc(file=sys.stderr)
        else:
            print(f"Error: {error}", file=sys.stderr)
        return EXIT_GENERAL_ERROR
