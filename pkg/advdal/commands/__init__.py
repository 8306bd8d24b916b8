"""
Command implementations for advdal CLI.

Each subcommand is implemented as a separate module following the
``BaseCommand`` pattern.
"""

# Re-export command classes for easy importing
from .base import BaseCommand
from .bench import BenchCommand
from .report import ReportCommand
from .run import RunCommand
from .verify_one import VerifyOneCommand

__all__ = [
    'BaseCommand',
    'BenchCommand',
    'ReportCommand',
    'RunCommand',
    'VerifyOneCommand',
]
