"""
Base command class for advdal CLI commands.

This module provides the abstract base class that all advdal commands inherit
from, establishing common patterns for argument handling and configuration
access.
"""
from __future__ import annotations

import argparse
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List

from ..config import ConfigManager, load_experiment_configs
from ..lib.engine import ExperimentConfig

logger = logging.getLogger(__name__)

# command-line flag -> configuration key it overrides
FLAG_OVERRIDES = {
    "seed": "experiment.seed",
    "workers": "experiment.workers",
    "time_limit_secs": "harvest.time_limit",
}


class BaseCommand(ABC):
    """Abstract base class for all advdal commands.

    This class provides common functionality shared across commands including:
    - Configuration management
    - Command-line overrides of configuration keys
    - Output directory handling
    """

    def __init__(self, args: argparse.Namespace, config_manager: ConfigManager):
        """Initialize command with parsed arguments and configuration.

        Parameters
        ----------
        args : argparse.Namespace
            Parsed command line arguments
        config_manager : ConfigManager
            Configuration manager instance
        """
        self.args = args
        self.config = config_manager

    @abstractmethod
    def run(self) -> int:
        """Execute the command.

        Returns
        -------
        int
            Exit code (0 for success, non-zero for failure)
        """
        pass

    def overrides(self) -> Dict[str, Any]:
        """Configuration keys set explicitly on the command line."""
        values = {}
        for flag, key in FLAG_OVERRIDES.items():
            value = getattr(self.args, flag, None)
            if value is not None:
                values[key] = value
        return values

    def load_configs(self) -> List[ExperimentConfig]:
        """One validated config per experiment cell, command-line flags applied."""
        configs = load_experiment_configs(self.config, self.overrides())
        logger.debug(f"loaded {len(configs)} experiment cells: {', '.join(c.cell for c in configs)}")
        return configs

    def output_dir(self) -> Path:
        return Path(getattr(self.args, "out", None) or "results")
