"""
Run command implementation.

Executes every (strategy × augmentation) cell of an experiment configuration
and writes the per-cell CSVs, final models, summary table and accuracy-curve
SVG into the output directory.
"""
from __future__ import annotations

import argparse
import logging
from pathlib import Path
from typing import List, Optional

import numpy as np

from ..config import ConfigManager
from ..constants import AUGMENT_NONE, CURVES_FILE, MODEL_SUFFIX, MODELS_DIR, SUMMARY_FILE
from ..errors import EXIT_SUCCESS
from ..lib.datasets import load_dataset
from ..lib.engine import ExperimentConfig, ExperimentResult, run_experiment
from ..lib.metrics import (
    CellSummary, CurvePoint, DiversityStat, aggregate_runs, curves_from_records, diversity,
    mean_curve, summarize_cell,
)
from ..lib.model_io import save_model
from ..lib.output import RecordStream, atomic_write_text, render_curves_svg, render_summary
from ..lib.utils import derive_seed
from .base import BaseCommand

logger = logging.getLogger(__name__)

_DIVERSITY_TAG = 2


class RunCommand(BaseCommand):
    """Run a configured experiment grid."""

    def __init__(self, args: argparse.Namespace, config_manager: ConfigManager):
        super().__init__(args, config_manager)

    def run(self) -> int:
        """Execute the run command.

        Returns
        -------
        int
            Exit code (0 for success; failures raise and are mapped by the CLI)
        """
        configs = self.load_configs()
        out_dir = self.output_dir()
        # every cell shares one dataset section
        data = load_dataset(configs[0].dataset)

        summaries: List[CellSummary] = []
        curves: List[List[CurvePoint]] = []
        for config in configs:
            logger.info(f"[{config.cell}] starting {config.runs} run(s)")
            with RecordStream(out_dir / f"{config.cell}.csv") as stream:
                result = run_experiment(config, data, on_round=stream.write)
            self._save_models(out_dir, result)
            summaries.append(summarize_cell(config.cell, result.records, self._diversity(config, result)))
            curves.append(mean_curve(list(curves_from_records(result.records).values())))

        summary = render_summary(summaries)
        atomic_write_text(out_dir / SUMMARY_FILE, summary)
        render_curves_svg(curves, [c.cell for c in configs], out_dir / CURVES_FILE)
        print(summary, end="")
        logger.info(f"wrote {len(configs)} cell(s) to {out_dir}")
        return EXIT_SUCCESS

    def _save_models(self, out_dir: Path, result: ExperimentResult) -> None:
        for run in result.runs:
            save_model(run.model, out_dir / MODELS_DIR / f"{result.config.cell}-run{run.run}{MODEL_SUFFIX}")

    def _diversity(self, config: ExperimentConfig, result: ExperimentResult) -> Optional[DiversityStat]:
        """Aggregate final-round adversarial diversity over runs; None for non-adversarial cells."""
        if config.augmentation == AUGMENT_NONE:
            return None
        stats = []
        for run in result.runs:
            count = sum(len(group) for group in run.adversarial_sets)
            if count < 2:
                logger.debug(f"[{config.cell}] run {run.run}: {count} adversarial point(s), no diversity")
                continue
            rng = np.random.default_rng(derive_seed(run.seed, _DIVERSITY_TAG))
            stats.append(diversity(run.model, run.adversarial_sets, config.diversity_cap, rng))
        return aggregate_runs(stats) if stats else None
