"""
Report command implementation.

Rebuilds ``summary.txt`` and ``curves.svg`` from per-cell CSVs already present
in an output directory. Diversity statistics need the adversarial sets of a
live run, so the rebuilt table leaves that column empty.
"""
from __future__ import annotations

import argparse
import logging

from ..config import ConfigManager
from ..constants import CURVES_FILE, SUMMARY_FILE
from ..errors import EXIT_SUCCESS, InvalidArgumentError
from ..lib.metrics import curves_from_records, mean_curve, summarize_cell
from ..lib.output import atomic_write_text, read_csv, render_curves_svg, render_summary
from .base import BaseCommand

logger = logging.getLogger(__name__)


class ReportCommand(BaseCommand):
    """Regenerate report artifacts from CSVs."""

    def __init__(self, args: argparse.Namespace, config_manager: ConfigManager):
        super().__init__(args, config_manager)

    def run(self) -> int:
        out_dir = self.output_dir()
        if not out_dir.is_dir():
            raise InvalidArgumentError(f"output directory not found: {out_dir}")
        paths = sorted(out_dir.glob("*.csv"))
        if not paths:
            raise InvalidArgumentError(f"no CSV files in {out_dir}")

        summaries, curves, labels = [], [], []
        for path in paths:
            records = read_csv(path)
            if not records:
                logger.warning(f"skipping {path.name}: no rounds recorded")
                continue
            summaries.append(summarize_cell(path.stem, records))
            curves.append(mean_curve(list(curves_from_records(records).values())))
            labels.append(path.stem)
        if not summaries:
            raise InvalidArgumentError(f"no rounds recorded in any CSV under {out_dir}")

        summary = render_summary(summaries)
        atomic_write_text(out_dir / SUMMARY_FILE, summary)
        render_curves_svg(curves, labels, out_dir / CURVES_FILE)
        print(summary, end="")
        return EXIT_SUCCESS
