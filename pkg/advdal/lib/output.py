"""
Report emission: round-record CSVs, accuracy-curve SVG and the summary table.

All writers go through an atomic temp-file-and-rename so a partially
written report never replaces a complete one, and every output is
byte-deterministic given its input.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import shutil
import tempfile
from pathlib import Path
from typing import IO, List, Optional, Sequence, Union

from ..constants import CSV_HEADER
from ..errors import FormatError, InvalidArgumentError, OutputError
from .engine import RoundRecord
from .metrics import CellSummary, CurvePoint

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_INT_FIELDS = ("run", "round", "labeled", "adv_added", "sat", "unsat", "timeout")
_PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def atomic_write_bytes(path: Path, data: bytes) -> None:
    """Write file atomically using temporary file and rename.

    Parameters
    ----------
    path : Path
        Target file path
    data : bytes
        Content to write

    Raises
    ------
    OutputError
        If the directory cannot be created or the file cannot be written
    """
    tmp_path: Optional[Path] = None
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(
            mode="wb",
            dir=path.parent,
            prefix=f".{path.name}.tmp.",
            delete=False,
        ) as tmp_file:
            tmp_file.write(data)
            tmp_path = Path(tmp_file.name)
        shutil.move(str(tmp_path), str(path))
    except OSError as e:
        if tmp_path is not None and tmp_path.exists():
            try:
                tmp_path.unlink()
            except OSError:
                pass
        logger.error(f"Atomic write failed for {path}: {e}")
        raise OutputError(f"cannot write {path}: {e}") from e


def atomic_write_text(path: Path, content: str) -> None:
    atomic_write_bytes(path, content.encode("utf-8"))


def _format_row(record: RoundRecord) -> List[str]:
    return [
        str(getattr(record, name)) if name in _INT_FIELDS else repr(float(getattr(record, name)))
        for name in CSV_HEADER
    ]


def format_csv(records: Sequence[RoundRecord]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for record in records:
        writer.writerow(_format_row(record))
    return buffer.getvalue()


def write_csv(records: Sequence[RoundRecord], path: PathLike) -> None:
    """Write records with a header row; floats use their shortest round-trip form."""
    if not records:
        raise InvalidArgumentError("write_csv needs at least one record")
    atomic_write_text(Path(path), format_csv(records))


class RecordStream:
    """Append-as-you-go CSV writer used while an experiment is running."""

    def __init__(self, path: PathLike):
        self.path = Path(path)
        self._handle: Optional[IO[str]] = None
        self._writer = None

    def __enter__(self) -> "RecordStream":
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._handle = open(self.path, "w", encoding="utf-8", newline="")
        except OSError as e:
            raise OutputError(f"cannot write {self.path}: {e}") from e
        self._writer = csv.writer(self._handle, lineterminator="\n")
        self._writer.writerow(CSV_HEADER)
        return self

    def write(self, record: RoundRecord) -> None:
        if self._writer is None or self._handle is None:
            raise OutputError(f"stream for {self.path} is not open")
        self._writer.writerow(_format_row(record))
        self._handle.flush()

    def __exit__(self, *exc_info) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None
            self._writer = None


def read_csv(path: PathLike) -> List[RoundRecord]:
    """Load records written by ``write_csv`` or ``RecordStream``."""
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise FormatError(f"{path} does not start with the expected CSV header", 0)
    line_starts = [0] + [i + 1 for i, ch in enumerate(text) if ch == "\n"]
    records = []
    for line_no, row in enumerate(rows[1:], start=2):
        offset = line_starts[min(line_no - 1, len(line_starts) - 1)]
        if len(row) != len(CSV_HEADER):
            raise FormatError(f"{path} line {line_no} has {len(row)} fields", offset)
        try:
            values = {
                name: int(value) if name in _INT_FIELDS else float(value)
                for name, value in zip(CSV_HEADER, row)
            }
        except ValueError as e:
            raise FormatError(f"{path} line {line_no}: {e}", offset) from e
        records.append(RoundRecord(**values))
    return records


def render_curves_svg(
    curves: Sequence[Sequence[CurvePoint]],
    labels: Sequence[str],
    path: Optional[PathLike] = None,
) -> str:
    """Line chart with one polyline per curve, axis ticks and a legend.

    Returns the SVG text and writes it to ``path`` when given.
    """
    if not curves:
        raise InvalidArgumentError("render_curves_svg needs at least one curve")
    if len(labels) != len(curves):
        raise InvalidArgumentError(f"{len(labels)} labels for {len(curves)} curves")
    if any(len(c) == 0 for c in curves):
        raise InvalidArgumentError("curves must be non-empty")

    width, height = 720, 440
    left, right, top, bottom = 60, 200, 20, 50
    plot_w, plot_h = width - left - right, height - top - bottom
    budgets = [p.budget for c in curves for p in c]
    x_min, x_max = min(budgets), max(budgets)
    if x_max == x_min:
        x_max = x_min + 1

    def sx(budget: float) -> float:
        return left + (budget - x_min) / (x_max - x_min) * plot_w

    def sy(acc: float) -> float:
        return top + (1.0 - acc) * plot_h

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
    ]
    for i in range(6):
        acc = i / 5
        y = sy(acc)
        lines.append(f'<line x1="{left - 5}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>')
        lines.append(
            f'<text x="{left - 8}" y="{y + 4:.2f}" font-size="11" text-anchor="end">{acc:.1f}</text>'
        )
    for i in range(6):
        budget = x_min + (x_max - x_min) * i / 5
        x = sx(budget)
        lines.append(f'<line x1="{x:.2f}" y1="{top + plot_h}" x2="{x:.2f}" y2="{top + plot_h + 5}" stroke="black"/>')
        lines.append(
            f'<text x="{x:.2f}" y="{top + plot_h + 18}" font-size="11" text-anchor="middle">{budget:g}</text>'
        )
    lines.append(
        f'<text x="{left + plot_w / 2:.2f}" y="{height - 10}" font-size="12" text-anchor="middle">labeled samples</text>'
    )
    lines.append(
        f'<text x="15" y="{top + plot_h / 2:.2f}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 15 {top + plot_h / 2:.2f})">test accuracy</text>'
    )
    for index, (curve, label) in enumerate(zip(curves, labels)):
        color = _PALETTE[index % len(_PALETTE)]
        points = " ".join(f"{sx(p.budget):.2f},{sy(p.accuracy):.2f}" for p in curve)
        lines.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{points}"/>')
        ly = top + 16 * index + 10
        lx = left + plot_w + 15
        lines.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        lines.append(f'<text x="{lx + 26}" y="{ly + 4}" font-size="11">{_escape(label)}</text>')
    lines.append("</svg>")
    svg = "\n".join(lines) + "\n"
    if path is not None:
        atomic_write_text(Path(path), svg)
    return svg


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _mark(values: Sequence[Optional[float]]) -> List[str]:
    """Best value wrapped in ``**``, second best in ``__``."""
    ranked = sorted(
        (i for i, v in enumerate(values) if v is not None and not math.isnan(v)),
        key=lambda i: (-values[i], i),
    )
    marks = [""] * len(values)
    if ranked:
        marks[ranked[0]] = "**"
    if len(ranked) > 1:
        marks[ranked[1]] = "__"
    return marks


def render_summary(cells: Sequence[CellSummary]) -> str:
    """Plain-text table of AUBC, final accuracy and adversarial diversity per cell."""
    if not cells:
        raise InvalidArgumentError("render_summary needs at least one cell")
    aubc_marks = _mark([c.aubc_mean for c in cells])
    final_marks = _mark([c.final_accuracy for c in cells])
    div_marks = _mark([c.diversity.mean if c.diversity else None for c in cells])

    header = ("cell", "runs", "aubc", "final_acc", "diversity")
    rows = []
    for cell, am, fm, dm in zip(cells, aubc_marks, final_marks, div_marks):
        div = f"{dm}{cell.diversity.mean:.4f}{dm} ± {cell.diversity.std:.4f}" if cell.diversity else "-"
        rows.append((
            cell.cell,
            str(cell.runs),
            f"{am}{cell.aubc_mean:.4f}{am} ± {cell.aubc_std:.4f}",
            f"{fm}{cell.final_accuracy:.4f}{fm}",
            div,
        ))
    widths = [max(len(r[i]) for r in [header, *rows]) for i in range(len(header))]
    out = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    out.append("  ".join("-" * w for w in widths))
    for row in rows:
        out.append("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())
    return "\n".join(out) + "\n"
