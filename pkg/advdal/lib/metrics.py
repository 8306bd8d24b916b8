"""
Label-efficiency and diversity metrics.

- ``aubc``: area under the accuracy/labeled-budget curve, normalized by the
  budget span (trapezoidal rule)
- ``diversity``: pairwise penultimate-embedding distances of adversarial sets
- ``aggregate_runs``: combines per-run diversity statistics with the law of
  total variance (population convention)
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.spatial.distance import pdist

from ..constants import DEFAULT_DIVERSITY_CAP
from ..errors import InvalidArgumentError
from .engine import RoundRecord
from .network import MlpModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CurvePoint:
    budget: int
    accuracy: float


@dataclass(frozen=True)
class DiversityStat:
    mean: float
    std: float
    pair_count: int


def aubc(curve: Sequence[CurvePoint]) -> float:
    """Trapezoidal area under the curve divided by ``budget_max - budget_min``."""
    if len(curve) < 2:
        raise InvalidArgumentError("aubc needs at least two curve points")
    budgets = np.array([p.budget for p in curve], dtype=np.float64)
    accuracies = np.array([p.accuracy for p in curve], dtype=np.float64)
    if np.any(np.diff(budgets) <= 0):
        raise InvalidArgumentError("curve budgets must be strictly increasing")
    return float(trapezoid(accuracies, budgets) / (budgets[-1] - budgets[0]))


def diversity(
    model: MlpModel,
    adv_sets: Sequence[Sequence[np.ndarray]],
    sample_cap: int = DEFAULT_DIVERSITY_CAP,
    rng: Optional[np.random.Generator] = None,
) -> DiversityStat:
    """Mean and population std of pairwise Euclidean distances between penultimate embeddings.

    Parameters
    ----------
    model : MlpModel
        Model providing the embedding
    adv_sets : Sequence[Sequence[np.ndarray]]
        Adversarial points grouped by source sample
    sample_cap : int
        Sources kept; a uniform subsample is drawn when exceeded
    rng : np.random.Generator, optional
        Generator for that subsample

    Returns
    -------
    DiversityStat
        Statistics over all unordered pairs of points
    """
    if sample_cap <= 0:
        raise InvalidArgumentError(f"sample_cap must be positive, got {sample_cap}")
    sets = list(adv_sets)
    if len(sets) > sample_cap:
        rng = rng if rng is not None else np.random.default_rng(0)
        keep = np.sort(rng.choice(len(sets), size=sample_cap, replace=False))
        sets = [sets[i] for i in keep]
    points = [np.asarray(p, dtype=np.float64) for group in sets for p in group]
    if len(points) < 2:
        raise InvalidArgumentError("diversity needs at least two adversarial points")
    distances = pdist(model.penultimate_batch(np.stack(points)))
    return DiversityStat(float(distances.mean()), float(distances.std()), int(distances.size))


def aggregate_runs(stats: Sequence[DiversityStat]) -> DiversityStat:
    """Mean of run means; variance = mean of run variances + variance of run means."""
    if not stats:
        raise InvalidArgumentError("aggregate_runs needs at least one run")
    if len(stats) == 1:
        return stats[0]
    means = np.array([s.mean for s in stats])
    variances = np.array([s.std for s in stats]) ** 2
    total_variance = variances.mean() + means.var()
    return DiversityStat(float(means.mean()), float(np.sqrt(total_variance)), sum(s.pair_count for s in stats))


def curves_from_records(records: Iterable[RoundRecord]) -> Dict[int, List[CurvePoint]]:
    """Per-run curves ordered by round."""
    curves: Dict[int, List[RoundRecord]] = {}
    for record in records:
        curves.setdefault(record.run, []).append(record)
    return {
        run: [CurvePoint(r.labeled, r.accuracy) for r in sorted(rows, key=lambda r: r.round)]
        for run, rows in sorted(curves.items())
    }


def mean_curve(curves: Sequence[Sequence[CurvePoint]]) -> List[CurvePoint]:
    """Pointwise mean accuracy over runs, truncated to the shortest run."""
    if not curves:
        raise InvalidArgumentError("mean_curve needs at least one curve")
    length = min(len(c) for c in curves)
    return [
        CurvePoint(curves[0][i].budget, float(np.mean([c[i].accuracy for c in curves])))
        for i in range(length)
    ]


@dataclass(frozen=True)
class CellSummary:
    """One row of the summary table."""

    cell: str
    runs: int
    aubc_mean: float
    aubc_std: float
    final_accuracy: float
    diversity: Optional[DiversityStat] = None


def summarize_cell(cell: str, records: Sequence[RoundRecord], diversity_stat: Optional[DiversityStat] = None) -> CellSummary:
    curves = list(curves_from_records(records).values())
    if not curves:
        raise InvalidArgumentError(f"no records for cell {cell}")
    scores = [aubc(c) for c in curves if len(c) >= 2]
    finals = [c[-1].accuracy for c in curves]
    return CellSummary(
        cell=cell,
        runs=len(curves),
        aubc_mean=float(np.mean(scores)) if scores else float("nan"),
        aubc_std=float(np.std(scores)) if scores else float("nan"),
        final_accuracy=float(np.mean(finals)),
        diversity=diversity_stat,
    )
