"""
Query strategies.

Each strategy maps a model snapshot and a candidate sub-pool to the ids to
send to the oracle:

- ``random``: uniform sample without replacement
- ``fvaal``: smallest binary-search FGSM margin first
- ``dfal``: smallest DeepFool perturbation first
- ``badge``: k-means++ seeding over output-layer gradient embeddings

Margin-based strategies also return their per-sample adversarial points so
the engine can reuse them for augmentation.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from ..constants import STRATEGY_BADGE, STRATEGY_DFAL, STRATEGY_FVAAL, STRATEGY_RANDOM, UNFLIPPED_MARGIN
from ..errors import InvalidArgumentError
from .attacks import AttackParams, deepfool, margin_by_binary_search
from .network import MlpModel, softmax
from .utils import parallel_map

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Candidates:
    """Candidate sub-pool: stable sample ids and their feature rows."""

    ids: np.ndarray
    features: np.ndarray

    def __post_init__(self) -> None:
        ids = np.asarray(self.ids, dtype=np.int64).reshape(-1)
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] != ids.shape[0]:
            raise InvalidArgumentError(f"{ids.shape[0]} candidate ids but features of shape {features.shape}")
        if len(np.unique(ids)) != len(ids):
            raise InvalidArgumentError("candidate ids must be distinct")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "features", features)

    def __len__(self) -> int:
        return int(self.ids.shape[0])


@dataclass(frozen=True, eq=False)
class Byproduct:
    """Attack output kept for a chosen sample.

    ``margin`` is the L-infinity size of the perturbation that flipped the
    prediction, used to seed the verifier's epsilon.
    """

    adversarial: Optional[np.ndarray] = None
    margin: Optional[float] = None


@dataclass(frozen=True, eq=False)
class SelectionResult:
    chosen_ids: List[int]
    byproducts: Dict[int, Byproduct] = field(default_factory=dict)


def _check_batch_size(n: int, available: int) -> None:
    if n < 0:
        raise InvalidArgumentError(f"batch size must be non-negative, got {n}")
    if n > available:
        raise InvalidArgumentError(f"cannot select {n} samples from {available} candidates")


def select_random(pool_ids: Sequence[int], n: int, rng: np.random.Generator) -> SelectionResult:
    """Uniform sample of ``n`` ids without replacement."""
    pool_ids = np.asarray(pool_ids, dtype=np.int64)
    _check_batch_size(n, len(pool_ids))
    chosen = rng.choice(pool_ids, size=n, replace=False) if n else np.zeros(0, dtype=np.int64)
    return SelectionResult([int(i) for i in chosen])


def _rank(ids: np.ndarray, flipped: Sequence[bool], scores: Sequence[float], n: int) -> List[int]:
    """Flipped before unflipped, then ascending score, then ascending id; returns row positions."""
    keys = [
        (not f, s if f else UNFLIPPED_MARGIN, int(i))
        for i, f, s in zip(ids, flipped, scores)
    ]
    order = sorted(range(len(keys)), key=keys.__getitem__)
    return order[:n]


def select_fvaal(
    model: MlpModel,
    candidates: Candidates,
    n: int,
    params: AttackParams,
    workers: int = 1,
) -> SelectionResult:
    """Pick the ``n`` candidates with the smallest binary-search FGSM margin."""
    _check_batch_size(n, len(candidates))
    estimates = parallel_map(lambda x: margin_by_binary_search(model, x, params), candidates.features, workers)
    rows = _rank(
        candidates.ids,
        [e.flipped for e in estimates],
        [e.eps_star for e in estimates],
        n,
    )
    byproducts = {}
    for row in rows:
        estimate = estimates[row]
        if estimate.flipped:
            byproducts[int(candidates.ids[row])] = Byproduct(estimate.adversarial, estimate.eps_star)
    return SelectionResult([int(candidates.ids[row]) for row in rows], byproducts)


def select_dfal(
    model: MlpModel,
    candidates: Candidates,
    n: int,
    params: AttackParams,
    workers: int = 1,
) -> SelectionResult:
    """Pick the ``n`` candidates with the smallest DeepFool L2 perturbation."""
    _check_batch_size(n, len(candidates))
    results = parallel_map(lambda x: deepfool(model, x, params), candidates.features, workers)
    rows = _rank(
        candidates.ids,
        [r.flipped for r in results],
        [r.perturbation_norm for r in results],
        n,
    )
    byproducts = {}
    for row in rows:
        result = results[row]
        if result.flipped:
            byproducts[int(candidates.ids[row])] = Byproduct(result.adversarial, result.linf_norm)
    return SelectionResult([int(candidates.ids[row]) for row in rows], byproducts)


def badge_embeddings(model: MlpModel, features: np.ndarray) -> np.ndarray:
    """Gradient of the pseudo-labeled cross-entropy with respect to ``W2``, one flattened row per input.

    Block ``c`` of each row is ``(softmax_c - [c == argmax]) * penultimate``.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.shape[0] == 0:
        return np.zeros((0, model.num_classes * model.hidden_dim))
    hidden = model.penultimate_batch(features)
    logits = hidden @ model.W2.T + model.b2
    residual = softmax(logits)
    residual[np.arange(len(features)), np.argmax(logits, axis=1)] -= 1.0
    return (residual[:, :, None] * hidden[:, None, :]).reshape(len(features), -1)


def kmeanspp_select(embeddings: np.ndarray, n: int, rng: np.random.Generator) -> List[int]:
    """k-means++ seeding used as the batch itself.

    The first index is uniform; each next index is drawn with probability
    proportional to the squared distance to the nearest chosen embedding.
    When every remaining distance is zero the draw falls back to uniform over
    the unchosen indices.
    """
    embeddings = np.asarray(embeddings, dtype=np.float64)
    count = embeddings.shape[0]
    _check_batch_size(n, count)
    if n == 0:
        return []
    chosen = [int(rng.integers(count))]
    nearest = cdist(embeddings, embeddings[chosen], "sqeuclidean").ravel()
    while len(chosen) < n:
        nearest[chosen] = 0.0
        total = nearest.sum()
        if total > 0.0:
            pick = int(rng.choice(count, p=nearest / total))
        else:
            remaining = np.setdiff1d(np.arange(count), chosen)
            pick = int(rng.choice(remaining))
        chosen.append(pick)
        nearest = np.minimum(nearest, cdist(embeddings, embeddings[[pick]], "sqeuclidean").ravel())
    return chosen


def select_badge(model: MlpModel, candidates: Candidates, n: int, rng: np.random.Generator) -> SelectionResult:
    _check_batch_size(n, len(candidates))
    rows = kmeanspp_select(badge_embeddings(model, candidates.features), n, rng)
    return SelectionResult([int(candidates.ids[row]) for row in rows])


def select(
    strategy: str,
    model: MlpModel,
    candidates: Candidates,
    n: int,
    rng: np.random.Generator,
    params: AttackParams,
    workers: int = 1,
) -> SelectionResult:
    """Dispatch to the named strategy."""
    if strategy == STRATEGY_RANDOM:
        return select_random(candidates.ids, n, rng)
    if strategy == STRATEGY_FVAAL:
        return select_fvaal(model, candidates, n, params, workers)
    if strategy == STRATEGY_DFAL:
        return select_dfal(model, candidates, n, params, workers)
    if strategy == STRATEGY_BADGE:
        return select_badge(model, candidates, n, rng)
    raise InvalidArgumentError(f"unknown strategy {strategy!r}")
