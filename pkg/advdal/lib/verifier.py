"""
Complete robustness verification for one-hidden-layer ReLU networks.

``solve`` answers "is there a point in the box around ``x`` where the target
class beats the source class?" by depth-first branch and bound over hidden
neuron phases:

1. Exclusion disjunctions (one coordinate per previously found witness) are
   resolved first by splitting the box on that coordinate.
2. Interval bounds on the pre-activations (exact for a single affine layer
   over a box) bound the logit difference; nodes whose upper bound cannot
   reach the strictness margin are pruned.
3. Once every neuron is sign-fixed the network is affine over the node, and
   feasibility is decided by the simplex kernel.

``harvest`` calls ``solve`` repeatedly, excluding each witness it finds and
escalating epsilon when a region is proven robust.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..constants import (
    DEFAULT_EPS_INCREMENT, DEFAULT_EPS_MAX, DEFAULT_EXCLUSION_RADIUS,
    DEFAULT_HARVEST_K, DEFAULT_HARVEST_TIME_LIMIT,
    EXCLUSION_SLACK, STRICTNESS_MARGIN,
)
from ..errors import InvalidArgumentError
from .network import MlpModel
from .simplex import LpStatus, find_feasible_point

logger = logging.getLogger(__name__)
trace_logger = logging.getLogger(__name__ + ".trace")

INACTIVE = -1
ACTIVE = 1


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned input region inside ``[0, 1]^d``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        lower = np.asarray(self.lower, dtype=np.float64).reshape(-1)
        upper = np.asarray(self.upper, dtype=np.float64).reshape(-1)
        if lower.shape != upper.shape:
            raise InvalidArgumentError("box bounds have different shapes")
        if np.any(lower > upper):
            raise InvalidArgumentError("box lower bound exceeds upper bound")
        if np.any(lower < 0.0) or np.any(upper > 1.0):
            raise InvalidArgumentError("box must lie within [0, 1]")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def around(cls, center: np.ndarray, epsilon: float) -> "Box":
        """``[x - eps, x + eps]`` intersected with ``[0, 1]^d``."""
        center = np.asarray(center, dtype=np.float64)
        return cls(np.clip(center - epsilon, 0.0, 1.0), np.clip(center + epsilon, 0.0, 1.0))

    def contains(self, point: np.ndarray) -> bool:
        return bool(np.all(point >= self.lower) and np.all(point <= self.upper))


@dataclass(frozen=True)
class Bounds:
    """Pre-activation intervals per hidden neuron and logit-difference intervals.

    ``diff_lower[i, k]`` / ``diff_upper[i, k]`` bound ``f_i - f_k`` over the box.
    """

    pre_lower: np.ndarray
    pre_upper: np.ndarray
    diff_lower: np.ndarray
    diff_upper: np.ndarray


def _pre_activation_bounds(model: MlpModel, lower: np.ndarray, upper: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mid = (lower + upper) / 2.0
    rad = (upper - lower) / 2.0
    center = model.W1 @ mid + model.b1
    spread = np.abs(model.W1) @ rad
    return center - spread, center + spread


def symbolic_bounds(model: MlpModel, box: Box) -> Bounds:
    """Interval bounds over ``box`` for every hidden pre-activation and logit difference."""
    if box.lower.shape != (model.input_dim,):
        raise InvalidArgumentError(f"box has dimension {box.lower.shape[0]}, model expects {model.input_dim}")
    pre_lower, pre_upper = _pre_activation_bounds(model, box.lower, box.upper)
    h_lower = np.maximum(pre_lower, 0.0)
    h_upper = np.maximum(pre_upper, 0.0)
    coeffs = model.W2[:, None, :] - model.W2[None, :, :]
    offsets = model.b2[:, None] - model.b2[None, :]
    low = np.minimum(coeffs * h_lower, coeffs * h_upper).sum(axis=-1) + offsets
    high = np.maximum(coeffs * h_lower, coeffs * h_upper).sum(axis=-1) + offsets
    return Bounds(pre_lower, pre_upper, low, high)


@dataclass(frozen=True, eq=False)
class RobustnessQuery:
    """Does any point of the epsilon box around ``center`` give ``target_class`` a higher logit than ``source_class``?

    ``exclusions`` are ``(point, radius)`` pairs; each removes the slab of
    half-width ``radius`` around ``point`` on the coordinate where ``point``
    is farthest from ``center``.
    """

    center: np.ndarray
    epsilon: float
    source_class: int
    target_class: int
    exclusions: Tuple[Tuple[np.ndarray, float], ...] = ()

    @classmethod
    def build(
        cls,
        model: MlpModel,
        x: np.ndarray,
        epsilon: float,
        exclusions: Sequence[Tuple[np.ndarray, float]] = (),
    ) -> "RobustnessQuery":
        """Query against the runner-up class at ``x``."""
        source, target = ranked_classes(model, x)
        return cls(np.asarray(x, dtype=np.float64), float(epsilon), source, target, tuple(exclusions))

    def validate(self, model: MlpModel) -> None:
        if self.center.shape != (model.input_dim,):
            raise InvalidArgumentError(f"query center has shape {self.center.shape}")
        if not self.epsilon > 0:
            raise InvalidArgumentError(f"epsilon must be positive, got {self.epsilon}")
        for cls_index in (self.source_class, self.target_class):
            if not 0 <= cls_index < model.num_classes:
                raise InvalidArgumentError(f"class {cls_index} outside [0, {model.num_classes})")
        if self.source_class == self.target_class:
            raise InvalidArgumentError("target class must differ from the source class")
        if model.predict(self.center) != self.source_class:
            raise InvalidArgumentError("source class must be the prediction at the query center")
        for point, radius in self.exclusions:
            if not radius > 0:
                raise InvalidArgumentError(f"exclusion radius must be positive, got {radius}")
            if np.shape(point) != self.center.shape:
                raise InvalidArgumentError("exclusion point has the wrong dimension")

    def exclusion_cuts(self) -> List[Tuple[int, float, float]]:
        """``(coordinate, center, radius)`` per exclusion."""
        cuts = []
        for point, radius in self.exclusions:
            point = np.asarray(point, dtype=np.float64)
            j = int(np.argmax(np.abs(point - self.center)))
            cuts.append((j, float(point[j]), float(radius)))
        return cuts


def ranked_classes(model: MlpModel, x: np.ndarray) -> Tuple[int, int]:
    """Predicted class and runner-up class (second-largest logit, lowest index on ties)."""
    if model.num_classes < 2:
        raise InvalidArgumentError("verification needs at least two classes")
    order = np.argsort(-model.forward(x), kind="stable")
    return int(order[0]), int(order[1])


class VerdictKind(str, Enum):
    SAT = "sat"
    UNSAT = "unsat"
    TIMEOUT = "timeout"


@dataclass(frozen=True, eq=False)
class Verdict:
    kind: VerdictKind
    witness: Optional[np.ndarray] = None
    nodes_explored: int = 0
    wall_time: float = 0.0
    lp_calls: int = 0

    @property
    def is_sat(self) -> bool:
        return self.kind is VerdictKind.SAT


@dataclass
class _Node:
    lower: np.ndarray
    upper: np.ndarray
    phases: np.ndarray
    next_exclusion: int = 0


def _is_witness(
    model: MlpModel,
    query: RobustnessQuery,
    root: Box,
    cuts: Sequence[Tuple[int, float, float]],
    point: np.ndarray,
) -> bool:
    logits = model.forward(point)
    if not logits[query.target_class] - logits[query.source_class] > 0.0:
        return False
    if not root.contains(point):
        return False
    return all(abs(point[j] - p) >= r for j, p, r in cuts)


def _leaf_system(
    model: MlpModel,
    query: RobustnessQuery,
    phases: np.ndarray,
    active: np.ndarray,
) -> Tuple[np.ndarray, float, np.ndarray, np.ndarray]:
    """Affine objective ``a . x + a0`` and split-phase rows ``A x <= b`` for a fixed activation pattern."""
    coeffs = (model.W2[query.target_class] - model.W2[query.source_class]) * active
    a = coeffs @ model.W1
    a0 = float(coeffs @ model.b1 + model.b2[query.target_class] - model.b2[query.source_class])
    split = np.flatnonzero(phases != 0)
    signs = np.where(phases[split] == INACTIVE, 1.0, -1.0)
    rows = signs[:, None] * model.W1[split]
    rhs = -signs * model.b1[split]
    return a, a0, rows, rhs


def solve(
    model: MlpModel,
    query: RobustnessQuery,
    time_limit: float,
    node_limit: int = 0,
) -> Verdict:
    """Decide a robustness query by branch and bound.

    Parameters
    ----------
    model : MlpModel
        Network under verification
    query : RobustnessQuery
        Region, classes and exclusions
    time_limit : float
        Wall-clock budget in seconds
    node_limit : int
        Optional budget on explored nodes; 0 means unlimited

    Returns
    -------
    Verdict
        SAT carries a witness re-validated by a forward pass. UNSAT is only
        returned once every branch has been closed; a search that runs out of
        budget, or leaves a leaf undecided, reports TIMEOUT.
    """
    query.validate(model)
    started = time.perf_counter()
    deadline = started + time_limit
    root = Box.around(query.center, query.epsilon)
    cuts = query.exclusion_cuts()
    coeffs = model.W2[query.target_class] - model.W2[query.source_class]
    offset = model.b2[query.target_class] - model.b2[query.source_class]

    stack = [_Node(root.lower.copy(), root.upper.copy(), np.zeros(model.hidden_dim, dtype=np.int8))]
    nodes = 0
    lp_calls = 0
    undecided = 0
    exhausted_budget = False
    witness: Optional[np.ndarray] = None

    while stack:
        if time.perf_counter() > deadline or (node_limit and nodes >= node_limit):
            exhausted_budget = True
            break
        node = stack.pop()
        nodes += 1
        if np.any(node.lower > node.upper):
            continue

        if node.next_exclusion < len(cuts):
            j, p, r = cuts[node.next_exclusion]
            above = _Node(node.lower.copy(), node.upper.copy(), node.phases, node.next_exclusion + 1)
            above.lower[j] = max(above.lower[j], p + r + EXCLUSION_SLACK)
            below = _Node(node.lower.copy(), node.upper.copy(), node.phases, node.next_exclusion + 1)
            below.upper[j] = min(below.upper[j], p - r - EXCLUSION_SLACK)
            stack.append(above)
            stack.append(below)
            continue

        pre_lower, pre_upper = _pre_activation_bounds(model, node.lower, node.upper)
        on = node.phases == ACTIVE
        off = node.phases == INACTIVE
        if np.any(pre_upper[on] < 0.0) or np.any(pre_lower[off] > 0.0):
            continue
        pre_lower = np.where(on, np.maximum(pre_lower, 0.0), pre_lower)
        pre_upper = np.where(off, np.minimum(pre_upper, 0.0), pre_upper)

        h_lower = np.maximum(pre_lower, 0.0)
        h_upper = np.maximum(pre_upper, 0.0)
        objective_upper = float(np.maximum(coeffs * h_lower, coeffs * h_upper).sum() + offset)
        if objective_upper < STRICTNESS_MARGIN:
            continue

        unstable = (node.phases == 0) & (pre_lower < 0.0) & (pre_upper > 0.0)
        if unstable.any():
            widths = np.where(unstable, pre_upper - pre_lower, -np.inf)
            neuron = int(np.argmax(widths))
            for phase in (ACTIVE, INACTIVE):
                phases = node.phases.copy()
                phases[neuron] = phase
                stack.append(_Node(node.lower, node.upper, phases, node.next_exclusion))
            continue

        active = on | ((node.phases == 0) & (pre_lower >= 0.0))
        a, a0, rows, rhs = _leaf_system(model, query, node.phases, active)
        corner = np.where(a > 0.0, node.upper, node.lower)
        if a @ corner + a0 >= STRICTNESS_MARGIN and np.all(rows @ corner <= rhs):
            candidate: Optional[np.ndarray] = corner
        else:
            lp_calls += 1
            result = find_feasible_point(
                np.vstack([-a[None, :], rows]),
                np.concatenate([[a0 - STRICTNESS_MARGIN], rhs]),
                node.lower,
                node.upper,
            )
            if result.status is LpStatus.INFEASIBLE:
                continue
            candidate = result.point if result.status is LpStatus.FEASIBLE else None

        if candidate is not None:
            candidate = np.clip(candidate, node.lower, node.upper)
            if _is_witness(model, query, root, cuts, candidate):
                witness = candidate
                break
        undecided += 1

    elapsed = time.perf_counter() - started
    if witness is not None:
        kind = VerdictKind.SAT
    elif exhausted_budget or undecided:
        kind = VerdictKind.TIMEOUT
    else:
        kind = VerdictKind.UNSAT
    trace_logger.debug(f"eps={query.epsilon:.6g} verdict={kind.value} nodes={nodes} ms={elapsed * 1000.0:.1f}")
    return Verdict(kind, witness, nodes, elapsed, lp_calls)


@dataclass(frozen=True)
class HarvestParams:
    """Limits for collecting several counterexamples around one input."""

    k: int = DEFAULT_HARVEST_K
    time_limit: float = DEFAULT_HARVEST_TIME_LIMIT
    eps_increment: float = DEFAULT_EPS_INCREMENT
    eps_max: float = DEFAULT_EPS_MAX
    exclusion_radius: float = DEFAULT_EXCLUSION_RADIUS
    node_limit: int = 0

    def __post_init__(self) -> None:
        if self.k <= 0:
            raise InvalidArgumentError(f"k must be positive, got {self.k}")
        if not self.time_limit > 0:
            raise InvalidArgumentError(f"time_limit must be positive, got {self.time_limit}")
        if not self.eps_increment > 0:
            raise InvalidArgumentError(f"eps_increment must be positive, got {self.eps_increment}")
        if not 0 < self.eps_max <= 1:
            raise InvalidArgumentError(f"eps_max must be in (0, 1], got {self.eps_max}")
        if not 0 < self.exclusion_radius < self.eps_increment:
            raise InvalidArgumentError("exclusion_radius must be positive and below eps_increment")
        if self.node_limit < 0:
            raise InvalidArgumentError(f"node_limit must be non-negative, got {self.node_limit}")


@dataclass(frozen=True)
class TraceEntry:
    epsilon: float
    verdict: VerdictKind
    nodes: int
    millis: float


@dataclass(frozen=True, eq=False)
class HarvestResult:
    points: List[np.ndarray]
    trace: List[TraceEntry] = field(default_factory=list)
    final_epsilon: float = 0.0

    def _count(self, kind: VerdictKind) -> int:
        return sum(1 for entry in self.trace if entry.verdict is kind)

    @property
    def sat(self) -> int:
        return self._count(VerdictKind.SAT)

    @property
    def unsat(self) -> int:
        return self._count(VerdictKind.UNSAT)

    @property
    def timeout(self) -> int:
        return self._count(VerdictKind.TIMEOUT)


def harvest(model: MlpModel, x: np.ndarray, params: HarvestParams, eps0: float) -> HarvestResult:
    """Collect up to ``params.k`` distinct counterexamples against the runner-up class.

    Each SAT witness is added as an exclusion for the next call. UNSAT raises
    epsilon by ``eps_increment`` (stopping past ``eps_max``); TIMEOUT or the
    overall time budget ends the loop.
    """
    if not eps0 > 0:
        raise InvalidArgumentError(f"eps0 must be positive, got {eps0}")
    x = np.asarray(x, dtype=np.float64)
    started = time.perf_counter()
    source, target = ranked_classes(model, x)
    eps_start = min(float(eps0), params.eps_max)
    escalations = 0
    epsilon = eps_start
    points: List[np.ndarray] = []
    trace: List[TraceEntry] = []

    while len(points) < params.k:
        remaining = params.time_limit - (time.perf_counter() - started)
        if remaining <= 0:
            break
        exclusions = tuple((p, params.exclusion_radius) for p in points)
        query = RobustnessQuery(x, epsilon, source, target, exclusions)
        verdict = solve(model, query, remaining, params.node_limit)
        trace.append(TraceEntry(epsilon, verdict.kind, verdict.nodes_explored, verdict.wall_time * 1000.0))
        if verdict.kind is VerdictKind.SAT:
            points.append(verdict.witness)
        elif verdict.kind is VerdictKind.UNSAT:
            escalations += 1
            next_epsilon = round(eps_start + escalations * params.eps_increment, 12)
            if next_epsilon > params.eps_max:
                break
            epsilon = next_epsilon
        else:
            break

    logger.debug(f"harvested {len(points)}/{params.k} counterexamples, final eps={epsilon:.4g}")
    return HarvestResult(points, trace, epsilon)
