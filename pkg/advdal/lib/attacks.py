"""
Gradient-based adversarial example generation.

- ``fgsm``: single signed-gradient step, clamped to [0, 1]
- ``margin_by_binary_search``: bisection over the FGSM step size to estimate
  the distance to the decision boundary
- ``deepfool``: iterative linearized minimal-L2 attack

All attacks are untargeted against the model's current prediction and are
read-only on the model, so callers may run them concurrently.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from ..constants import (
    DEEPFOOL_STEP_EPS, DEFAULT_DEEPFOOL_MAX_ITER, DEFAULT_DEEPFOOL_OVERSHOOT,
    DEFAULT_TOLERANCE, MAX_TOLERANCE,
)
from ..errors import InvalidArgumentError
from .network import MlpModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AttackParams:
    """Binary-search tolerance and DeepFool limits."""

    tolerance: float = DEFAULT_TOLERANCE
    deepfool_max_iter: int = DEFAULT_DEEPFOOL_MAX_ITER
    deepfool_overshoot: float = DEFAULT_DEEPFOOL_OVERSHOOT

    def __post_init__(self) -> None:
        if not 0.0 < self.tolerance <= MAX_TOLERANCE:
            raise InvalidArgumentError(f"tolerance must be in (0, {MAX_TOLERANCE}], got {self.tolerance}")
        if self.deepfool_max_iter <= 0:
            raise InvalidArgumentError(f"deepfool_max_iter must be positive, got {self.deepfool_max_iter}")
        if self.deepfool_overshoot < 0:
            raise InvalidArgumentError(f"deepfool_overshoot must be non-negative, got {self.deepfool_overshoot}")


@dataclass(frozen=True)
class MarginEstimate:
    """Bisection result; ``adversarial`` is ``fgsm(x, adversarial_eps)``."""

    eps_star: float
    adversarial: np.ndarray
    flipped: bool
    iterations: int
    adversarial_eps: float


@dataclass(frozen=True)
class DeepFoolResult:
    adversarial: np.ndarray
    perturbation_norm: float
    flipped: bool
    iterations: int
    linf_norm: float


def fgsm(model: MlpModel, x: np.ndarray, y: int, eps: float) -> np.ndarray:
    """``clamp(x + eps * sign(grad_x L(f(x), y)), 0, 1)``."""
    if eps < 0:
        raise InvalidArgumentError(f"eps must be non-negative, got {eps}")
    direction = np.sign(model.loss_grad_input(x, y))
    return _step(x, direction, eps)


def _step(x: np.ndarray, direction: np.ndarray, eps: float) -> np.ndarray:
    return np.clip(np.asarray(x, dtype=np.float64) + eps * direction, 0.0, 1.0)


def margin_by_binary_search(model: MlpModel, x: np.ndarray, params: AttackParams) -> MarginEstimate:
    """Estimate the smallest FGSM step that changes the prediction.

    The label is fixed to the prediction at ``x`` and the search interval
    ``[start, end]`` starts at ``[0, 1]`` with ``eps = 1/2``; each iteration
    halves it, so exactly ``ceil(log2(1 / tolerance))`` iterations run.

    Parameters
    ----------
    model : MlpModel
        Model under attack
    x : np.ndarray
        Input in ``[0, 1]^d``
    params : AttackParams
        Supplies the tolerance

    Returns
    -------
    MarginEstimate
        ``eps_star`` is the final bisection point. When FGSM at ``eps_star``
        does not flip but a flip was seen at the upper end of the interval,
        the adversarial is taken at that upper end, within half a tolerance
        of ``eps_star``; ``adversarial_eps`` records which step was used.
    """
    y = model.predict(x)
    direction = np.sign(model.loss_grad_input(x, y))
    start, end, eps = 0.0, 1.0, 0.5
    iterations = 0
    while end - start > params.tolerance:
        if model.predict(_step(x, direction, eps)) != y:
            end = eps
        else:
            start = eps
        eps = (start + end) / 2.0
        iterations += 1

    adversarial_eps = eps
    adversarial = _step(x, direction, eps)
    flipped = model.predict(adversarial) != y
    if not flipped and end < 1.0:
        adversarial_eps = end
        adversarial = _step(x, direction, end)
        flipped = model.predict(adversarial) != y
    return MarginEstimate(float(eps), adversarial, bool(flipped), iterations, float(adversarial_eps))


def deepfool(model: MlpModel, x: np.ndarray, params: AttackParams) -> DeepFoolResult:
    """Multiclass DeepFool against the prediction at ``x``.

    Each iteration linearizes the logits at the current point and takes the
    minimal L2 step onto the nearest linearized boundary. The accumulated
    perturbation is scaled by ``1 + overshoot`` and the result clamped to
    ``[0, 1]``.
    """
    x = np.asarray(x, dtype=np.float64)
    y0 = model.predict(x)
    r_tot = np.zeros_like(x)
    current = x
    label = y0
    iterations = 0
    while label == y0 and iterations < params.deepfool_max_iter:
        logits = model.forward(current)
        jacobian = model.input_jacobian(current)
        best_pert = np.inf
        best_w = None
        for c in range(model.num_classes):
            if c == y0:
                continue
            w = jacobian[c] - jacobian[y0]
            norm = np.linalg.norm(w)
            if norm == 0.0:
                continue
            pert = abs(logits[c] - logits[y0]) / norm
            if pert < best_pert:
                best_pert = pert
                best_w = w / norm
        if best_w is None:
            break
        r_tot = r_tot + (best_pert + DEEPFOOL_STEP_EPS) * best_w
        current = np.clip(x + (1.0 + params.deepfool_overshoot) * r_tot, 0.0, 1.0)
        label = model.predict(current)
        iterations += 1

    adversarial = np.clip(x + (1.0 + params.deepfool_overshoot) * r_tot, 0.0, 1.0)
    delta = adversarial - x
    return DeepFoolResult(
        adversarial=adversarial,
        perturbation_norm=float(np.linalg.norm(delta)),
        flipped=bool(model.predict(adversarial) != y0),
        iterations=iterations,
        linf_norm=float(np.max(np.abs(delta))) if delta.size else 0.0,
    )


def fgsm_sweep(model: MlpModel, x: np.ndarray, eps_values: Sequence[float]) -> List[np.ndarray]:
    """FGSM points at each step size that the model misclassifies, exact duplicates removed."""
    y = model.predict(x)
    direction = np.sign(model.loss_grad_input(x, y))
    kept: List[np.ndarray] = []
    seen = set()
    for eps in eps_values:
        candidate = _step(x, direction, float(eps))
        key = candidate.tobytes()
        if key in seen or model.predict(candidate) == y:
            continue
        seen.add(key)
        kept.append(candidate)
    return kept
