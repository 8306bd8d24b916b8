"""
Dense Phase-I simplex for box-bounded linear feasibility problems.

Finds a point ``x`` with ``A x <= b`` and ``lower <= x <= upper``. Variables
are shifted to ``y = x - lower`` so every structural variable lives in
``[0, upper - lower]``; bounds are handled by the bounded-variable ratio test
(nonbasic variables sit at either bound) instead of extra rows. Entering and
leaving choices follow Bland's smallest-index rule so the method terminates
on degenerate problems.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from ..constants import LP_FEASIBILITY_TOL, LP_MAX_ITER_FACTOR
from ..errors import InvalidArgumentError

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-9
REDUCED_COST_TOL = 1e-10


class LpStatus(str, Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class LpResult:
    status: LpStatus
    point: Optional[np.ndarray]
    iterations: int

    @property
    def feasible(self) -> bool:
        return self.status is LpStatus.FEASIBLE


def find_feasible_point(
    A: np.ndarray,
    b: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    tol: float = LP_FEASIBILITY_TOL,
    max_iter: Optional[int] = None,
) -> LpResult:
    """Decide feasibility of ``{x : A x <= b, lower <= x <= upper}``.

    Parameters
    ----------
    A : np.ndarray
        Constraint matrix, shape ``(m, n)``; ``m`` may be 0
    b : np.ndarray
        Right-hand side, shape ``(m,)``
    lower, upper : np.ndarray
        Finite variable bounds, shape ``(n,)``
    tol : float
        Largest total artificial value still accepted as feasible
    max_iter : int, optional
        Pivot budget; defaults to ``LP_MAX_ITER_FACTOR * (rows + columns)``

    Returns
    -------
    LpResult
        ``point`` is set only when the status is FEASIBLE
    """
    lower = np.asarray(lower, dtype=np.float64).reshape(-1)
    upper = np.asarray(upper, dtype=np.float64).reshape(-1)
    n = lower.shape[0]
    A = np.asarray(A, dtype=np.float64).reshape(-1, n)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    m = A.shape[0]
    if upper.shape != (n,) or b.shape != (m,):
        raise InvalidArgumentError("inconsistent LP dimensions")
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise InvalidArgumentError("LP bounds must be finite")
    if np.any(lower > upper):
        return LpResult(LpStatus.INFEASIBLE, None, 0)

    rhs = b - A @ lower
    negative = rhs < 0.0
    if not negative.any():
        return LpResult(LpStatus.FEASIBLE, lower.copy(), 0)

    # Columns: structural y (n), slacks (m), artificials for negative rows (k).
    art_rows = np.flatnonzero(negative)
    k = len(art_rows)
    total = n + m + k
    sign = np.where(negative, -1.0, 1.0)
    T = np.zeros((m, total))
    T[:, :n] = sign[:, None] * A
    T[np.arange(m), n + np.arange(m)] = sign
    T[art_rows, n + m + np.arange(k)] = 1.0

    basis = n + np.arange(m)
    basis[art_rows] = n + m + np.arange(k)
    ub = np.concatenate([upper - lower, np.full(m + k, np.inf)])
    x = np.zeros(total)
    x[basis] = np.abs(rhs)
    at_upper = np.zeros(total, dtype=bool)
    is_basic = np.zeros(total, dtype=bool)
    is_basic[basis] = True

    cost = np.zeros(total)
    cost[n + m:] = 1.0
    reduced = cost - cost[basis] @ T

    if max_iter is None:
        max_iter = LP_MAX_ITER_FACTOR * (m + total)

    for iteration in range(max_iter):
        eligible = ~is_basic & (
            (~at_upper & (reduced < -REDUCED_COST_TOL)) | (at_upper & (reduced > REDUCED_COST_TOL))
        )
        if not eligible.any():
            residual = float(x[n + m:].sum())
            if residual > tol:
                return LpResult(LpStatus.INFEASIBLE, None, iteration)
            point = np.clip(lower + x[:n], lower, upper)
            return LpResult(LpStatus.FEASIBLE, point, iteration)

        j = int(np.flatnonzero(eligible)[0])
        direction = -1.0 if at_upper[j] else 1.0
        alpha = T[:, j]
        moves = direction * alpha

        # (step, variable index, row) with row -1 meaning a bound flip of j itself.
        best = (ub[j], j, -1, False)
        for i in range(m):
            var = int(basis[i])
            if moves[i] > PIVOT_TOL:
                step, to_upper = x[var] / moves[i], False
            elif moves[i] < -PIVOT_TOL and np.isfinite(ub[var]):
                step, to_upper = (ub[var] - x[var]) / -moves[i], True
            else:
                continue
            candidate = (max(step, 0.0), var, i, to_upper)
            if candidate[:2] < best[:2]:
                best = candidate
        step, _, row, to_upper = best
        if not np.isfinite(step):
            logger.debug("unbounded Phase-I direction, giving up on this LP")
            return LpResult(LpStatus.ITERATION_LIMIT, None, iteration)

        x[j] += direction * step
        x[basis] -= direction * step * alpha
        if row < 0:
            at_upper[j] = not at_upper[j]
            x[j] = ub[j] if at_upper[j] else 0.0
            continue

        leaving = int(basis[row])
        pivot_row = T[row] / T[row, j]
        column = T[:, j].copy()
        column[row] = 0.0
        T -= np.outer(column, pivot_row)
        T[row] = pivot_row
        reduced = reduced - reduced[j] * pivot_row

        x[leaving] = ub[leaving] if to_upper else 0.0
        at_upper[leaving] = to_upper
        is_basic[leaving] = False
        basis[row] = j
        is_basic[j] = True
        at_upper[j] = False

    return LpResult(LpStatus.ITERATION_LIMIT, None, max_iter)
