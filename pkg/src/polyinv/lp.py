"""Dense two-phase simplex for small linear programs over free variables.

Only two questions are ever asked of it: is ``{x : A x <= b}`` nonempty
(with a witness), and what is ``max c^T x`` over that set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import LPError

#: Global tolerance for feasibility, redundancy and membership decisions.
EPS_FEAS = 1e-9

_PIVOT_TOL = 1e-11
_COST_TOL = 1e-12

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LPResult:
    status: str
    x: np.ndarray | None = None
    value: float = math.nan


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])


def _run(T: np.ndarray, basis: list[int], cost: np.ndarray, ncols: int) -> str:
    """Maximize ``cost`` over the tableau in place using Bland's rule.

    Only the first ``ncols`` columns may enter the basis.
    """
    m = T.shape[0]
    max_iter = 50 * (m + ncols) + 100
    for _ in range(max_iter):
        reduced = cost[:ncols] - cost[basis] @ T[:, :ncols]
        entering = np.flatnonzero(reduced > _COST_TOL)
        if entering.size == 0:
            return OPTIMAL
        col = int(entering[0])
        column = T[:, col]
        rows = np.flatnonzero(column > _PIVOT_TOL)
        if rows.size == 0:
            return UNBOUNDED
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-14 * max(1.0, abs(best))]
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(T, row, col)
        basis[row] = col
        if not np.all(np.isfinite(T[:, -1])):
            raise LPError("simplex tableau became non-finite")
    raise LPError(f"simplex did not terminate within {max_iter} pivots")


def _normalize(A: np.ndarray, b: np.ndarray):
    scale = np.abs(A).max(axis=1) if A.shape[1] else np.zeros(A.shape[0])
    trivial = scale == 0.0
    if np.any(b[trivial] < -EPS_FEAS):
        return None
    keep = ~trivial
    A, b, scale = A[keep], b[keep], scale[keep]
    return A / scale[:, None], b / scale


def solve(c: np.ndarray | None, A: np.ndarray, b: np.ndarray) -> LPResult:
    """Maximize ``c @ x`` subject to ``A @ x <= b`` with ``x`` unrestricted.

    With ``c=None`` only feasibility is decided; the returned ``x`` is a
    witness point. Infinite entries of ``b`` are not allowed; drop those rows
    before calling.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = A.shape[1]
    if A.shape[0] != b.shape[0]:
        raise ValueError("constraint matrix and offset vector disagree in length")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise LPError("non-finite constraint data")
    normalized = _normalize(A, b)
    if normalized is None:
        return LPResult(INFEASIBLE)
    A, b = normalized
    m = A.shape[0]
    objective = np.zeros(n) if c is None else np.asarray(c, dtype=float)
    if m == 0:
        if np.any(objective != 0.0):
            return LPResult(UNBOUNDED, np.zeros(n), math.inf)
        return LPResult(OPTIMAL, np.zeros(n), 0.0)

    # columns: x+ (n), x- (n), slack (m), artificial (one per negative rhs)
    negative = np.flatnonzero(b < 0)
    nart = negative.size
    nstruct = 2 * n + m
    T = np.zeros((m, nstruct + nart + 1))
    T[:, :n] = A
    T[:, n : 2 * n] = -A
    T[:, 2 * n : nstruct] = np.eye(m)
    T[:, -1] = b
    T[negative, : nstruct] *= -1.0
    T[negative, -1] *= -1.0
    basis = [2 * n + i for i in range(m)]
    for k, i in enumerate(negative):
        T[i, nstruct + k] = 1.0
        basis[i] = nstruct + k

    if nart:
        phase1 = np.zeros(nstruct + nart)
        phase1[nstruct:] = -1.0
        _run(T, basis, phase1, nstruct + nart)
        infeasibility = -float(phase1[basis] @ T[:, -1])
        if infeasibility > EPS_FEAS:
            return LPResult(INFEASIBLE)
        # drive remaining artificials out of the basis, dropping dependent rows
        drop = []
        for i in range(m):
            if basis[i] < nstruct:
                continue
            candidates = np.flatnonzero(np.abs(T[i, :nstruct]) > _PIVOT_TOL)
            if candidates.size:
                _pivot(T, i, int(candidates[0]))
                basis[i] = int(candidates[0])
            else:
                drop.append(i)
        if drop:
            keep = [i for i in range(m) if i not in drop]
            T = T[keep]
            basis = [basis[i] for i in keep]
        T = np.hstack([T[:, :nstruct], T[:, -1:]])

    full_cost = np.zeros(nstruct)
    full_cost[:n] = objective
    full_cost[n : 2 * n] = -objective
    status = OPTIMAL
    if c is not None:
        status = _run(T, basis, full_cost, nstruct)

    z = np.zeros(nstruct)
    z[basis] = T[:, -1]
    x = z[:n] - z[n : 2 * n]
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED, x, math.inf)
    return LPResult(OPTIMAL, x, float(objective @ x))
