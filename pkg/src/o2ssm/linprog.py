"""Small linear programs ``max c.z  s.t.  A z <= b, z >= 0`` with duals.

The default solver is a dense two-phase tableau simplex using Bland's rule.
It returns the basic primal solution together with the basic dual
``y = c_B B^{-1}``, both recomputed from the final basis with a direct
solve so pivoting round-off does not leak into the result.

Programs too large for a dense tableau are handed to HiGHS through
``scipy.optimize.linprog`` (``method="highs"``), which also reports duals.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

PIVOT_TOL = 1e-9
# dense tableau cells above which "auto" switches to HiGHS
DENSE_LIMIT = 400_000


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class LpError(RuntimeError):
    """Raised when the solver fails numerically or exceeds its pivot budget."""


@dataclass(frozen=True)
class LpProblem:
    c: np.ndarray
    A: object  # dense ndarray or scipy sparse matrix
    b: np.ndarray
    row_tags: tuple = ()

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        A = self.A if sp.issparse(self.A) else np.atleast_2d(np.asarray(self.A, dtype=float))
        if A.shape != (len(b), len(c)) and not (len(b) == 0 and A.size == 0):
            raise ValueError(f"A has shape {A.shape}, expected {(len(b), len(c))}")
        if not np.all(np.isfinite(b)):
            raise ValueError("all right-hand sides must be finite")
        if self.row_tags and len(self.row_tags) != len(b):
            raise ValueError("row_tags must have one entry per row")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "A", A if len(b) else np.zeros((0, len(c))))

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.b), len(self.c)

    def dense_A(self) -> np.ndarray:
        return self.A.toarray() if sp.issparse(self.A) else self.A


@dataclass(frozen=True)
class LpSolution:
    status: Status
    primal: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dual: np.ndarray = field(default_factory=lambda: np.zeros(0))
    objective: float = float("nan")
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    def dual_objective(self, problem: LpProblem) -> float:
        return float(problem.b @ self.dual)

    def duality_gap(self, problem: LpProblem) -> float:
        return abs(self.objective - self.dual_objective(problem))


def solve(problem: LpProblem, method: str = "auto") -> LpSolution:
    """Solve ``problem``; ``method`` is ``"simplex"``, ``"highs"`` or ``"auto"``."""
    m, n = problem.shape
    if method == "auto":
        method = "simplex" if m * (n + m) <= DENSE_LIMIT else "highs"
    if method == "simplex":
        return _simplex(problem.c, problem.dense_A(), problem.b)
    if method == "highs":
        return _highs(problem)
    raise ValueError(f"unknown LP method {method!r}")


def _highs(problem: LpProblem) -> LpSolution:
    from scipy.optimize import linprog

    m, n = problem.shape
    if m == 0:
        if np.any(problem.c > 0):
            return LpSolution(Status.UNBOUNDED)
        return LpSolution(Status.OPTIMAL, np.zeros(n), np.zeros(0), 0.0)
    res = linprog(-problem.c, A_ub=problem.A, b_ub=problem.b, bounds=(0, None), method="highs")
    if res.status == 2:
        return LpSolution(Status.INFEASIBLE)
    if res.status == 3:
        return LpSolution(Status.UNBOUNDED)
    if res.status != 0:
        raise LpError(f"HiGHS failed: {res.message}")
    dual = np.maximum(-np.asarray(res.ineqlin.marginals, dtype=float), 0.0)
    z = np.asarray(res.x, dtype=float)
    return LpSolution(Status.OPTIMAL, z, dual, float(problem.c @ z), int(res.nit))


class _Tableau:
    """Rows ``T[:m]`` hold ``B^{-1}[A | I_s | I_a]`` and the rhs; ``d`` holds reduced costs."""

    def __init__(self, A, b):
        m, n = A.shape
        self.m, self.n = m, n
        neg = b < 0
        self.flipped = neg
        na = int(neg.sum())
        sign = np.where(neg, -1.0, 1.0)
        T = np.zeros((m, n + m + na + 1))
        T[:, :n] = A * sign[:, None]
        T[:, n : n + m] = np.diag(sign)
        art_rows = np.flatnonzero(neg)
        T[art_rows, n + m + np.arange(na)] = 1.0
        T[:, -1] = np.abs(b)
        self.T = T
        self.basis = np.where(neg, 0, n + np.arange(m))
        self.basis[art_rows] = n + m + np.arange(na)
        self.n_art = na
        self.first_art = n + m
        self.pivots = 0

    def pivot(self, r, j):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.basis[r] = j
        self.pivots += 1

    def reduced_costs(self, cost):
        # d_j = cost_j - cost_B . column_j
        return cost - cost[self.basis] @ self.T[:, :-1]

    def run(self, cost, allowed, cap):
        """Maximize ``cost`` with Bland's rule over columns flagged in ``allowed``."""
        while True:
            d = self.reduced_costs(cost)
            cand = np.flatnonzero((d > PIVOT_TOL) & allowed)
            if len(cand) == 0:
                return Status.OPTIMAL
            j = cand[0]
            col = self.T[:, j]
            rows = np.flatnonzero(col > PIVOT_TOL)
            if len(rows) == 0:
                return Status.UNBOUNDED
            ratios = self.T[rows, -1] / col[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
            r = ties[np.argmin(self.basis[ties])]
            if self.pivots >= cap:
                raise LpError(f"simplex exceeded the pivot budget ({cap})")
            self.pivot(r, j)


def _simplex(c, A, b) -> LpSolution:
    m, n = A.shape
    if m == 0:
        if np.any(c > PIVOT_TOL):
            return LpSolution(Status.UNBOUNDED)
        return LpSolution(Status.OPTIMAL, np.zeros(n), np.zeros(0), 0.0)
    tab = _Tableau(A, b)
    ncols = tab.T.shape[1] - 1
    cap = 50 * (m + n)
    allowed = np.ones(ncols, dtype=bool)

    if tab.n_art:
        phase1 = np.zeros(ncols)
        phase1[tab.first_art :] = -1.0
        status = tab.run(phase1, allowed, cap)
        if status is not Status.OPTIMAL:
            raise LpError("phase 1 did not terminate at an optimum")
        infeas = -phase1[tab.basis] @ tab.T[:, -1]
        if infeas > 1e-7 * (1.0 + np.abs(b).max()):
            return LpSolution(Status.INFEASIBLE, pivots=tab.pivots)
        # drive zero-level artificials out of the basis
        for r in np.flatnonzero(tab.basis >= tab.first_art):
            row = np.abs(tab.T[r, : tab.first_art])
            j = int(np.argmax(row))
            if row[j] <= PIVOT_TOL:
                raise LpError("could not remove an artificial variable from the basis")
            tab.pivot(r, j)
        allowed[tab.first_art :] = False

    cost = np.zeros(ncols)
    cost[:n] = c
    status = tab.run(cost, allowed, cap)
    if status is Status.UNBOUNDED:
        return LpSolution(Status.UNBOUNDED, pivots=tab.pivots)

    # recompute the basic solution and duals from the original data
    full = np.hstack([A, np.eye(m)])
    B = full[:, tab.basis]
    try:
        xB = np.linalg.solve(B, b)
        y = np.linalg.solve(B.T, np.concatenate([c, np.zeros(m)])[tab.basis])
    except np.linalg.LinAlgError as exc:
        raise LpError("final basis is singular") from exc
    xB[np.abs(xB) < 1e-12] = 0.0
    x = np.zeros(n + m)
    x[tab.basis] = xB
    z = np.maximum(x[:n], 0.0)
    y[np.abs(y) < 1e-12] = 0.0
    return LpSolution(Status.OPTIMAL, z, y, float(c @ z), tab.pivots)
