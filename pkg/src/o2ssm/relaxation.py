"""Concave relaxation of the second-stage reward and its supergradients.

For a WTP function ``f`` and matroid ``M`` the relaxed reward at a fractional
ground set ``x`` is

    F~(x) = max { f~(y) : y in P(M), y <= x }

Linearizing each potential with an auxiliary ``z_j <= b_j``,
``z_j <= w_j . y`` turns this into an LP.  The duals of the coupling rows
``y_i <= x_i`` form a supergradient of ``F~`` at ``x``.

Two reductions keep the LP small without changing its value as a function of
``x``: elements that no potential touches (and, for partition matroids,
elements outside every part) are dropped, since their ``y_i`` is worthless;
their supergradient entry is exactly 0.  Box rows ``y_i <= 1`` are dropped
because ``y_i <= x_i <= 1`` already implies them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .linprog import LpError, LpProblem, LpSolution, Status, solve
from .matroid import Matroid
from .wtp import WtpFunction

CLAMP = 1e-12


@dataclass(frozen=True)
class Supergradient:
    lam: np.ndarray
    value: float


def _selectable(m: Matroid) -> np.ndarray:
    """Mask of elements that can appear in some independent set."""
    mask = np.zeros(m.n, dtype=bool)
    for row in m.rank_constraints():
        if row.rhs > 0:
            mask[list(row.indices)] = True
    return mask


def _clean_point(x, n) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"dimension mismatch: expected {n}, got {x.shape}")
    if np.any(x < -1e-9) or np.any(x > 1 + 1e-9):
        raise ValueError("fractional point must lie in [0, 1]^n")
    x = np.clip(x, 0.0, 1.0)
    x[x < CLAMP] = 0.0
    return x


class _Block:
    """Column/row layout of one function's ``(y, z)`` block inside an LP."""

    def __init__(self, f: WtpFunction, selectable: np.ndarray):
        keep_pot = f.b > 0
        W = f.W[keep_pot]
        cols = np.unique(W.indices)
        cols = cols[selectable[cols]]
        W = W[:, cols].tocsr()
        nonempty = np.diff(W.indptr) > 0
        self.cols = cols
        self.W = W[nonempty]
        self.c = f.c[keep_pot][nonempty]
        self.b = f.b[keep_pot][nonempty]

    @property
    def width(self) -> int:
        return len(self.cols) + len(self.c)


class _Builder:
    def __init__(self):
        self.rows: list[int] = []
        self.cols: list[int] = []
        self.vals: list[float] = []
        self.rhs: list[float] = []
        self.tags: list[tuple] = []

    def add(self, cols, vals, rhs, tag) -> int:
        r = len(self.rhs)
        self.rows.extend([r] * len(cols))
        self.cols.extend(int(j) for j in cols)
        self.vals.extend(float(v) for v in vals)
        self.rhs.append(float(rhs))
        self.tags.append(tag)
        return r

    def add_block(self, blk: _Block, y0: int, m: Matroid, coupling, tag=()):
        """Rows for one function block with ``y`` starting at column ``y0``.

        ``coupling(i, col)`` appends the coupling row for element ``i``.
        """
        pos = {int(i): y0 + k for k, i in enumerate(blk.cols)}
        for k, i in enumerate(blk.cols):
            coupling(int(i), y0 + k)
        for row in m.rank_constraints():
            inside = [(pos[i], a) for i, a in zip(row.indices, row.coefs) if i in pos]
            if inside:
                self.add([p for p, _ in inside], [a for _, a in inside], row.rhs, tag + ("rank", row.label))
        z0 = y0 + len(blk.cols)
        for j in range(len(blk.c)):
            if np.isfinite(blk.b[j]):
                self.add([z0 + j], [1.0], blk.b[j], tag + ("cap", j))
            lo, hi = blk.W.indptr[j], blk.W.indptr[j + 1]
            self.add(
                [z0 + j] + [y0 + k for k in blk.W.indices[lo:hi]],
                [1.0] + [-v for v in blk.W.data[lo:hi]],
                0.0,
                tag + ("link", j),
            )

    def problem(self, c) -> LpProblem:
        A = sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=(len(self.rhs), len(c)))
        return LpProblem(np.asarray(c, dtype=float), A, np.asarray(self.rhs), tuple(self.tags))


class RelaxedReward:
    """``F~`` for one WTP function under one matroid."""

    def __init__(self, f: WtpFunction, m: Matroid, method: str = "auto"):
        if f.n != m.n:
            raise ValueError(f"dimension mismatch: function n={f.n}, matroid n={m.n}")
        self.f = f
        self.m = m
        self.n = f.n
        self.method = method
        self._blk = _Block(f, _selectable(m))

    def lp(self, x) -> tuple[LpProblem, np.ndarray]:
        """The linearized program at ``x`` and the row index of each coupling row."""
        x = _clean_point(x, self.n)
        blk = self._blk
        bld = _Builder()
        coupling_rows = []

        def coupling(i, col):
            coupling_rows.append(bld.add([col], [1.0], x[i], ("coupling", i)))

        bld.add_block(blk, 0, self.m, coupling)
        c = np.concatenate([np.zeros(len(blk.cols)), blk.c])
        return bld.problem(c), np.asarray(coupling_rows, dtype=int)

    def _solve(self, x) -> tuple[LpSolution, np.ndarray]:
        prob, coupling_rows = self.lp(x)
        if prob.shape[1] == 0:
            return LpSolution(Status.OPTIMAL, np.zeros(0), np.zeros(prob.shape[0]), 0.0), coupling_rows
        sol = solve(prob, self.method)
        if not sol.optimal:
            raise LpError(f"relaxation LP returned {sol.status.value}")
        return sol, coupling_rows

    def value(self, x) -> float:
        return self._solve(x)[0].objective

    __call__ = value

    def argmax(self, x) -> np.ndarray:
        """An optimal fractional second-stage solution ``y``."""
        sol, _ = self._solve(x)
        y = np.zeros(self.n)
        y[self._blk.cols] = sol.primal[: len(self._blk.cols)]
        return y

    def supergradient(self, x) -> Supergradient:
        sol, coupling_rows = self._solve(x)
        lam = np.zeros(self.n)
        if len(coupling_rows):
            lam[self._blk.cols] = np.maximum(sol.dual[coupling_rows], 0.0)
        return Supergradient(lam, sol.objective)

    @property
    def lipschitz_bound(self) -> float:
        """``G M^2 sqrt(n)``."""
        return self.f.G * self.f.M**2 * np.sqrt(self.n)


def joint_program(
    fs: Sequence[WtpFunction], m: Matroid, ell: float, weights=None, method: str = "auto"
) -> tuple[float, np.ndarray]:
    """Maximize ``sum_u weight_u * F~_u(x)`` over ``x`` in the capped simplex.

    All functions share one LP: the first ``n`` columns are ``x`` and each
    function contributes its own ``(y, z)`` block coupled to ``x``.  Returns
    the optimal value divided by the total weight (a per-step average) and the
    optimal ``x``.
    """
    fs = list(fs)
    if not fs:
        raise ValueError("need at least one function")
    n = m.n
    if any(f.n != n for f in fs):
        raise ValueError("all functions must share the matroid's dimension")
    weights = np.ones(len(fs)) if weights is None else np.asarray(weights, dtype=float)
    sel = _selectable(m)
    bld = _Builder()
    bld.add(range(n), np.ones(n), ell, ("budget",))
    for i in range(n):
        bld.add([i], [1.0], 1.0, ("box", i))
    obj = [np.zeros(n)]
    offset = n
    for u, f in enumerate(fs):
        blk = _Block(f, sel)

        def coupling(i, col):
            bld.add([col, i], [1.0, -1.0], 0.0, ("coupling", u, i))

        bld.add_block(blk, offset, m, coupling, tag=(u,))
        obj.append(np.zeros(len(blk.cols)))
        obj.append(weights[u] * blk.c)
        offset += blk.width
    prob = bld.problem(np.concatenate(obj))
    sol = solve(prob, method)
    if not sol.optimal:
        raise LpError(f"joint LP returned {sol.status.value}")
    x = np.clip(sol.primal[:n], 0.0, 1.0)
    return sol.objective / weights.sum(), x
