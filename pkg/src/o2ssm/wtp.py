"""Weighted threshold potential (WTP) functions.

A WTP function over a ground set of size ``n`` is

    f(y) = sum_j c_j * min(b_j, w_j . y)

with ``c_j > 0``, ``b_j >= 0`` (possibly infinite) and ``w_j >= 0``.  The same
formula evaluated on ``[0, 1]^n`` is the concave relaxation used by the
fractional machinery.

Infinite thresholds are stored as ``math.inf``; a min against ``inf`` returns
the other operand exactly, so no large-float stand-in is ever needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

TOL = 1e-9


@dataclass(frozen=True)
class ThresholdPotential:
    """One term ``c * min(b, w . y)``."""

    c: float
    b: float
    w: np.ndarray

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"potential weight c must be positive, got {self.c}")
        if not (self.b >= 0 or self.b == math.inf):
            raise ValueError(f"threshold b must be >= 0 or inf, got {self.b}")
        if np.any(np.asarray(self.w) < 0):
            raise ValueError("potential weights w must be nonnegative")


class WtpFunction:
    """Immutable sum of threshold potentials over ``n`` elements.

    Internally the potentials are held as arrays: ``c`` and ``b`` of length G
    and a sparse ``G x n`` matrix ``W`` whose rows are the ``w_j``.
    """

    __slots__ = ("n", "c", "b", "W", "_finite")

    def __init__(self, n: int, c, b, W):
        n = int(n)
        c = np.asarray(c, dtype=float).reshape(-1)
        b = np.asarray(b, dtype=float).reshape(-1)
        if sp.issparse(W) or np.size(W):
            W = sp.csr_matrix(W, dtype=float, copy=True)
        else:
            W = sp.csr_matrix((len(c), n))
        if n < 0:
            raise ValueError("n must be nonnegative")
        if len(b) != len(c) or W.shape != (len(c), n):
            raise ValueError(
                f"inconsistent potential arrays: c{c.shape}, b{b.shape}, W{W.shape}, n={n}"
            )
        if np.any(~(c > 0)):
            raise ValueError("all potential weights c must be positive")
        if np.any(np.isnan(b)) or np.any(b < 0):
            raise ValueError("thresholds b must be >= 0 or inf")
        if W.nnz and (W.data.min() < 0 or not np.all(np.isfinite(W.data))):
            raise ValueError("potential weights w must be finite and nonnegative")
        W.eliminate_zeros()
        W.sort_indices()
        for arr in (c, b):
            arr.setflags(write=False)
        self.n = n
        self.c = c
        self.b = b
        self.W = W
        self._finite = np.isfinite(b)

    @classmethod
    def from_potentials(cls, n: int, potentials: Iterable[ThresholdPotential]) -> "WtpFunction":
        potentials = list(potentials)
        for p in potentials:
            if np.asarray(p.w).shape != (n,):
                raise ValueError(f"potential dimension {np.asarray(p.w).shape} does not match n={n}")
        if not potentials:
            return cls(n, [], [], sp.csr_matrix((0, n)))
        W = sp.csr_matrix(np.vstack([np.asarray(p.w, dtype=float) for p in potentials]))
        return cls(n, [p.c for p in potentials], [p.b for p in potentials], W)

    @property
    def G(self) -> int:
        """Number of potentials."""
        return len(self.c)

    @property
    def M(self) -> float:
        """Largest parameter: max over c_j, finite b_j and entries of w_j."""
        if self.G == 0:
            return 0.0
        vals = [self.c.max()]
        if self._finite.any():
            vals.append(self.b[self._finite].max())
        if self.W.nnz:
            vals.append(self.W.data.max())
        return float(max(vals))

    @property
    def potentials(self) -> list[ThresholdPotential]:
        dense = self.W.toarray()
        return [ThresholdPotential(float(c), float(b), dense[j]) for j, (c, b) in enumerate(zip(self.c, self.b))]

    def support(self) -> np.ndarray:
        """Indices of elements that appear with positive weight in some potential."""
        return np.unique(self.W.indices)

    # -- evaluation -----------------------------------------------------

    def _check_dim(self, x: np.ndarray):
        if x.shape[-1] != self.n:
            raise ValueError(f"dimension mismatch: expected {self.n}, got {x.shape[-1]}")

    def _raw(self, x: np.ndarray) -> float:
        return float(self._rows(x[None, :])[0])

    def _rows(self, Y: np.ndarray) -> np.ndarray:
        # one summation order for every caller: potentials are added sequentially,
        # so a set evaluates to the same float however many rows share the call
        if self.G == 0:
            return np.zeros(Y.shape[0])
        lin = np.asarray(self.W @ Y.T)
        terms = self.c[:, None] * np.minimum(self.b[:, None], lin)
        return np.cumsum(terms, axis=0)[-1]

    def value(self, x) -> float:
        """Evaluate on a 0/1 vector (a set)."""
        x = np.asarray(x, dtype=float)
        self._check_dim(x)
        if np.any((x != 0) & (x != 1)):
            raise ValueError("integral evaluation requires a 0/1 vector")
        return self._raw(x)

    __call__ = value

    def relaxed(self, x) -> float:
        """Evaluate the concave relaxation on a point of the unit box."""
        x = np.asarray(x, dtype=float)
        self._check_dim(x)
        if np.any(x < -TOL) or np.any(x > 1 + TOL):
            raise ValueError("relaxed evaluation requires a point in [0, 1]^n")
        return self._raw(x)

    def batch(self, Y) -> np.ndarray:
        """Evaluate many points at once; rows of ``Y`` are points."""
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        self._check_dim(Y)
        return self._rows(Y)

    def set_value(self, elements: Sequence[int]) -> float:
        """Evaluate on the set given by its element indices."""
        y = np.zeros(self.n)
        y[list(elements)] = 1.0
        return self._raw(y)

    # -- serialization --------------------------------------------------

    def to_dict(self) -> dict:
        pots = []
        for j in range(self.G):
            lo, hi = self.W.indptr[j], self.W.indptr[j + 1]
            pots.append(
                {
                    "c": float(self.c[j]),
                    "b": "inf" if math.isinf(self.b[j]) else float(self.b[j]),
                    "w": {
                        "indices": self.W.indices[lo:hi].tolist(),
                        "values": self.W.data[lo:hi].astype(float).tolist(),
                    },
                }
            )
        return {"n": self.n, "potentials": pots}

    @classmethod
    def from_dict(cls, d: dict, where: str = "") -> "WtpFunction":
        """Parse the JSON form; errors name the offending field."""
        pre = f"{where}." if where else ""
        if not isinstance(d, dict):
            raise ValueError(f"{where or 'function'}: expected an object")
        if "n" not in d:
            raise ValueError(f"{pre}n: missing required field")
        n = d["n"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 0:
            raise ValueError(f"{pre}n: expected a nonnegative integer")
        if "potentials" not in d or not isinstance(d["potentials"], list):
            raise ValueError(f"{pre}potentials: missing or not a list")
        c, b, rows, cols, vals = [], [], [], [], []
        for j, p in enumerate(d["potentials"]):
            here = f"{pre}potentials[{j}]"
            if not isinstance(p, dict):
                raise ValueError(f"{here}: expected an object")
            for key in ("c", "b", "w"):
                if key not in p:
                    raise ValueError(f"{here}.{key}: missing required field")
            if not _is_number(p["c"]) or not p["c"] > 0:
                raise ValueError(f"{here}.c: expected a positive number")
            c.append(float(p["c"]))
            if p["b"] == "inf":
                b.append(math.inf)
            elif _is_number(p["b"]) and p["b"] >= 0:
                b.append(float(p["b"]))
            else:
                raise ValueError(f"{here}.b: expected a nonnegative number or \"inf\"")
            w = p["w"]
            if isinstance(w, list):
                if len(w) != n:
                    raise ValueError(f"{here}.w: length {len(w)} does not match n={n}")
                idx = [i for i, v in enumerate(w) if v != 0]
                wv = [w[i] for i in idx]
            elif isinstance(w, dict) and "indices" in w and "values" in w:
                idx, wv = w["indices"], w["values"]
                if len(idx) != len(wv):
                    raise ValueError(f"{here}.w: indices and values differ in length")
                if any(not isinstance(i, int) or i < 0 or i >= n for i in idx):
                    raise ValueError(f"{here}.w.indices: index out of range [0, {n})")
                if len(set(idx)) != len(idx):
                    raise ValueError(f"{here}.w.indices: duplicate index")
            else:
                raise ValueError(f"{here}.w: expected a list or {{indices, values}} object")
            if any(not _is_number(v) or v < 0 for v in wv):
                raise ValueError(f"{here}.w: weights must be nonnegative numbers")
            rows.extend([j] * len(idx))
            cols.extend(idx)
            vals.extend(float(v) for v in wv)
        W = sp.csr_matrix((vals, (rows, cols)), shape=(len(c), n))
        return cls(n, c, b, W)

    def __repr__(self):
        return f"WtpFunction(n={self.n}, G={self.G})"


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


# -- constructors ------------------------------------------------------------


def weighted_coverage(n: int, sets: Sequence[tuple[float, Iterable[int]]]) -> WtpFunction:
    """``sum_s weight_s * min(1, |members_s ∩ y|)``.

    Sets with zero weight contribute nothing and are dropped.
    """
    c, rows, cols = [], [], []
    for weight, members in sets:
        members = sorted(set(int(i) for i in members))
        if weight < 0:
            raise ValueError("coverage weights must be nonnegative")
        if any(i < 0 or i >= n for i in members):
            raise ValueError(f"member index out of range [0, {n})")
        if weight == 0:
            continue
        rows.extend([len(c)] * len(members))
        cols.extend(members)
        c.append(float(weight))
    W = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(c), n))
    return WtpFunction(n, c, np.ones(len(c)), W)


def facility_location(weights, probs) -> WtpFunction:
    """``sum_v' p_v' * max_{v in S} w[v, v']`` written as a WTP function.

    ``weights`` has one row per facility and one column per customer.  For each
    customer the facilities are sorted by decreasing weight (ties by index) and
    the maximum is expanded into a telescoping sum of ``min(1, prefix count)``
    terms.  The empty set scores 0.  The result has up to ``n * |V'|`` terms.
    """
    Wfc = np.asarray(weights, dtype=float)
    p = np.asarray(probs, dtype=float).reshape(-1)
    if Wfc.ndim != 2 or Wfc.shape[1] != len(p):
        raise ValueError("weights must be |V| x |V'| with one column per customer")
    if np.any(Wfc < 0):
        raise ValueError("facility weights must be nonnegative")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError("probs must be a probability distribution")
    n = Wfc.shape[0]
    c, rows, cols = [], [], []
    for v2 in range(len(p)):
        if p[v2] == 0:
            continue
        col = Wfc[:, v2]
        order = np.lexsort((np.arange(n), -col))
        for i in range(n):
            nxt = col[order[i + 1]] if i + 1 < n else 0.0
            coef = p[v2] * (col[order[i]] - nxt)
            if coef <= 0:
                continue
            rows.extend([len(c)] * (i + 1))
            cols.extend(int(k) for k in order[: i + 1])
            c.append(coef)
    W = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(c), n))
    return WtpFunction(n, c, np.ones(len(c)), W)


def quadratic(h, H) -> WtpFunction:
    """``h.x + x'Hx/2`` on sets, for ``H <= 0`` symmetric with zero diagonal.

    Uses ``x_i x_j = x_i + x_j - min(1, x_i + x_j)`` on binary vectors, giving a
    linear potential with weights ``h + H 1`` plus one pair potential per
    negative off-diagonal entry.  Requires ``h + H 1 >= 0`` so the linear
    weights are admissible.
    """
    h = np.asarray(h, dtype=float).reshape(-1)
    H = np.asarray(H, dtype=float)
    n = len(h)
    if H.shape != (n, n):
        raise ValueError("H must be n x n")
    if not np.allclose(H, H.T, atol=0, rtol=0):
        raise ValueError("H must be symmetric")
    if np.any(np.diag(H) != 0):
        raise ValueError("H must have a zero diagonal")
    if np.any(H > 0):
        raise ValueError("H must be entrywise nonpositive (positive off-diagonal entry found)")
    lin = h + H.sum(axis=1)
    if np.any(lin < -TOL):
        raise ValueError("h + H·1 has a negative entry: the function is not monotone")
    lin = np.maximum(lin, 0.0)
    c, b, rows, cols, vals = [], [], [], [], []
    nz = np.flatnonzero(lin)
    if len(nz):
        c.append(1.0)
        b.append(math.inf)
        rows.extend([0] * len(nz))
        cols.extend(nz.tolist())
        vals.extend(lin[nz].tolist())
    iu, ju = np.nonzero(np.triu(H < 0, k=1))
    for i, j in zip(iu.tolist(), ju.tolist()):
        r = len(c)
        c.append(-H[i, j])
        b.append(1.0)
        rows.extend([r, r])
        cols.extend([i, j])
        vals.extend([1.0, 1.0])
    W = sp.csr_matrix((vals, (rows, cols)), shape=(len(c), n))
    return WtpFunction(n, c, b, W)


def all_subsets(n: int) -> np.ndarray:
    """All 2^n binary vectors as rows, in counting order."""
    idx = np.arange(2**n)[:, None]
    return ((idx >> np.arange(n)) & 1).astype(float)


def is_monotone_submodular(f: WtpFunction, tol: float = TOL) -> tuple[bool, bool]:
    """Exhaustive check of (monotone, submodular) for small ``n``."""
    if f.n > 16:
        raise ValueError("exhaustive check is limited to n <= 16")
    vals = f.batch(all_subsets(f.n))
    masks = np.arange(2**f.n)
    mono, sub = True, True
    for v in range(f.n):
        bit = 1 << v
        without = masks[(masks & bit) == 0]
        gain = vals[without | bit] - vals[without]
        if np.any(gain < -tol):
            mono = False
        # gain must not increase when any other element u is added
        for u in range(f.n):
            if u == v:
                continue
            ub = 1 << u
            a = without[(without & ub) == 0]
            if np.any(vals[a | ub | bit] - vals[a | ub] > vals[a | bit] - vals[a] + tol):
                sub = False
    return mono, sub
