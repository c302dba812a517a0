"""Second-stage reward ``F(x) = max { f(y) : y independent, y <= x }`` and offline optima.

Exact evaluation enumerates candidate sets.  Because WTP functions are
monotone, only maximal independent subsets of ``x`` need to be checked.  A
greedy fallback covers instances beyond the enumeration budget; every result
records which mode produced it.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np

from .matroid import Matroid, Uniform
from .relaxation import _selectable, joint_program
from .wtp import WtpFunction

_CHUNK = 20_000


class Mode(enum.Enum):
    EXACT = "exact"
    GREEDY = "greedy"
    AUTO = "auto"


class BudgetExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleConfig:
    mode: Mode = Mode.AUTO
    exact_budget: int = 2_000_000

    def __post_init__(self):
        if isinstance(self.mode, str):
            object.__setattr__(self, "mode", Mode(self.mode))
        if self.exact_budget < 1:
            raise ValueError("exact_budget must be at least 1")


@dataclass(frozen=True)
class OracleResult:
    value: float
    argmax: np.ndarray
    mode: Mode

    @property
    def approximate(self) -> bool:
        return self.mode is Mode.GREEDY


def _support(x, n) -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (n,):
        raise ValueError(f"dimension mismatch: expected {n}, got {x.shape}")
    if np.any((x != 0) & (x != 1)):
        raise ValueError("first-stage decision must be a 0/1 vector")
    return np.flatnonzero(x)


def _indicator(n, S) -> np.ndarray:
    y = np.zeros(n)
    y[list(S)] = 1.0
    return y


def _exact(f: WtpFunction, m: Matroid, support) -> tuple[float, tuple[int, ...]]:
    best_val, best_set = -np.inf, ()
    candidates = m.maximal_independent_subsets(support)
    while True:
        chunk = list(itertools.islice(candidates, _CHUNK))
        if not chunk:
            break
        Y = np.zeros((len(chunk), f.n))
        for r, S in enumerate(chunk):
            Y[r, list(S)] = 1.0
        vals = f.batch(Y)
        top = vals.max()
        if top < best_val:
            continue
        winner = min(S for S, v in zip(chunk, vals) if v == top)
        if top > best_val or winner < best_set:
            best_val, best_set = float(top), winner
    return max(best_val, 0.0), best_set


def _greedy(f: WtpFunction, m: Matroid, support) -> tuple[float, tuple[int, ...]]:
    chosen: list[int] = []
    current = 0.0
    remaining = list(support)
    while remaining:
        gains = []
        for e in remaining:
            S = chosen + [e]
            if m._indep_set(S):
                gains.append((f.set_value(S) - current, e))
        if not gains:
            break
        best_gain = max(g for g, _ in gains)
        e = min(e for g, e in gains if g == best_gain)
        chosen.append(e)
        remaining.remove(e)
        current += best_gain
    return current, tuple(sorted(chosen))


def second_stage_value(f: WtpFunction, m: Matroid, x, cfg: OracleConfig = OracleConfig()) -> OracleResult:
    """Value and lexicographically smallest maximizer of the second stage at ``x``."""
    if f.n != m.n:
        raise ValueError(f"dimension mismatch: function n={f.n}, matroid n={m.n}")
    support = _support(x, f.n)
    count = m.count_maximal_independent_subsets(support)
    mode = cfg.mode
    if mode is Mode.AUTO:
        mode = Mode.EXACT if count <= cfg.exact_budget else Mode.GREEDY
    if mode is Mode.EXACT:
        if count > cfg.exact_budget:
            raise BudgetExceeded(
                f"exact oracle would enumerate {count} sets (budget {cfg.exact_budget}); use greedy or auto mode"
            )
        value, S = _exact(f, m, support)
    else:
        value, S = _greedy(f, m, support)
    return OracleResult(value, _indicator(f.n, S), mode)


def _group(fs, weights):
    """Merge repeated function objects, summing their weights."""
    fs = list(fs)
    weights = np.ones(len(fs)) if weights is None else np.asarray(weights, dtype=float)
    if len(weights) != len(fs):
        raise ValueError("weights must have one entry per function")
    order: dict[int, int] = {}
    uniq, w = [], []
    for f, wt in zip(fs, weights):
        key = id(f)
        if key not in order:
            order[key] = len(uniq)
            uniq.append(f)
            w.append(0.0)
        w[order[key]] += wt
    return uniq, np.asarray(w)


def relevant_elements(fs: Sequence[WtpFunction], m: Matroid) -> np.ndarray:
    """Elements that are selectable in ``m`` and touched by some potential with ``b > 0``."""
    mask = np.zeros(m.n, dtype=bool)
    for f in fs:
        W = f.W[f.b > 0]
        mask[np.unique(W.indices)] = True
    return np.flatnonzero(mask & _selectable(m))


def offline_opt_integral(
    fs: Sequence[WtpFunction],
    m: Matroid,
    n: int,
    ell: int,
    cfg: OracleConfig = OracleConfig(),
    weights=None,
) -> tuple[float, np.ndarray]:
    """Best fixed first-stage set in hindsight, as an average reward per step.

    ``weights`` gives each function's multiplicity (default 1).  Only elements
    that can matter are enumerated; the returned set is the lexicographically
    first optimum among sets of those elements.
    """
    uniq, w = _group(fs, weights)
    total = w.sum()
    rel = [int(e) for e in relevant_elements(uniq, m)]
    size = min(ell, len(rel))
    n_cand = comb(len(rel), size)
    if n_cand > cfg.exact_budget:
        raise BudgetExceeded(
            f"offline enumeration needs {n_cand} candidate sets (budget {cfg.exact_budget}); "
            "use offline_opt_fractional for an upper bound"
        )
    if len(rel) > 63:
        # only reachable when every relevant element fits in the budget (one candidate)
        x = _indicator(n, rel)
        vals = [second_stage_value(f, m, x, cfg).value for f in uniq]
        return float(np.dot(w, vals) / total), x

    # second-stage sets: for uniform matroids, subsets of the largest feasible size suffice
    if isinstance(m, Uniform):
        inner = list(itertools.combinations(rel, min(m.k, size)))
    else:
        inner = list(m.independent_subsets(rel))
    pos = {e: 1 << p for p, e in enumerate(rel)}
    inner_masks = np.fromiter((sum(pos[e] for e in S) for S in inner), dtype=np.uint64, count=len(inner))
    if n_cand * len(inner) > 50 * cfg.exact_budget:
        raise BudgetExceeded(
            f"offline enumeration needs {n_cand} x {len(inner)} containment checks; "
            "use offline_opt_fractional for an upper bound"
        )
    Y = np.zeros((len(inner), n))
    for r, S in enumerate(inner):
        Y[r, list(S)] = 1.0
    # weighted sum over functions is taken after the per-function max
    inner_vals = np.stack([f.batch(Y) for f in uniq])  # functions x inner sets

    best_val, best_set = -np.inf, ()
    candidates = itertools.combinations(rel, size)
    while True:
        chunk = list(itertools.islice(candidates, _CHUNK))
        if not chunk:
            break
        cmask = np.fromiter((sum(pos[e] for e in S) for S in chunk), dtype=np.uint64, count=len(chunk))
        contained = (cmask[:, None] & inner_masks[None, :]) == inner_masks[None, :]
        per_f = np.stack([np.where(contained, iv[None, :], 0.0).max(axis=1) for iv in inner_vals])
        score = w @ per_f
        r = int(np.argmax(score))
        if score[r] > best_val:
            best_val, best_set = float(score[r]), chunk[r]
    return float(max(best_val, 0.0) / total), _indicator(n, best_set)


def offline_opt_fractional(fs: Sequence[WtpFunction], m: Matroid, n: int, ell: float, weights=None, method="auto"):
    """Upper bound on the offline optimum from the joint relaxation, as an average per step."""
    if m.n != n:
        raise ValueError(f"dimension mismatch: matroid n={m.n}, expected {n}")
    uniq, w = _group(fs, weights)
    value, _ = joint_program(uniq, m, ell, w, method)
    return float(value)
