"""Reference algorithms: random sets, one-stage learning, and three offline methods."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .matroid import Matroid, Uniform
from .oracle import _group
from .pipage import make_rng, pipage_round
from .relaxation import joint_program
from .wtp import WtpFunction

CO_EPSILON = 0.25


def random_policy(n: int, ell: int, rng) -> np.ndarray:
    """Uniform ``ell``-subset via a partial Fisher-Yates shuffle."""
    if not 0 <= ell <= n:
        raise ValueError(f"need 0 <= ell <= n, got ell={ell}, n={n}")
    rng = make_rng(rng)
    perm = np.arange(n)
    for i in range(ell):
        j = int(rng.integers(i, n))
        perm[i], perm[j] = perm[j], perm[i]
    x = np.zeros(n)
    x[perm[:ell]] = 1.0
    return x


def one_stage_matroid(n: int, ell: int) -> Uniform:
    """The second-stage constraint one-stage learning pretends to face (``k = ell``)."""
    return Uniform(n, ell)


# -- replacement greedy ---------------------------------------------------


def _gains(f: WtpFunction, m: Matroid, A: list[int], candidates) -> tuple[np.ndarray, np.ndarray]:
    """Gain of each candidate element for the solution ``A`` and the element it would evict.

    Insertion is used whenever ``A + e`` is independent; otherwise the best
    independent swap, floored at zero.  ``evict[e] = -1`` means plain insertion.
    """
    base = f.set_value(A)
    rows, owners, evicts = [], [], []
    for e in candidates:
        if m._indep_set(A + [e]):
            rows.append(A + [e])
            owners.append(e)
            evicts.append(-1)
            continue
        for a in sorted(A):
            S = [s for s in A if s != a] + [e]
            if m._indep_set(S):
                rows.append(S)
                owners.append(e)
                evicts.append(a)
    gain = np.zeros(len(candidates))
    evict = np.full(len(candidates), -2)  # -2: no feasible move
    if not rows:
        return gain, evict
    Y = np.zeros((len(rows), f.n))
    for r, S in enumerate(rows):
        Y[r, S] = 1.0
    vals = f.batch(Y) - base
    slot = {e: p for p, e in enumerate(candidates)}
    for v, e, a in zip(vals, owners, evicts):
        p = slot[e]
        # swaps for one element arrive by increasing evictee, so ">" keeps the lowest on ties
        if evict[p] == -2 or v > gain[p]:
            gain[p], evict[p] = v, a
    gain = np.maximum(gain, 0.0)
    return gain, evict


def replacement_greedy(
    fs: Sequence[WtpFunction], m: Matroid, ell: int, weights=None
) -> tuple[np.ndarray, list[list[int]]]:
    """Offline replacement greedy; returns the first-stage set and the per-function solutions.

    Each round adds the element with the largest total (weighted) gain over
    all functions' current solutions, lowest index first on ties, then updates
    every solution where that element helps.
    """
    uniq, w = _group(fs, weights)
    n = m.n
    S: list[int] = []
    B: list[list[int]] = [[] for _ in uniq]
    for _ in range(min(ell, n)):
        cand = [e for e in range(n) if e not in S]
        total = np.zeros(len(cand))
        per_f = []
        for u, f in enumerate(uniq):
            g, ev = _gains(f, m, B[u], cand)
            total += w[u] * g
            per_f.append((g, ev))
        p = int(np.argmax(total))  # first maximum, i.e. lowest index
        e = cand[p]
        S.append(e)
        for u, (g, ev) in enumerate(per_f):
            if g[p] > 0:
                if ev[p] >= 0:
                    B[u].remove(int(ev[p]))
                B[u].append(e)
                assert m._indep_set(B[u]), "replacement greedy produced a dependent solution"
    x = np.zeros(n)
    x[S] = 1.0
    return x, [sorted(b) for b in B]


# -- continuous optimization ------------------------------------------------


def co_scale(k: int, epsilon: float = CO_EPSILON) -> float:
    """Shrink factor ``1 - k^{-(1/2 - epsilon)}``."""
    return 1.0 - k ** (-(0.5 - epsilon))


def continuous_optimization(
    fs: Sequence[WtpFunction],
    m: Matroid,
    n: int,
    ell: int,
    k: int,
    rng,
    epsilon: float = CO_EPSILON,
    weights=None,
    method: str = "auto",
) -> np.ndarray:
    """Solve the joint relaxation, shrink it, and round coordinates independently.

    Falls back to a uniformly random ``ell``-subset if the rounded set is too large.
    """
    if k <= 1:
        raise ValueError("continuous optimization requires k > 1")
    uniq, w = _group(fs, weights)
    _, x_star = joint_program(uniq, m, ell, w, method)
    return co_round(x_star, k, ell, rng, epsilon)


def co_round(x_star, k: int, ell: int, rng, epsilon: float = CO_EPSILON) -> np.ndarray:
    """Shrink ``x_star`` and round each coordinate independently, with the random-set fallback."""
    x = co_scale(k, epsilon) * np.asarray(x_star, dtype=float)
    rng = make_rng(rng)
    chosen = (rng.random(len(x)) < x).astype(float)
    if chosen.sum() > ell:
        return random_policy(len(x), ell, rng)
    return chosen


def offline_raoco(
    fs: Sequence[WtpFunction], m: Matroid, n: int, ell: int, rng, weights=None, method: str = "auto", last="random"
) -> tuple[np.ndarray, np.ndarray]:
    """Maximize the summed relaxation over the capped simplex, then pipage-round.

    Returns the rounded set and the fractional maximizer.
    """
    uniq, w = _group(fs, weights)
    _, x_star = joint_program(uniq, m, ell, w, method)
    return pipage_round(x_star, ell, make_rng(rng), last), x_star
