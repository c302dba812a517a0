"""Randomized pipage rounding onto ``{x in {0,1}^n : sum(x) <= ell}``.

Fractional coordinates are paired lowest index first.  For a pair ``(i, j)``
with ``e1 = min(1 - x_i, x_j)`` and ``e2 = min(x_i, 1 - x_j)``, one uniform
draw ``u`` decides the move: if ``u < e2 / (e1 + e2)`` mass ``e1`` shifts from
``j`` to ``i``, otherwise mass ``e2`` shifts from ``i`` to ``j``.  Each move
leaves ``x_i + x_j`` unchanged, makes at least one of the two integral and
keeps every marginal in expectation.

Since everything below the leftover coordinate is already integral, the
lowest two fractional coordinates are always "the one left over from the
previous move" and "the next untouched fractional input coordinate".  The
implementation exploits this to round many samples at once.

When a single fractional coordinate remains (only possible if ``sum(x)`` is
not an integer), ``last="random"`` sets it to 1 with probability equal to its
value, which keeps the marginals exact; ``last="up"`` always sets it to 1
when the budget allows.

Random numbers come from a ``numpy.random.Generator``; seeding it with
``PCG64`` makes trajectories reproducible bit for bit.  Exactly one uniform is
drawn per fractional input coordinate after the first, plus one for the
leftover coordinate under ``last="random"``.
"""

from __future__ import annotations

from collections import defaultdict

import numpy as np

INT_TOL = 1e-9


def make_rng(seed) -> np.random.Generator:
    """Deterministic generator (PCG64) for a seed or ``SeedSequence``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def _prepare(x, ell) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("x must be a vector")
    if np.any(x < -INT_TOL) or np.any(x > 1 + INT_TOL) or x.sum() > ell + INT_TOL:
        raise ValueError("x must lie in the capped simplex {x in [0,1]^n : sum(x) <= ell}")
    x = np.clip(x, 0.0, 1.0)
    x[x <= INT_TOL] = 0.0
    x[x >= 1 - INT_TOL] = 1.0
    return x


def _move(xi, xj, u):
    """One pairing move; returns the new ``(x_i, x_j)`` (vectorized)."""
    e1 = np.minimum(1.0 - xi, xj)
    e2 = np.minimum(xi, 1.0 - xj)
    s = xi + xj
    up = u * (e1 + e2) < e2
    # the coordinate that hits a bound is set exactly; the other takes the rest
    ni = np.where(up, np.where(1.0 - xi <= xj, 1.0, s), np.where(xi <= 1.0 - xj, 0.0, s - 1.0))
    nj = np.where(up, np.where(1.0 - xi <= xj, s - 1.0, 0.0), np.where(xi <= 1.0 - xj, s, 1.0))
    ni = np.where(np.abs(ni) <= INT_TOL, 0.0, np.where(np.abs(ni - 1) <= INT_TOL, 1.0, ni))
    nj = np.where(np.abs(nj) <= INT_TOL, 0.0, np.where(np.abs(nj - 1) <= INT_TOL, 1.0, nj))
    return ni, nj


def round_many(x, ell: int, rng, size: int, last: str = "random") -> np.ndarray:
    """Round ``x`` independently ``size`` times; returns a ``size x n`` 0/1 array."""
    if last not in ("random", "up"):
        raise ValueError("last must be 'random' or 'up'")
    x = _prepare(x, ell)
    rng = make_rng(rng)
    n = len(x)
    out = np.zeros((size, n))
    out[:, x == 1.0] = 1.0
    frac = np.flatnonzero((x > 0) & (x < 1))
    carry = np.full(size, -1, dtype=np.int64)
    cval = np.zeros(size)
    rows = np.arange(size)
    for k, j in enumerate(frac):
        if k == 0:
            carry[:] = j
            cval[:] = x[j]
            continue
        u = rng.random(size)
        has = carry >= 0
        # samples without a leftover simply adopt j
        fresh = ~has
        carry[fresh] = j
        cval[fresh] = x[j]
        if not has.any():
            continue
        r = rows[has]
        ni, nj = _move(cval[r], np.full(len(r), x[j]), u[r])
        ci = carry[r]
        i_int = (ni == 0.0) | (ni == 1.0)
        j_int = (nj == 0.0) | (nj == 1.0)
        out[r[i_int], ci[i_int]] = ni[i_int]
        out[r[j_int], j] = nj[j_int]
        # new leftover: i if still fractional, else j if fractional, else none
        keep_i = ~i_int
        take_j = i_int & ~j_int
        none = i_int & j_int
        cval[r[keep_i]] = ni[keep_i]
        carry[r[take_j]] = j
        cval[r[take_j]] = nj[take_j]
        carry[r[none]] = -1
    left = carry >= 0
    if left.any():
        r = rows[left]
        if last == "random":
            u = rng.random(size)
            ones = u[r] < cval[r]
        else:
            ones = out[r].sum(axis=1) + 1 <= ell + INT_TOL
        out[r[ones], carry[r[ones]]] = 1.0
    return out


def pipage_round(x, ell: int, rng, last: str = "random") -> np.ndarray:
    """Round one fractional point to a 0/1 vector with at most ``ell`` ones."""
    return round_many(x, ell, rng, 1, last)[0]


def trace(x, ell: int, rng, last: str = "random") -> tuple[np.ndarray, list[tuple]]:
    """Round ``x`` and record every pairing move as ``(i, j, before, after)``.

    Consumes the generator exactly like :func:`pipage_round`.
    """
    x = _prepare(x, ell)
    rng = make_rng(rng)
    cur = x.copy()
    steps = []
    frac = np.flatnonzero((x > 0) & (x < 1))
    carry = -1
    for k, j in enumerate(frac):
        if k == 0:
            carry = j
            continue
        u = rng.random(1)
        if carry < 0:
            carry = j
            continue
        before = (cur[carry], cur[j])
        ni, nj = _move(np.array([cur[carry]]), np.array([cur[j]]), u)
        cur[carry], cur[j] = ni[0], nj[0]
        steps.append((int(carry), int(j), before, (cur[carry], cur[j])))
        if 0 < cur[carry] < 1:
            continue
        carry = j if 0 < cur[j] < 1 else -1
    if carry >= 0:
        if last == "random":
            cur[carry] = 1.0 if rng.random(1)[0] < cur[carry] else 0.0
        else:
            cur[carry] = 1.0 if (cur == 1.0).sum() + 1 <= ell + INT_TOL else 0.0
    return cur, steps


def rounding_distribution(x, ell: int, last: str = "random") -> dict[tuple[int, ...], float]:
    """Exact output distribution, by enumerating every branch of the rounding.

    Keys are 0/1 tuples.  There are at most ``2^(#fractional)`` branches.
    """
    x = _prepare(x, ell)
    frac = list(np.flatnonzero((x > 0) & (x < 1)))
    dist: dict[tuple[int, ...], float] = defaultdict(float)

    def finish(cur, carry, p):
        if carry >= 0:
            v = cur[carry]
            if last == "random":
                for val, q in ((1.0, v), (0.0, 1.0 - v)):
                    if q > 0:
                        nxt = cur.copy()
                        nxt[carry] = val
                        dist[tuple(int(t) for t in nxt)] += p * q
                return
            cur = cur.copy()
            cur[carry] = 1.0 if (cur == 1.0).sum() + 1 <= ell + INT_TOL else 0.0
        dist[tuple(int(t) for t in cur)] += p

    def walk(cur, carry, k, p):
        if k == len(frac):
            finish(cur, carry, p)
            return
        j = frac[k]
        if carry < 0:
            walk(cur, j, k + 1, p)
            return
        xi, xj = cur[carry], cur[j]
        e1 = min(1.0 - xi, xj)
        e2 = min(xi, 1.0 - xj)
        for u, q in ((0.0, e2 / (e1 + e2)), (1.0, e1 / (e1 + e2))):
            if q == 0:
                continue
            ni, nj = _move(np.array([xi]), np.array([xj]), np.array([u]))
            nxt = cur.copy()
            nxt[carry], nxt[j] = ni[0], nj[0]
            if 0 < nxt[carry] < 1:
                nc = carry
            else:
                nc = j if 0 < nxt[j] < 1 else -1
            walk(nxt, nc, k + 1, p * q)

    walk(x.copy(), -1, 0, 1.0)
    return dict(dist)
