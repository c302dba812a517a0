"""Online concave maximization over the capped simplex
``X_ell = {x in [0,1]^n : sum(x) <= ell}``.

Three policies share one interface: ``policy.x`` is the current decision and
``policy.update(g)`` consumes a supergradient at that decision and returns the
next one.
"""

from __future__ import annotations

import numpy as np

SUM_TOL = 1e-10
_MAX_BISECT = 200


def project_capped_simplex(v, ell: float) -> np.ndarray:
    """Euclidean projection onto ``{x in [0,1]^n : sum(x) <= ell}``.

    The projection is ``clip(v - theta, 0, 1)`` with ``theta = 0`` when the
    clipped vector already fits the budget, otherwise the ``theta >= 0`` at
    which the clipped sum equals ``ell`` (found by bisection, the sum being
    monotone in ``theta``).
    """
    if ell <= 0:
        raise ValueError("ell must be positive")
    v = np.asarray(v, dtype=float)
    x = np.clip(v, 0.0, 1.0)
    if x.sum() <= ell:
        return x
    lo, hi = 0.0, float(v.max())
    for _ in range(_MAX_BISECT):
        theta = 0.5 * (lo + hi)
        s = np.clip(v - theta, 0.0, 1.0).sum()
        if abs(s - ell) <= SUM_TOL:
            break
        if s > ell:
            lo = theta
        else:
            hi = theta
        if hi - lo <= 1e-16 * max(1.0, hi):
            theta = hi
            break
    x = np.clip(v - theta, 0.0, 1.0)
    # bisection may stop a hair above the budget
    excess = x.sum() - ell
    if excess > 0:
        free = (x > 0) & (x < 1)
        if free.any():
            x[free] = np.maximum(x[free] - excess / free.sum(), 0.0)
    return x


def _entropy_argmax(G, eta: float, ell: float) -> np.ndarray:
    """Maximizer of ``eta*G.x - sum x_i ln x_i`` over the capped simplex.

    Stationarity gives ``x_i = min(1, exp(eta*G_i - 1 - theta))`` with
    ``theta >= 0`` the budget multiplier.
    """
    G = np.asarray(G, dtype=float)
    logits = eta * G - 1.0

    def at(theta):
        return np.exp(np.minimum(logits - theta, 0.0))

    x = at(0.0)
    if x.sum() <= ell:
        return x
    n = len(G)
    lo, hi = 0.0, float(logits.max() - np.log(ell / n)) + 1.0
    for _ in range(_MAX_BISECT):
        theta = 0.5 * (lo + hi)
        x = at(theta)
        s = x.sum()
        if abs(s - ell) <= SUM_TOL:
            break
        if s > ell:
            lo = theta
        else:
            hi = theta
        if hi - lo <= 1e-16 * max(1.0, hi):
            x = at(hi)
            break
    return x


class Policy:
    """Common state: dimension, budget, learning rate and current decision."""

    name = "policy"

    def __init__(self, n: int, ell: float, eta: float = 0.1, x0=None):
        if ell <= 0:
            raise ValueError("ell must be positive")
        if eta <= 0:
            raise ValueError("eta must be positive")
        self.n = int(n)
        self.ell = float(ell)
        self.eta = float(eta)
        if x0 is None:
            x0 = np.full(self.n, min(1.0, self.ell / self.n))
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != (self.n,):
            raise ValueError(f"dimension mismatch: expected {self.n}, got {x0.shape}")
        self.x = x0.copy()

    def _check(self, g) -> np.ndarray:
        g = np.asarray(getattr(g, "lam", g), dtype=float)
        if g.shape != (self.n,):
            raise ValueError(f"dimension mismatch: expected {self.n}, got {g.shape}")
        return g

    def update(self, g) -> np.ndarray:
        raise NotImplementedError


class OGA(Policy):
    """Projected supergradient ascent: ``x <- Proj(x + eta * g)``."""

    name = "oga"

    def update(self, g):
        g = self._check(g)
        self.x = project_capped_simplex(self.x + self.eta * g, self.ell)
        return self.x


class FtrlL2(Policy):
    """FTRL with ``R(x) = |x|^2 / 2``; the argmax is the projection of ``eta * sum(g)``."""

    name = "ftrl-l2"

    def __init__(self, n, ell, eta=0.1, x0=None):
        super().__init__(n, ell, eta, x0)
        self.g_sum = np.zeros(self.n)

    def update(self, g):
        self.g_sum += self._check(g)
        self.x = project_capped_simplex(self.eta * self.g_sum, self.ell)
        return self.x


class FtrlEntropy(Policy):
    """FTRL with the negative-entropy regularizer ``R(x) = sum x_i ln x_i``."""

    name = "ftrl-h"

    def __init__(self, n, ell, eta=0.1, x0=None):
        super().__init__(n, ell, eta, x0)
        self.g_sum = np.zeros(self.n)

    def update(self, g):
        self.g_sum += self._check(g)
        self.x = _entropy_argmax(self.g_sum, self.eta, self.ell)
        return self.x


def entropy_objective(x, G, eta: float) -> float:
    """``eta*G.x - sum x ln x`` with ``0 ln 0 = 0``."""
    x = np.asarray(x, dtype=float)
    safe = np.maximum(x, 1e-12)
    return float(eta * np.dot(G, x) - np.sum(np.where(x > 0, x * np.log(safe), 0.0)))


POLICIES = {"oga": OGA, "ftrl-l2": FtrlL2, "ftrl-h": FtrlEntropy}


def make_policy(kind: str, n: int, ell: float, eta: float = 0.1, x0=None) -> Policy:
    try:
        cls = POLICIES[kind]
    except KeyError:
        raise ValueError(f"unknown policy {kind!r}; choose from {sorted(POLICIES)}") from None
    return cls(n, ell, eta, x0)
