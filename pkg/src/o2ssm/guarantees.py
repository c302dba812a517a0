"""Approximation constants for the regret guarantee."""

from __future__ import annotations

import math

from .matroid import Matroid, Uniform

ONE_MINUS_INV_E = 1.0 - math.exp(-1.0)
# best known constant for general matroids in the two-stage setting, used as a reference line
MATROID_REFERENCE = 0.5 * (1.0 - math.exp(-2.0))


def c_uniform(k: int) -> float:
    """``1 - e^{-k} k^k / k!``, with the factorial taken in log space."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return 1.0 - math.exp(-k + k * math.log(k) - math.lgamma(k + 1))


def c_matroid(m: Matroid) -> float:
    if isinstance(m, Uniform) and m.k >= 1:
        return c_uniform(m.k)
    return ONE_MINUS_INV_E


def alpha(m: Matroid) -> float:
    return c_matroid(m) * ONE_MINUS_INV_E


def alpha_uniform(k: int) -> float:
    return c_uniform(k) * ONE_MINUS_INV_E


def table(ks) -> list[dict]:
    """Rows of constants for printing: one per ``k`` plus the general-matroid row."""
    rows = [{"matroid": f"uniform k={k}", "c_M": c_uniform(k), "alpha": alpha_uniform(k)} for k in ks]
    rows.append({"matroid": "general", "c_M": ONE_MINUS_INV_E, "alpha": ONE_MINUS_INV_E**2})
    return rows
