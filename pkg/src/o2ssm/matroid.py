"""Second-stage constraint matroids: uniform and partition.

Both families have polytopes described by O(n) explicit inequalities, which is
what lets the relaxation be written as a small LP without a separation oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Iterable, Iterator, Sequence

import numpy as np


@dataclass(frozen=True)
class LinearConstraint:
    """``sum_{i in indices} coef_i * y_i <= rhs``; ``kind`` is one of
    ``"lower"`` (encoded as ``-y_i <= 0``), ``"box"``, ``"coupling"`` or ``"rank"``."""

    indices: tuple[int, ...]
    coefs: tuple[float, ...]
    rhs: float
    kind: str
    label: str = ""

    def lhs(self, y) -> float:
        y = np.asarray(y, dtype=float)
        return float(sum(c * y[i] for i, c in zip(self.indices, self.coefs)))


class Matroid:
    n: int

    def is_independent(self, y) -> bool:
        raise NotImplementedError

    def rank(self, S: Iterable[int]) -> int:
        raise NotImplementedError

    def rank_constraints(self) -> list[LinearConstraint]:
        raise NotImplementedError

    def polytope_constraints(self, x=None) -> list[LinearConstraint]:
        """Inequalities describing ``{y in P(M) : y <= x}``.

        With ``x=None`` the coupling rows are omitted and the result describes
        P(M) itself.
        """
        n = self.n
        rows = [LinearConstraint((i,), (-1.0,), 0.0, "lower", f"y{i}>=0") for i in range(n)]
        rows += [LinearConstraint((i,), (1.0,), 1.0, "box", f"y{i}<=1") for i in range(n)]
        if x is not None:
            x = np.asarray(x, dtype=float)
            if x.shape != (n,):
                raise ValueError(f"dimension mismatch: expected {n}, got {x.shape}")
            if np.any(x < -1e-9) or np.any(x > 1 + 1e-9):
                raise ValueError("x must lie in [0, 1]^n")
            rows += [
                LinearConstraint((i,), (1.0,), float(x[i]), "coupling", f"y{i}<=x{i}") for i in range(n)
            ]
        return rows + self.rank_constraints()

    def maximal_independent_subsets(self, support: Sequence[int]) -> Iterator[tuple[int, ...]]:
        """Independent subsets of ``support`` of maximum size."""
        raise NotImplementedError

    def count_maximal_independent_subsets(self, support: Sequence[int]) -> int:
        raise NotImplementedError

    def independent_subsets(self, support: Sequence[int]) -> Iterator[tuple[int, ...]]:
        """Every independent subset of ``support`` (any size)."""
        support = sorted(support)
        for s in range(len(support) + 1):
            for subset in itertools.combinations(support, s):
                if self._indep_set(subset):
                    yield subset

    def _indep_set(self, S: Sequence[int]) -> bool:
        y = np.zeros(self.n)
        y[list(S)] = 1
        return self.is_independent(y)

    def to_dict(self) -> dict:
        raise NotImplementedError

    @staticmethod
    def from_dict(d: dict, n: int) -> "Matroid":
        if not isinstance(d, dict) or "variant" not in d:
            raise ValueError("matroid.variant: missing required field")
        if d["variant"] == "uniform":
            if "k" not in d:
                raise ValueError("matroid.k: missing required field")
            return Uniform(n, d["k"])
        if d["variant"] == "partition":
            for key in ("parts", "caps"):
                if key not in d:
                    raise ValueError(f"matroid.{key}: missing required field")
            return Partition(n, d["parts"], d["caps"])
        raise ValueError(f"matroid.variant: unsupported matroid variant {d['variant']!r}")


def _check_binary(y, n) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (n,):
        raise ValueError(f"dimension mismatch: expected {n}, got {y.shape}")
    return y


class Uniform(Matroid):
    """All sets of size at most ``k``."""

    def __init__(self, n: int, k: int):
        if not 0 <= k <= n:
            raise ValueError(f"uniform rank must satisfy 0 <= k <= n, got k={k}, n={n}")
        self.n = int(n)
        self.k = int(k)

    def is_independent(self, y) -> bool:
        y = _check_binary(y, self.n)
        return bool(np.count_nonzero(y) <= self.k)

    def rank(self, S) -> int:
        return min(len(set(S)), self.k)

    def rank_constraints(self):
        return [LinearConstraint(tuple(range(self.n)), (1.0,) * self.n, float(self.k), "rank", "sum<=k")]

    def maximal_independent_subsets(self, support):
        support = sorted(support)
        return itertools.combinations(support, min(self.k, len(support)))

    def count_maximal_independent_subsets(self, support):
        s = len(support)
        return comb(s, min(self.k, s))

    def independent_subsets(self, support):
        support = sorted(support)
        for s in range(min(self.k, len(support)) + 1):
            yield from itertools.combinations(support, s)

    def to_dict(self):
        return {"variant": "uniform", "k": self.k}

    def __eq__(self, other):
        return isinstance(other, Uniform) and (self.n, self.k) == (other.n, other.k)

    def __hash__(self):
        return hash(("uniform", self.n, self.k))

    def __repr__(self):
        return f"Uniform(n={self.n}, k={self.k})"


class Partition(Matroid):
    """At most ``caps[p]`` elements from each part; elements in no part are never allowed."""

    def __init__(self, n: int, parts: Sequence[Iterable[int]], caps: Sequence[int]):
        parts = [tuple(sorted(int(i) for i in p)) for p in parts]
        caps = [int(c) for c in caps]
        if len(parts) != len(caps):
            raise ValueError("parts and caps must have the same length")
        seen: set[int] = set()
        for p in parts:
            for i in p:
                if not 0 <= i < n:
                    raise ValueError(f"part element {i} out of range [0, {n})")
                if i in seen:
                    raise ValueError(f"parts are not disjoint: element {i} repeated")
                seen.add(i)
        if any(c < 0 for c in caps):
            raise ValueError("part capacities must be nonnegative")
        self.n = int(n)
        self.parts = tuple(parts)
        self.caps = tuple(caps)
        self._part_of = np.full(n, -1, dtype=int)
        for pi, p in enumerate(parts):
            self._part_of[list(p)] = pi

    @property
    def k(self) -> int:
        """Rank of the whole matroid."""
        return self.rank(range(self.n))

    def is_independent(self, y) -> bool:
        y = _check_binary(y, self.n)
        chosen = np.flatnonzero(y)
        if np.any(self._part_of[chosen] < 0):
            return False
        counts = np.bincount(self._part_of[chosen], minlength=len(self.parts))
        return bool(np.all(counts <= np.asarray(self.caps, dtype=int)))

    def rank(self, S) -> int:
        S = set(S)
        return sum(min(len(S.intersection(p)), cap) for p, cap in zip(self.parts, self.caps))

    def rank_constraints(self):
        rows = [
            LinearConstraint(p, (1.0,) * len(p), float(cap), "rank", f"part{pi}<={cap}")
            for pi, (p, cap) in enumerate(zip(self.parts, self.caps))
        ]
        outside = np.flatnonzero(self._part_of < 0)
        rows += [LinearConstraint((int(i),), (1.0,), 0.0, "rank", f"y{i} outside parts") for i in outside]
        return rows

    def _split(self, support):
        groups = []
        for p, cap in zip(self.parts, self.caps):
            inside = sorted(set(p).intersection(support))
            groups.append((inside, min(cap, len(inside))))
        return groups

    def maximal_independent_subsets(self, support):
        groups = self._split(support)
        per_part = [list(itertools.combinations(inside, r)) for inside, r in groups]
        for combo in itertools.product(*per_part):
            yield tuple(sorted(itertools.chain.from_iterable(combo)))

    def count_maximal_independent_subsets(self, support):
        total = 1
        for inside, r in self._split(support):
            total *= comb(len(inside), r)
        return total

    def to_dict(self):
        return {"variant": "partition", "parts": [list(p) for p in self.parts], "caps": list(self.caps)}

    def __eq__(self, other):
        return isinstance(other, Partition) and (self.n, self.parts, self.caps) == (
            other.n,
            other.parts,
            other.caps,
        )

    def __hash__(self):
        return hash(("partition", self.n, self.parts, self.caps))

    def __repr__(self):
        return f"Partition(n={self.n}, parts={len(self.parts)}, caps={self.caps})"

