"""Synthetic instance generators and the JSON instance format.

An instance is a pool of WTP functions plus the sequence of pool indices
revealed over time, along with the budgets ``ell`` and ``k``.  All generators
draw from ``numpy.random.Generator(PCG64(seed))``; normals come from
``Generator.standard_normal``, whose output stream numpy keeps stable across
platforms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .matroid import Matroid, Uniform
from .pipage import make_rng
from .wtp import ThresholdPotential, WtpFunction, quadratic, weighted_coverage

# Zachary's karate club, 34 nodes, 78 undirected edges
KARATE_EDGES = (
    (0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6), (0, 7), (0, 8), (0, 10), (0, 11), (0, 12),
    (0, 13), (0, 17), (0, 19), (0, 21), (0, 31), (1, 2), (1, 3), (1, 7), (1, 13), (1, 17),
    (1, 19), (1, 21), (1, 30), (2, 3), (2, 7), (2, 8), (2, 9), (2, 13), (2, 27), (2, 28),
    (2, 32), (3, 7), (3, 12), (3, 13), (4, 6), (4, 10), (5, 6), (5, 10), (5, 16), (6, 16),
    (8, 30), (8, 32), (8, 33), (9, 33), (13, 33), (14, 32), (14, 33), (15, 32), (15, 33),
    (18, 32), (18, 33), (19, 33), (20, 32), (20, 33), (22, 32), (22, 33), (23, 25), (23, 27),
    (23, 29), (23, 32), (23, 33), (24, 25), (24, 27), (24, 31), (25, 31), (26, 29), (26, 33),
    (27, 33), (28, 31), (28, 33), (29, 32), (29, 33), (30, 32), (30, 33), (31, 32), (31, 33),
    (32, 33),
)  # fmt: skip


class InstanceError(ValueError):
    """Schema violation in an instance file; the message names the offending field."""


@dataclass
class InstanceSpec:
    name: str
    n: int
    ell: int
    k: int
    sequence: list[int]
    pool: list[WtpFunction]
    seed: int | None = None
    matroid: Matroid | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.sequence = [int(i) for i in self.sequence]
        if self.matroid is None:
            self.matroid = Uniform(self.n, self.k)
        bad = [f for f in self.pool if f.n != self.n]
        if bad:
            raise InstanceError(f"pool: function dimension {bad[0].n} differs from n={self.n}")
        if any(not 0 <= i < len(self.pool) for i in self.sequence):
            raise InstanceError("sequence: index out of range of the pool")
        if not 1 <= self.ell <= self.n:
            raise InstanceError(f"ell: must satisfy 1 <= ell <= n, got {self.ell}")
        if self.matroid.n != self.n:
            raise InstanceError("matroid: dimension differs from n")

    @property
    def T(self) -> int:
        return len(self.sequence)

    def function(self, t: int) -> WtpFunction:
        """The function revealed at step ``t`` (0-based)."""
        return self.pool[self.sequence[t]]

    def functions(self) -> list[WtpFunction]:
        return [self.pool[i] for i in self.sequence]

    def multiplicities(self, T: int | None = None) -> np.ndarray:
        """How often each pool function occurs among the first ``T`` steps."""
        seq = self.sequence if T is None else self.sequence[:T]
        return np.bincount(np.asarray(seq, dtype=int), minlength=len(self.pool)).astype(float)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "n": self.n,
            "ell": self.ell,
            "k": self.k,
            "T": self.T,
            "sequence": list(self.sequence),
            "pool": [f.to_dict() for f in self.pool],
        }
        if self.seed is not None:
            d["seed"] = self.seed
        if self.matroid != Uniform(self.n, self.k):
            d["matroid"] = self.matroid.to_dict()
        if self.meta:
            d["meta"] = self.meta
        return d


# -- generators --------------------------------------------------------------


def gen_coverage(seed: int = 0, n: int = 100, ell: int = 10, M: float = 100.0, cycles: int = 50) -> InstanceSpec:
    """Adversarial cycle where one-stage learning is stuck at half the optimum.

    ``f_1`` covers elements ``0..ell-1``, each worth ``M``; the remaining
    ``ell - 1`` functions each cover one element of ``ell..2*ell-2``.  The
    sequence repeats ``f_1..f_ell`` for ``cycles`` rounds.  The seed is
    recorded but the construction is deterministic.
    """
    if n < 2 * ell - 1:
        raise ValueError("coverage construction needs n >= 2*ell - 1")
    pool = [weighted_coverage(n, [(M, [i]) for i in range(ell)])]
    pool += [weighted_coverage(n, [(M, [ell + i])]) for i in range(ell - 1)]
    sequence = list(range(ell)) * cycles
    return InstanceSpec("coverage", n, ell, 1, sequence, pool, seed)


def _positive_normal(rng, mean, std, size) -> np.ndarray:
    """Normal draws, redrawing any nonpositive value."""
    out = mean + std * rng.standard_normal(size)
    bad = out <= 0
    while bad.any():
        out[bad] = mean + std * rng.standard_normal(int(bad.sum()))
        bad = out <= 0
    return out


def team_formation_function(rng, n: int, shrink: float = 0.9) -> WtpFunction:
    h = _positive_normal(rng, 30.0, 20.0, n)
    upper = np.triu(np.minimum(-20.0 + 10.0 * rng.standard_normal((n, n)), 0.0), 1)
    H = upper + upper.T
    # shrink interactions until every element keeps a nonnegative marginal
    while np.any(h + H.sum(axis=1) < 0):
        H *= shrink
    return quadratic(h, H)


def gen_team_formation(seed: int = 0, n: int = 100, ell: int = 10, k: int = 4, m: int = 50) -> InstanceSpec:
    """Quadratic team-value functions, each revealed once in order."""
    rng = make_rng(seed)
    pool = [team_formation_function(rng, n) for _ in range(m)]
    return InstanceSpec("teamformation", n, ell, k, list(range(m)), pool, seed)


def influence_function(n: int, edges, holders) -> WtpFunction:
    """Coverage of every node whose component (in ``edges``) contains a topic holder.

    One potential per such node, with ``c = b = 1`` and ``w`` the indicator of
    the topic holders in its component.
    """
    edges = np.asarray(list(edges), dtype=int).reshape(-1, 2)
    adj = coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n))
    _, label = connected_components(adj, directed=False)
    holders = np.asarray(sorted(set(int(v) for v in holders)), dtype=int)
    pots = []
    for v in range(n):
        members = holders[label[holders] == label[v]] if len(holders) else holders
        if len(members):
            w = np.zeros(n)
            w[members] = 1.0
            pots.append(ThresholdPotential(1.0, 1.0, w))
    return WtpFunction.from_potentials(n, pots)


def gen_influence(
    seed: int = 0,
    edges=KARATE_EDGES,
    n: int | None = None,
    ell: int = 8,
    k: int = 3,
    T: int = 100,
    p: float = 0.25,
    topics: int = 5,
    topic_prob: float = 0.5,
) -> InstanceSpec:
    """Topic-aware cascades on a graph (karate club by default).

    Each node holds each topic independently with probability ``topic_prob``.
    Every cascade keeps each edge with probability ``p`` and picks one topic
    uniformly; seeds influence the live component they sit in.
    """
    edges = [(int(u), int(v)) for u, v in edges]
    if n is None:
        n = 1 + max(max(e) for e in edges) if edges else 0
    rng = make_rng(seed)
    holds = rng.random((n, topics)) < topic_prob
    pool = []
    for _ in range(T):
        live = [e for e, keep in zip(edges, rng.random(len(edges)) < p) if keep]
        topic = int(rng.integers(topics))
        pool.append(influence_function(n, live, np.flatnonzero(holds[:, topic])))
    meta = {"topics": [np.flatnonzero(holds[:, j]).tolist() for j in range(topics)]}
    return InstanceSpec("influence", n, ell, k, list(range(T)), pool, seed, meta=meta)


GENERATORS = {"coverage": gen_coverage, "teamformation": gen_team_formation, "influence": gen_influence}


def generate(name: str, seed: int = 0) -> InstanceSpec:
    try:
        return GENERATORS[name](seed)
    except KeyError:
        raise ValueError(f"unknown instance generator {name!r}; choose from {sorted(GENERATORS)}") from None


def read_edge_list(path) -> list[tuple[int, int]]:
    """One ``u v`` pair per line; blank lines and ``#`` comments are skipped."""
    edges = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise InstanceError(f"{path}:{lineno}: expected 'u v'")
        edges.append((int(parts[0]), int(parts[1])))
    return edges


# -- JSON ----------------------------------------------------------------------


def dumps(inst: InstanceSpec) -> str:
    """Canonical serialization: sorted keys, two-space indent, trailing newline."""
    return json.dumps(inst.to_dict(), sort_keys=True, indent=2) + "\n"


def save_instance(inst: InstanceSpec, path) -> None:
    Path(path).write_text(dumps(inst))


def _require(d: dict, key: str, kind, where: str = ""):
    if key not in d:
        raise InstanceError(f"{where}{key}: missing required field")
    v = d[key]
    if kind is int and (isinstance(v, bool) or not isinstance(v, int)):
        raise InstanceError(f"{where}{key}: expected an integer, got {v!r}")
    if kind is list and not isinstance(v, list):
        raise InstanceError(f"{where}{key}: expected a list")
    return v


def from_dict(d: dict) -> InstanceSpec:
    if not isinstance(d, dict):
        raise InstanceError("instance: expected a JSON object")
    n = _require(d, "n", int)
    ell = _require(d, "ell", int)
    k = _require(d, "k", int)
    T = _require(d, "T", int)
    seq = _require(d, "sequence", list)
    pool_raw = _require(d, "pool", list)
    if len(seq) != T:
        raise InstanceError(f"sequence: length {len(seq)} differs from T={T}")
    for i, s in enumerate(seq):
        if isinstance(s, bool) or not isinstance(s, int):
            raise InstanceError(f"sequence[{i}]: expected an integer, got {s!r}")
    pool = []
    for u, fd in enumerate(pool_raw):
        try:
            f = WtpFunction.from_dict(fd, where=f"pool[{u}]")
        except (ValueError, TypeError) as exc:
            raise InstanceError(str(exc)) from None
        if f.n != n:
            raise InstanceError(f"pool[{u}].n: function dimension {f.n} differs from n={n}")
        pool.append(f)
    matroid = None
    if "matroid" in d:
        try:
            matroid = Matroid.from_dict(d["matroid"], n)
        except ValueError as exc:
            raise InstanceError(str(exc)) from None
    return InstanceSpec(
        str(d.get("name", "instance")), n, ell, k, seq, pool, d.get("seed"), matroid, d.get("meta", {})
    )


def loads(text: str, source: str = "<string>") -> InstanceSpec:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON ({exc.msg})") from None
    return from_dict(d)


def load_instance(path) -> InstanceSpec:
    path = Path(path)
    return loads(path.read_text(), str(path))


def random_wtp(rng, n: int, G: int = 5, density: float = 0.4, inf_prob: float = 0.2) -> WtpFunction:
    """A random WTP function: weights in [0, 1] on a random support, thresholds in
    [0.5, 2] (infinite with probability ``inf_prob``), coefficients in [0.5, 2]."""
    rng = make_rng(rng)
    W = rng.random((G, n)) * (rng.random((G, n)) < density)
    for j in np.flatnonzero(W.sum(axis=1) == 0):
        W[j, rng.integers(n)] = rng.random() + 0.1
    c = 0.5 + 1.5 * rng.random(G)
    b = np.where(rng.random(G) < inf_prob, np.inf, 0.5 + 1.5 * rng.random(G))
    return WtpFunction(n, c, b, W)


def gen_random(
    seed: int = 0, n: int = 20, ell: int = 5, k: int = 2, T: int = 256, pool_size: int = 8, G: int = 5
) -> InstanceSpec:
    """A stream drawn with replacement from a pool of random WTP functions."""
    rng = make_rng(seed)
    pool = [random_wtp(rng, n, G) for _ in range(pool_size)]
    sequence = rng.integers(pool_size, size=T).tolist()
    return InstanceSpec("random", n, ell, k, sequence, pool, seed)


GENERATORS["random"] = gen_random
