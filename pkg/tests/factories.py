"""Random small instances shared by the tests."""

import itertools

import numpy as np

from o2ssm.datasets import random_wtp
from o2ssm.matroid import Partition, Uniform


def rng(seed=0):
    return np.random.default_rng(seed)


def random_matroid(r, n, kind=None):
    kind = kind or ("uniform" if r.random() < 0.6 else "partition")
    if kind == "uniform":
        return Uniform(n, int(r.integers(1, min(3, n) + 1)))
    labels = r.integers(0, 3, size=n)
    # leave some elements outside every part now and then
    labels[r.random(n) < 0.1] = -1
    parts = [np.flatnonzero(labels == p).tolist() for p in range(3)]
    caps = [int(r.integers(0, 3)) for _ in parts]
    return Partition(n, parts, caps)


def random_point(r, n, ell):
    """A point of the capped simplex {x in [0,1]^n : sum x <= ell}."""
    x = r.random(n)
    if x.sum() > ell:
        x *= ell / x.sum()
    return x


def random_instance(seed, n_max=8):
    r = rng(seed)
    n = int(r.integers(3, n_max + 1))
    f = random_wtp(r, n, G=int(r.integers(1, 6)))
    return f, random_matroid(r, n)


def subsets(elements):
    elements = list(elements)
    for s in range(len(elements) + 1):
        yield from itertools.combinations(elements, s)


def indicator(n, S):
    y = np.zeros(n)
    y[list(S)] = 1.0
    return y


def naive_second_stage(f, m, x):
    """max f(S) over every independent S inside the support of x, by brute force."""
    best = 0.0
    for S in subsets(np.flatnonzero(x)):
        y = indicator(f.n, S)
        if m.is_independent(y):
            best = max(best, f.value(y))
    return best
