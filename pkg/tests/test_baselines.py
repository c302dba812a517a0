import numpy as np
import pytest

from o2ssm.baselines import (
    co_round,
    co_scale,
    continuous_optimization,
    offline_raoco,
    one_stage_matroid,
    random_policy,
    replacement_greedy,
)
from o2ssm.datasets import gen_random, random_wtp
from o2ssm.harness import run_baseline, run_raoco
from o2ssm.matroid import Partition, Uniform
from o2ssm.oracle import offline_opt_integral
from o2ssm.wtp import WtpFunction, weighted_coverage

from factories import random_matroid, rng


def plain_replacement_greedy(fs, m, ell):
    """Straightforward transcription: loop over elements and functions with set arithmetic."""
    n = m.n

    def f_of(f, S):
        return f.set_value(sorted(S))

    def indep(S):
        y = np.zeros(n)
        y[list(S)] = 1
        return m.is_independent(y)

    def grad(f, e, A):
        if indep(A | {e}):
            return f_of(f, A | {e}) - f_of(f, A), None
        best, who = 0.0, None
        for a in sorted(A):
            B = (A - {a}) | {e}
            if indep(B):
                gain = f_of(f, B) - f_of(f, A)
                if gain > best:
                    best, who = gain, a
        return best, who

    S, B = [], [set() for _ in fs]
    for _ in range(ell):
        scores = {e: sum(grad(f, e, B[t])[0] for t, f in enumerate(fs)) for e in range(n) if e not in S}
        top = max(scores.values())
        e = min(e for e, v in scores.items() if v == top)
        S.append(e)
        for t, f in enumerate(fs):
            gain, who = grad(f, e, B[t])
            if gain > 0:
                B[t] = (B[t] - {who}) | {e} if who is not None else B[t] | {e}
    return sorted(S), [sorted(b) for b in B]


class TestRandomPolicy:
    def test_full(self):
        np.testing.assert_array_equal(random_policy(4, 4, 0), np.ones(4))

    def test_size_and_determinism(self):
        a = random_policy(20, 5, 3)
        assert a.sum() == 5
        np.testing.assert_array_equal(a, random_policy(20, 5, 3))

    def test_uniform_marginals(self):
        r = np.random.default_rng(0)
        draws = np.array([random_policy(2, 1, r) for _ in range(100_000)])
        sigma = np.sqrt(0.25 / len(draws))
        assert np.all(np.abs(draws.mean(axis=0) - 0.5) <= 3 * sigma)


class TestOneStage:
    def test_matroid(self):
        assert one_stage_matroid(10, 3) == Uniform(10, 3)

    def test_identical_when_k_equals_ell(self):
        inst = gen_random(2, n=10, ell=3, k=3, T=30)
        a = run_raoco(inst, "oga", 0.2, 5)
        b = run_baseline(inst, "1s-oga", 5, eta=0.2)
        assert a.rewards == b.rewards
        for x, y in zip(a.x_frac, b.x_frac):
            np.testing.assert_array_equal(x, y)

    def test_outputs_feasible(self):
        inst = gen_random(3, T=20)
        rec = run_baseline(inst, "1s-oga", 1, eta=0.1)
        assert all(x.sum() <= inst.ell for x in rec.x_int)


class TestReplacementGreedy:
    def test_modular_top_k(self):
        f = WtpFunction(5, [1.0], [np.inf], [[0.1, 0.9, 0.5, 0.7, 0.2]])
        x, B = replacement_greedy([f], Uniform(5, 2), 2)
        np.testing.assert_array_equal(np.flatnonzero(x), [1, 3])
        assert B == [[1, 3]]

    def test_hand_traced(self):
        # f1 rewards {0} or {1}; f2 rewards {2}, and {3} a bit less; k = 1
        f1 = weighted_coverage(4, [(1.0, [0, 1])])
        f2 = weighted_coverage(4, [(1.0, [2]), (0.5, [3])])
        x, B = replacement_greedy([f1, f2], Uniform(4, 1), 2)
        # round 1: gains 1, 1, 1, 0.5 -> element 0 (lowest index); round 2: element 2
        np.testing.assert_array_equal(np.flatnonzero(x), [0, 2])
        assert B == [[0], [2]]

    def test_swap_when_full(self):
        f = weighted_coverage(3, [(1.0, [0]), (3.0, [1])])
        x, B = replacement_greedy([f, f], Uniform(3, 1), 2)
        assert B[0] == [1]

    @pytest.mark.parametrize("seed", range(15))
    def test_matches_plain_transcription(self, seed):
        r = rng(seed)
        n = int(r.integers(3, 9))
        m = random_matroid(r, n)
        fs = [random_wtp(r, n, G=3) for _ in range(int(r.integers(1, 4)))]
        ell = int(r.integers(1, min(4, n) + 1))
        x, B = replacement_greedy(fs, m, ell)
        S, B2 = plain_replacement_greedy(fs, m, ell)
        np.testing.assert_array_equal(np.flatnonzero(x), S)
        assert B == B2
        value = np.mean([f.set_value(b) for f, b in zip(fs, B)])
        opt, _ = offline_opt_integral(fs, m, n, ell)
        assert 0 <= value <= opt + 1e-9


class TestContinuousOptimization:
    def test_scale(self):
        assert co_scale(4) == pytest.approx(1 - 1 / np.sqrt(2))
        assert 1 - co_scale(4) == pytest.approx(0.7071, abs=1e-4)

    def test_requires_k_above_one(self):
        f = random_wtp(rng(0), 4)
        with pytest.raises(ValueError, match="k > 1"):
            continuous_optimization([f], Uniform(4, 1), 4, 2, 1, 0)

    def test_feasible(self):
        r = rng(1)
        fs = [random_wtp(r, 8) for _ in range(3)]
        for s in range(20):
            x = continuous_optimization(fs, Uniform(8, 2), 8, 3, 2, s)
            assert x.sum() <= 3

    def test_marginals_without_fallback(self):
        # with at most ell fractional mass after shrinking the fallback never fires
        x_star = np.array([0, 0, 0.5, 0, 1, 1])
        scale = co_scale(4)
        r = np.random.default_rng(5)
        draws = np.array([co_round(x_star, 4, 3, r) for _ in range(50_000)])
        target = scale * x_star
        sigma = np.sqrt(target * (1 - target) / len(draws))
        assert np.all(np.abs(draws.mean(axis=0) - target) <= 3 * sigma + 1e-12)

    def test_modular_solution_is_shrunk_top_set(self):
        f = WtpFunction(6, [1.0], [np.inf], [[1, 2, 3, 4, 5, 6]])
        draws = [continuous_optimization([f], Uniform(6, 4), 6, 2, 4, s) for s in range(30)]
        assert all(set(np.flatnonzero(x)) <= {4, 5} for x in draws)

    def test_fallback_returns_random_set(self):
        x = co_round(np.ones(6), 100, 2, 0, epsilon=0.49)
        assert x.sum() == 2


class TestOfflineRaoco:
    def test_modular_top_ell(self):
        f = WtpFunction(5, [1.0], [np.inf], [[0.1, 0.9, 0.5, 0.7, 0.2]])
        x, x_star = offline_raoco([f], Uniform(5, 5), 5, 2, 0)
        np.testing.assert_array_equal(np.flatnonzero(x), [1, 3])
        np.testing.assert_allclose(x_star, x, atol=1e-9)

    def test_partition(self):
        f = weighted_coverage(4, [(1.0, [0]), (1.0, [2])])
        x, _ = offline_raoco([f], Partition(4, [[0, 1], [2, 3]], [1, 1]), 4, 2, 0)
        np.testing.assert_array_equal(np.flatnonzero(x), [0, 2])
