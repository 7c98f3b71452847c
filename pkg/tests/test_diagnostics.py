import itertools
import math

import numpy as np
import pytest

from mtop.core import ConfigError
from mtop.diagnostics import DiscretePosterior, check_union_bounds, estimate_boundary_probabilities
from mtop.posterior import NotReadyError, TruncatedTPosterior


def enumerate_report(posteriors, m):
    """Exact boundary probabilities by summing over every (belief, Thompson) outcome pair."""
    K = len(posteriors)
    outcomes = []
    for idx in itertools.product(*(range(len(p.values)) for p in posteriors)):
        values = [p.values[i] for i, p in zip(idx, posteriors)]
        prob = math.prod(p.probs[i] for i, p in zip(idx, posteriors))
        ranking = sorted(range(K), key=lambda k: (-values[k], k))
        outcomes.append((prob, ranking))
    p_rank = np.zeros(K)
    p_err = d1 = d2 = 0.0
    for (pb, belief), (pt, ts) in itertools.product(outcomes, outcomes):
        w = pb * pt
        top = set(belief[:m])
        hit = [ts[rho] in top for rho in range(K)]
        p_rank += w * np.array(hit, float)
        p_err += w * any(hit[m:])
        d1 += w * (np.mean(hit[m:]) - hit[m])
        d2 += w * (np.mean([not h for h in hit[:m]]) - (not hit[m - 1]))
    return p_rank, p_err, d1, d2


def random_discrete(rng, k):
    posts = []
    for _ in range(k):
        values = np.sort(rng.choice(np.linspace(0.05, 0.95, 19), 3, replace=False))
        probs = rng.dirichlet(np.ones(3))
        posts.append(DiscretePosterior(values, probs))
    return posts


@pytest.mark.parametrize("seed,m", [(0, 1), (1, 1), (2, 2)])
def test_matches_exact_enumeration(seed, m):
    """Ten independent 10^4-draw estimates, pooled: every quantity within 3 pooled SEs."""
    posts = random_discrete(np.random.default_rng(seed), 3)
    p_rank, p_err, d1, d2 = enumerate_report(posts, m)
    exact = np.concatenate([p_rank, [p_err, d1, d2]])
    reps = [estimate_boundary_probabilities(posts, m, 10_000, np.random.default_rng([seed, r])) for r in range(10)]
    est = np.array([r.p_rank_in_top + [r.p_error, -r.heuristic1_margin, -r.heuristic2_margin] for r in reps])
    pooled = est.mean(axis=0)
    se = est.std(axis=0, ddof=1) / math.sqrt(len(reps))
    assert np.all(np.abs(pooled - exact) <= 3 * se + 1e-12)


def test_enumeration_oracle_on_identical_two_arm_case():
    # exchangeability of the two draws: P(A^TS_2 in J*) = P(the two rankings disagree)
    post = DiscretePosterior([0.2, 0.5, 0.8], [0.3, 0.4, 0.3])
    p_rank, p_err, _, _ = enumerate_report([post, post], 1)
    p_first = 0.3 * 0.3 + 0.4 * 0.7 + 0.3 * 1.0  # arm 0 wins ties, so P(arm 0 ranked first)
    assert p_rank[1] == pytest.approx(2 * p_first * (1 - p_first), abs=1e-15)
    assert p_rank.sum() == pytest.approx(1.0)
    assert p_err == pytest.approx(p_rank[1])


def test_identical_two_arms_half():
    post = TruncatedTPosterior.from_rewards([0.3, 0.6, 0.5])
    rep = estimate_boundary_probabilities([post, post], 1, 100_000, np.random.default_rng(0))
    assert abs(rep.p_rank_in_top[1] - 0.5) < 3 * rep.se_rank_in_top[1]
    assert abs(rep.p_rank_in_top[0] - 0.5) < 3 * rep.se_rank_in_top[0]


def test_identical_posteriors_symmetric_over_arms():
    post = TruncatedTPosterior.from_rewards([0.2, 0.7, 0.4])
    rep = estimate_boundary_probabilities([post] * 4, 2, 100_000, np.random.default_rng(1))
    freq = np.array(rep.belief_rank_freq)
    se = math.sqrt(0.25 * 0.75 / rep.n_mc)
    assert np.all(np.abs(freq - 0.25) < 4 * se)


def test_point_masses_give_zero_error():
    posts = [TruncatedTPosterior.from_rewards([v] * 3) for v in (0.1, 0.4, 0.6, 0.9)]
    rep = estimate_boundary_probabilities(posts, 2, 10_000, np.random.default_rng(2))
    assert rep.p_error == 0.0
    assert rep.p_rank_in_top == [1.0, 1.0, 0.0, 0.0]
    check = check_union_bounds(rep)
    assert check.union_holds and not check.violations


def test_near_point_masses_disjoint():
    rng = np.random.default_rng(3)
    posts = [TruncatedTPosterior.from_rewards(rng.normal(mu, 0.001, 50).clip(0, 1)) for mu in (0.2, 0.5, 0.8)]
    rep = estimate_boundary_probabilities(posts, 1, 20_000, np.random.default_rng(4))
    assert rep.p_error == 0.0


def test_sum_to_expectation_identity():
    rng = np.random.default_rng(5)
    posts = [TruncatedTPosterior.from_rewards(rng.random(4)) for _ in range(6)]
    rep = estimate_boundary_probabilities(posts, 2, 20_000, np.random.default_rng(6))
    p = np.array(rep.p_rank_in_top)
    assert rep.mean_below == sum(p[2:]) / 4
    assert rep.union_sum == float(p[2:].sum())
    assert rep.bound_below == pytest.approx(4 * p[2])
    assert rep.bound_above == pytest.approx(2 * (1 - p[1]))
    assert all(0.0 <= x <= 1.0 for x in rep.p_rank_in_top + [rep.p_error])


def test_probability_matching_marginals():
    rng = np.random.default_rng(7)
    posts = [TruncatedTPosterior.from_rewards(rng.uniform(0.3, 0.7, 5)) for _ in range(4)]
    rep = estimate_boundary_probabilities(posts, 2, 100_000, np.random.default_rng(8))
    a, b = np.array(rep.belief_rank_freq), np.array(rep.ts_rank_freq)
    se = np.sqrt(np.maximum(a * (1 - a), 1e-12) * 2 / rep.n_mc)
    assert np.all(np.abs(a - b) < 4 * se)


def test_relabeling_invariance():
    rng = np.random.default_rng(9)
    posts = [TruncatedTPosterior.from_rewards(rng.uniform(0.2, 0.8, 6)) for _ in range(5)]
    perm = [3, 0, 4, 1, 2]
    rep = estimate_boundary_probabilities(posts, 2, 100_000, np.random.default_rng(10))
    rep_p = estimate_boundary_probabilities([posts[i] for i in perm], 2, 100_000, np.random.default_rng(11))
    se = np.array(rep.se_rank_in_top) * math.sqrt(2) + 1e-12
    assert np.all(np.abs(np.array(rep.p_rank_in_top) - np.array(rep_p.p_rank_in_top)) < 4 * se)
    back = np.array(rep_p.belief_rank_freq)[np.argsort(perm)]
    assert np.allclose(back, rep.belief_rank_freq, atol=0.01)


def test_union_bound_with_identical_posteriors():
    post = TruncatedTPosterior.from_rewards([0.1, 0.9, 0.5])
    rep = estimate_boundary_probabilities([post] * 4, 2, 50_000, np.random.default_rng(12))
    assert check_union_bounds(rep).union_holds


def test_union_bound_random_sets():
    rng = np.random.default_rng(13)
    for _ in range(20):
        k = int(rng.integers(3, 7))
        posts = [TruncatedTPosterior.from_rewards(rng.uniform(0, 1, int(rng.integers(2, 8)))) for _ in range(k)]
        rep = estimate_boundary_probabilities(posts, int(rng.integers(1, k)), 5_000, rng)
        assert check_union_bounds(rep).union_holds


def test_batches_do_not_change_estimates():
    posts = random_discrete(np.random.default_rng(14), 3)
    a = estimate_boundary_probabilities(posts, 1, 10_000, np.random.default_rng(0), batch=10_000)
    b = estimate_boundary_probabilities(posts, 1, 10_000, np.random.default_rng(0), batch=10_000)
    assert a.to_dict() == b.to_dict()
    c = estimate_boundary_probabilities(posts, 1, 10_000, np.random.default_rng(0), batch=3_000)
    assert c.n_mc == 10_000


def test_input_validation():
    post = TruncatedTPosterior.from_rewards([0.1, 0.2])
    with pytest.raises(ConfigError):
        estimate_boundary_probabilities([post, post], 2, 10, np.random.default_rng(0))
    with pytest.raises(NotReadyError):
        estimate_boundary_probabilities([post, TruncatedTPosterior.from_rewards([0.3])], 1, 10,
                                        np.random.default_rng(0))
    with pytest.raises(ValueError):
        DiscretePosterior([0.1, 0.2], [0.5, 0.6])
