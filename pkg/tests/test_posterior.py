import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from mtop.posterior import (
    VARIANCE_FLOOR,
    NotReadyError,
    TDistParams,
    TruncatedTPosterior,
    sample_posteriors,
    std_t_cdf,
    std_t_quantile,
    t_cdf,
    t_pdf,
    t_quantile,
    truncated_t_mean,
    truncated_t_sample,
)


def quad_truncated_mean(mu, sigma, nu):
    """Independent oracle: integrate x f(x) over [0, 1] with scipy's t density."""
    f = stats.t(df=nu, loc=mu, scale=sigma).pdf
    pts = [min(max(mu, 0.0), 1.0)]
    num, _ = integrate.quad(lambda x: x * f(x), 0, 1, points=pts, epsabs=1e-13, epsrel=1e-12, limit=200)
    den, _ = integrate.quad(f, 0, 1, points=pts, epsabs=1e-13, epsrel=1e-12, limit=200)
    return num / den


# -- sufficient statistics ------------------------------------------------------

def test_two_rewards_give_expected_parameters():
    p = TruncatedTPosterior.from_rewards([0.2, 0.4])
    assert p.mu0 == pytest.approx(0.3, abs=1e-15)
    assert p.sigma0_sq == pytest.approx(0.005, abs=1e-15)
    assert p.nu == 2


@pytest.mark.parametrize("c", [0.0, 0.37, 1.0])
def test_identical_rewards_floor_variance(c):
    p = TruncatedTPosterior.from_rewards([c, c])
    assert p.mu0 == c
    assert p.sigma0_sq == VARIANCE_FLOOR
    assert p.is_degenerate
    assert p.sample(np.random.default_rng(0)) == c
    assert p.truncated_mean() == c


def test_incremental_matches_batch_statistics():
    r = np.random.default_rng(5).random(1000)
    p = TruncatedTPosterior()
    for x in r:
        p = p.update(float(x))
    mean = r.mean()
    assert p.mu0 == pytest.approx(mean, abs=1e-12)
    assert p.sigma0_sq == pytest.approx(((r - mean) ** 2).sum() / len(r) ** 2, abs=1e-12)


def test_update_is_pure():
    p = TruncatedTPosterior.from_rewards([0.1, 0.2])
    q = p.update(0.9)
    assert p.n == 2 and q.n == 3


def test_update_rejects_out_of_range():
    with pytest.raises(ValueError):
        TruncatedTPosterior().update(1.5)


def test_needs_two_observations():
    p = TruncatedTPosterior.from_rewards([0.5])
    assert not p.is_proper
    with pytest.raises(NotReadyError):
        p.sample(np.random.default_rng(0))
    with pytest.raises(NotReadyError):
        p.truncated_mean()


def test_snapshot_round_trip():
    p = TruncatedTPosterior.from_rewards([0.2, 0.4, 0.9])
    snap = p.snapshot(4)
    assert snap["arm"] == 4 and snap["nu"] == 3
    assert snap["truncated_mean"] == p.truncated_mean()
    assert TruncatedTPosterior.from_snapshot(snap) == p


# -- t distribution ---------------------------------------------------------------

def test_cdf_at_location_is_half():
    for nu in (1, 2, 5.5, 40):
        assert t_cdf(TDistParams(0.3, 0.2, nu), 0.3) == pytest.approx(0.5, abs=1e-15)


def test_cauchy_cdf_one_scale_above():
    # arctan closed form: 1/2 + atan(1)/pi
    assert t_cdf(TDistParams(0.2, 0.7, 1), 0.9) == pytest.approx(0.5 + math.atan(1.0) / math.pi, abs=1e-14)
    assert t_cdf(TDistParams(0.2, 0.7, 1), 0.9) == pytest.approx(0.75, abs=1e-14)


@pytest.mark.parametrize("nu", [1, 2, 3, 7.5, 30, 200])
def test_cdf_and_pdf_match_scipy(nu):
    u = np.linspace(-40, 40, 801)
    assert np.allclose(std_t_cdf(u, nu), stats.t.cdf(u, nu), rtol=1e-12, atol=1e-15)
    p = TDistParams(0.4, 0.3, nu)
    x = np.linspace(-2, 3, 101)
    assert np.allclose(t_pdf(p, x), stats.t.pdf(x, nu, loc=0.4, scale=0.3), rtol=1e-12)


@pytest.mark.parametrize("nu", [1, 2, 3, 30])
def test_quantile_round_trip(nu):
    p = TDistParams(0.5, 0.1, nu)
    x = 0.5 + 0.1 * np.arange(-6, 7)
    assert np.allclose(t_quantile(p, t_cdf(p, x)), x, atol=1e-9)


def test_quantile_rejects_bad_probability():
    for q in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            std_t_quantile(q, 3)


@pytest.mark.parametrize("sigma,nu", [(0.05, 2), (0.3, 3), (1.0, 1), (2.0, 30)])
def test_density_normalises(sigma, nu):
    total, _ = integrate.quad(lambda x: t_pdf(TDistParams(0.3, sigma, nu), x), -np.inf, np.inf,
                              epsabs=1e-12, limit=200)
    assert total == pytest.approx(1.0, abs=1e-9)


# -- truncated mean -----------------------------------------------------------------

@pytest.mark.parametrize("sigma,nu", [(0.01, 2), (0.3, 3), (5.0, 1), (0.1, 30)])
def test_symmetric_truncation_keeps_centre(sigma, nu):
    assert truncated_t_mean(0.5, sigma, nu) == pytest.approx(0.5, abs=1e-12)


def test_truncated_mean_two_rewards_against_quadrature():
    p = TruncatedTPosterior.from_rewards([0.2, 0.4])
    oracle = quad_truncated_mean(0.3, math.sqrt(0.005), 2)
    assert p.truncated_mean() == pytest.approx(oracle, abs=1e-8)
    # frozen from the quadrature oracle
    assert p.truncated_mean() == pytest.approx(0.30901699437494745, abs=1e-10)


def test_upper_cut_pulls_mean_down():
    m = truncated_t_mean(0.9, 0.5, 3)
    assert m < 0.9
    assert m == pytest.approx(quad_truncated_mean(0.9, 0.5, 3), abs=1e-8)


def test_cauchy_truncated_mean():
    assert truncated_t_mean(0.2, 0.3, 1) == pytest.approx(quad_truncated_mean(0.2, 0.3, 1), abs=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.floats(-0.5, 1.5), st.floats(1e-3, 3.0), st.sampled_from([1, 2, 3, 4, 10, 50]))
def test_truncated_mean_inside_unit_interval(mu, sigma, nu):
    m = truncated_t_mean(mu, sigma, nu)
    assert 0.0 < m < 1.0


def test_truncated_mean_increases_with_location():
    for sigma in (0.05, 0.3, 1.0):
        for nu in (2, 5):
            means = [truncated_t_mean(mu, sigma, nu) for mu in np.linspace(0.05, 0.95, 19)]
            assert np.all(np.diff(means) > 0)


def test_posterior_consistency():
    rng = np.random.default_rng(11)
    for target in (0.15, 0.5, 0.82):
        r = np.clip(rng.normal(target, 0.1, 10_000), 0, 1)
        p = TruncatedTPosterior.from_rewards(r)
        assert abs(p.truncated_mean() - target) < 0.01


# -- sampling -----------------------------------------------------------------------

def test_sampler_mean_matches_analytic():
    p = TruncatedTPosterior.from_rewards([0.2, 0.4])
    x = p.sample(np.random.default_rng(99), 1_000_000)
    se = x.std() / math.sqrt(x.size)
    assert abs(x.mean() - p.truncated_mean()) < 3 * se


def test_sampler_support_extreme_parameters():
    x = truncated_t_sample(0.99, 1.0, 2, np.random.default_rng(1).random(1_000_000))
    assert x.min() >= 0.0 and x.max() <= 1.0


def test_sampler_handles_far_tail_truncation():
    # nearly all mass lies outside [0, 1]; inverse-CDF still returns valid points
    x = truncated_t_sample(-3.0, 0.05, 5, np.random.default_rng(2).random(100_000))
    assert np.all((0.0 <= x) & (x <= 1.0))
    se = x.std() / math.sqrt(x.size)
    assert abs(x.mean() - truncated_t_mean(-3.0, 0.05, 5)) < 3 * se


def test_sampler_matches_scipy_truncated_quantiles():
    mu, sigma, nu = 0.7, 0.4, 3
    u = np.linspace(0.01, 0.99, 25)
    dist = stats.t(df=nu, loc=mu, scale=sigma)
    lo, hi = dist.cdf(0.0), dist.cdf(1.0)
    expected = dist.ppf(lo + u * (hi - lo))
    assert np.allclose(truncated_t_sample(mu, sigma, nu, u), expected, atol=1e-9)


def test_joint_draw_one_value_per_arm():
    posts = [TruncatedTPosterior.from_rewards(r) for r in ([0.1, 0.3], [0.5, 0.5], [0.8, 0.9, 0.7])]
    draw = sample_posteriors(posts, np.random.default_rng(0))
    assert draw.shape == (3,)
    assert draw[1] == 0.5
    assert np.all((0 <= draw) & (draw <= 1))
