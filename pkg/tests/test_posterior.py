import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gammaln

from rpvab.posterior import (
    BetaPosterior,
    NigPosterior,
    StudentTParams,
    ValueSummary,
    marginal_mean,
    sample_conversion,
    sample_mean_value,
    update_conversion,
    update_value,
)


def grid_beta_binomial(a0, b0, k, n, points=10_000):
    """Posterior mean/var of p by brute-force normalisation on a midpoint grid."""
    p = (np.arange(points) + 0.5) / points
    logw = (a0 - 1 + k) * np.log(p) + (b0 - 1 + n - k) * np.log1p(-p)
    w = np.exp(logw - logw.max())
    w /= w.sum()
    mean = np.sum(w * p)
    return mean, np.sum(w * (p - mean) ** 2)


def grid_nig_mean_moments(prior: NigPosterior, x, n_mu=1500, n_s=1500):
    """First two moments of mu under the 2-D grid posterior over (mu, sigma^2).

    Prior: mu | s2 ~ N(mu0, s2/n0), s2 ~ InvGamma(a0, b0); likelihood Normal.
    sigma^2 is gridded in log space with the Jacobian folded in.
    """
    x = np.asarray(x, float)
    k = x.size
    xbar = x.mean() if k else prior.mu
    span = 40.0
    mu = np.linspace(xbar - span, xbar + span, n_mu)
    log_s2 = np.linspace(np.log(1e-2), np.log(1e6), n_s)
    s2 = np.exp(log_s2)
    M, S2 = np.meshgrid(mu, s2, indexing="ij")
    logp = (
        -0.5 * np.log(S2) - prior.n_pseudo * (M - prior.mu) ** 2 / (2 * S2)
        - (prior.alpha + 1) * np.log(S2) - prior.beta / S2
        + np.log(S2)  # d s2 = s2 d log s2
    )
    sq = np.zeros_like(M)
    for xi in x:
        sq += (xi - M) ** 2
    logp += -0.5 * k * np.log(S2) - sq / (2 * S2)
    w = np.exp(logp - logp.max())
    marg = w.sum(axis=1)
    marg /= marg.sum()
    m1 = np.sum(marg * mu)
    return m1, np.sum(marg * (mu - m1) ** 2)


class TestUpdateConversion:
    @pytest.mark.parametrize(
        "prior, k, n, expected",
        [
            ((1, 1), 0, 0, (1, 1)),
            ((1, 1), 3, 100, (4, 98)),
            ((2, 5), 10, 40, (12, 35)),
        ],
    )
    def test_examples(self, prior, k, n, expected):
        post = update_conversion(BetaPosterior(*prior), k, n)
        assert (post.alpha, post.beta) == expected

    def test_rejects_more_successes_than_trials(self):
        with pytest.raises(ValueError, match="exceed"):
            update_conversion(BetaPosterior(), 5, 4)

    @pytest.mark.parametrize("prior, k, n", [((1, 1), 3, 100), ((2, 5), 10, 40), ((1, 1), 0, 10), ((0.5, 0.5), 7, 9)])
    def test_matches_grid_bayes(self, prior, k, n):
        post = update_conversion(BetaPosterior(*prior), k, n)
        mean, var = grid_beta_binomial(*prior, k, n)
        assert abs(post.mean - mean) < 1e-4
        assert abs(post.var - var) < 1e-4

    def test_mean_approaches_observed_rate(self):
        prior = BetaPosterior(1, 1)
        gaps = [abs(update_conversion(prior, 3 * m, 100 * m).mean - 0.03) for m in (1, 10, 100, 1000)]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))

    def test_invalid_beta_parameters(self):
        with pytest.raises(ValueError):
            BetaPosterior(0, 1)


class TestUpdateValue:
    def test_zero_data_identity(self):
        prior = NigPosterior(100, 1, 1, 1)
        assert update_value(prior, ValueSummary()) == prior

    def test_hand_evaluated_example(self):
        data = ValueSummary.from_values([90, 100, 110, 100])
        assert (data.count, data.sum, data.sum_sq) == (4, 400.0, 40200.0)
        post = update_value(NigPosterior(100, 1, 1, 1), data)
        assert post == pytest.approx(NigPosterior(100, 5, 3, 101))
        assert (post.mu, post.n_pseudo, post.alpha, post.beta) == pytest.approx((100, 5, 3, 101))

    def test_single_zero_observation(self):
        post = update_value(NigPosterior(0, 1, 1, 1), ValueSummary.from_values([0.0]))
        assert (post.mu, post.n_pseudo, post.alpha, post.beta) == (0, 2, 1.5, 1)

    @pytest.mark.parametrize(
        "prior, x",
        [
            (NigPosterior(100, 1, 1, 1), [90, 100, 110, 100]),
            (NigPosterior(100, 1, 1, 1), [80, 95, 130, 112, 101, 90]),
            (NigPosterior(90, 2, 2, 50), [100, 104, 97]),
        ],
    )
    def test_marginal_mean_moments_match_grid(self, prior, x):
        t = marginal_mean(update_value(prior, ValueSummary.from_values(x)))
        m1, var = grid_nig_mean_moments(prior, x)
        t_var = t.scale**2 * t.dof / (t.dof - 2)
        assert m1 == pytest.approx(t.loc, rel=0.01)
        assert var == pytest.approx(t_var, rel=0.01)

    def test_ssd_clamped_nonnegative(self):
        # identical large values: sum_sq - sum^2/n cancels to ~0 or slightly negative
        vs = ValueSummary.from_values([1e8 + 0.1] * 3)
        assert vs.ssd >= 0.0

    def test_invalid_summary(self):
        with pytest.raises(ValueError):
            ValueSummary(0, 1.0, 1.0)


values = st.lists(st.floats(min_value=0.01, max_value=1e4, allow_nan=False), min_size=1, max_size=30)


@settings(max_examples=100, deadline=None)
@given(values)
def test_value_update_order_independent(xs):
    prior = NigPosterior(100, 1, 1, 1)
    pooled = update_value(prior, ValueSummary.from_values(xs))
    seq = ValueSummary()
    for x in xs:
        seq = seq + ValueSummary.from_values([x])
    sequential = update_value(prior, seq)
    for a, b in zip(
        (pooled.mu, pooled.n_pseudo, pooled.alpha, pooled.beta),
        (sequential.mu, sequential.n_pseudo, sequential.alpha, sequential.beta),
    ):
        assert a == pytest.approx(b, rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(values)
def test_streaming_update_equals_direct_formula(xs):
    # SSD from streaming sums vs two-pass deviations
    x = np.asarray(xs)
    prior = NigPosterior(100, 1, 1, 1)
    post = update_value(prior, ValueSummary.from_values(x))
    k, xbar = x.size, x.mean()
    ssd = np.sum((x - xbar) ** 2)
    beta = 1 + ssd / 2 + k * 1 / (2 * (1 + k)) * (xbar - 100) ** 2
    assert post.beta == pytest.approx(beta, rel=1e-6, abs=1e-6)


def test_value_update_ignores_data_order():
    prior = NigPosterior(100, 1, 1, 1)
    xs = [120.0, 80.0, 95.0, 105.0, 111.0]
    a = update_value(prior, ValueSummary.from_values(xs))
    b = update_value(prior, ValueSummary.from_values(xs[::-1]))
    assert a == pytest.approx(b)


class TestMarginalMean:
    def test_worked_example(self):
        t = marginal_mean(NigPosterior(100, 5, 3, 101))
        assert t.dof == 6 and t.loc == 100
        assert abs(t.scale - 2.5949) < 1e-4
        assert t.scale == pytest.approx(math.sqrt(101 / 15), rel=1e-12)

    def test_unit_case(self):
        assert marginal_mean(NigPosterior(0, 1, 1, 1)) == StudentTParams(2, 0, 1)

    def test_beta_equals_alpha_n(self):
        assert marginal_mean(NigPosterior(50, 4, 8, 32)) == StudentTParams(16, 50, 1)

    def test_pure(self):
        p = NigPosterior(12, 3, 4, 5)
        assert marginal_mean(p) == marginal_mean(p)

    def test_matches_scipy_t_density(self):
        # the analytic marginal integrates the NIG joint over sigma^2
        from scipy import integrate, stats

        post = NigPosterior(100, 5, 3, 101)
        t = marginal_mean(post)

        def joint(s2, m):
            return (
                stats.norm.pdf(m, post.mu, math.sqrt(s2 / post.n_pseudo))
                * math.exp(post.alpha * math.log(post.beta) - gammaln(post.alpha)
                           - (post.alpha + 1) * math.log(s2) - post.beta / s2)
            )

        for m in (95.0, 100.0, 104.0):
            dens, _ = integrate.quad(joint, 0, np.inf, args=(m,))
            assert dens == pytest.approx(stats.t.pdf(m, t.dof, t.loc, t.scale), rel=1e-6)


class TestSampling:
    def test_uniform_mean(self, rng):
        assert abs(sample_conversion(BetaPosterior(1, 1), 100_000, rng).mean() - 0.5) < 0.005

    def test_posterior_mean(self, rng):
        assert abs(sample_conversion(BetaPosterior(4, 98), 100_000, rng).mean() - 4 / 102) < 0.003

    def test_conversion_deterministic(self):
        a = sample_conversion(BetaPosterior(4, 98), 1000, np.random.default_rng(5))
        b = sample_conversion(BetaPosterior(4, 98), 1000, np.random.default_rng(5))
        assert np.array_equal(a, b)

    def test_t_location(self, rng):
        draws = sample_mean_value(StudentTParams(6, 100, 2.5949), 100_000, rng)
        assert abs(draws.mean() - 100) < 0.1

    def test_t_variance(self, rng):
        draws = sample_mean_value(StudentTParams(6, 0, 1), 100_000, rng)
        assert draws.var() == pytest.approx(1.5, rel=0.05)

    def test_dof_two_accepted(self, rng):
        draws = sample_mean_value(StudentTParams(2.0, 0, 1), 1000, rng)
        assert np.all(np.isfinite(draws))

    def test_t_deterministic(self):
        t = StudentTParams(6, 100, 2.0)
        assert np.array_equal(
            sample_mean_value(t, 500, np.random.default_rng(9)),
            sample_mean_value(t, 500, np.random.default_rng(9)),
        )

    def test_rejects_empty(self, rng):
        with pytest.raises(ValueError):
            sample_conversion(BetaPosterior(), 0, rng)
        with pytest.raises(ValueError):
            sample_mean_value(StudentTParams(2, 0, 1), 0, rng)
