"""Tests for boundary maximum likelihood and the associated statistics."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixtail.errors import DomainError, InputError, InvariantError, RangeError
from mixtail.generators import get_pair, theta_bounds
from mixtail.inference import (
    HSample,
    activity_rates,
    approx_stats,
    bartlett_factor,
    fit_theta,
    lr_statistic,
    positivity,
    ratio_sample,
)
from mixtail.stable_laws import g_quantile


def hs(*values):
    return HSample.from_values(np.array(values, dtype=float))


class TestHSample:
    def test_nan_rejected(self):
        with pytest.raises(InputError):
            hs(1.0, math.nan)

    def test_negative_rejected(self):
        with pytest.raises(InvariantError):
            hs(1.0, -0.5)

    def test_empty_rejected(self):
        with pytest.raises(InputError):
            HSample.from_values(np.array([]))

    def test_ratio_sample_roundtrip(self):
        pair = get_pair("gauss_cauchy")
        sample = ratio_sample(pair, [0.0, 1.0])
        assert sample.n == 2
        assert sample.h[0] == pytest.approx(math.sqrt(2.0 / math.pi), rel=1e-12)


class TestPositivity:
    def test_three_third(self):
        assert positivity(hs(3.0, 1.0 / 3.0)) is True

    def test_all_ones_strict(self):
        assert positivity(hs(*([1.0] * 7))) is False

    def test_below(self):
        assert positivity(hs(0.5, 0.5)) is False

    def test_infinite_entry_forces_true(self):
        assert positivity(hs(0.0, 0.0, math.inf)) is True

    def test_all_zero(self):
        assert positivity(hs(0.0, 0.0)) is False


class TestFitTheta:
    def test_closed_form_half(self):
        # stationary point of 2/(1+2t) = (2/3)/(1-2t/3) is exactly 1/2
        res = fit_theta(hs(3.0, 1.0 / 3.0), upper=1.0)
        assert res.theta_hat_hi == pytest.approx(0.5, abs=1e-9)
        assert res.theta_hat_lo == res.theta_hat_hi
        assert res.positive is True
        assert res.grad_at_zero == pytest.approx(3.0 + 1.0 / 3.0 - 2.0, rel=1e-15)

    def test_monotone_likelihood_hits_upper(self):
        for upper in (1.0, 1.7):
            res = fit_theta(hs(2.0, 2.0), upper=upper)
            assert res.theta_hat_hi == upper
            assert res.lambda_ == pytest.approx(4.0 * math.log(1.0 + upper), rel=1e-12)

    def test_single_point(self):
        res = fit_theta(hs(5.0), upper=1.0)
        assert res.theta_hat_hi == 1.0
        assert res.lambda_ == pytest.approx(2.0 * math.log(5.0), rel=1e-12)

    def test_negative_gradient_returns_zero(self):
        res = fit_theta(hs(0.5, 0.9))
        assert res.theta_hat_lo == res.theta_hat_hi == 0.0
        assert res.positive is False
        assert res.lambda_ == 0.0

    def test_flat_likelihood_interval(self):
        res = fit_theta(hs(1.0, 1.0, 1.0), upper=1.0)
        assert (res.theta_hat_lo, res.theta_hat_hi) == (0.0, 1.0)
        assert res.positive is True
        assert res.lambda_ == 0.0
        assert res.grad_at_zero == 0.0

    def test_stationarity_at_interior_solution(self):
        rng = np.random.default_rng(3)
        pair = get_pair("gauss_cauchy")
        x = pair.sample_f0(rng, 400)
        sample = ratio_sample(pair, x)
        while not positivity(sample):
            sample = ratio_sample(pair, pair.sample_f0(rng, 400))
        res = fit_theta(sample, upper=1.0)
        if 0.0 < res.theta_hat_hi < 1.0:
            z = sample.h - 1.0
            grad = math.fsum((z / (1.0 + res.theta_hat_hi * z)).tolist())
            assert abs(grad) < 1e-10 * sample.n

    def test_extended_upper_bound(self):
        pair = get_pair("gauss_cauchy")
        upper = theta_bounds(pair).theta_max
        # ratios bounded below by h(1) keep every theta < theta_max feasible
        res = fit_theta(hs(2.0, 0.9, 3.0), upper=upper)
        assert 0.0 < res.theta_hat_hi <= upper

    def test_near_pole_feasibility(self):
        # smallest ratio 0.2 puts the feasibility pole at 1.25 < upper
        res = fit_theta(hs(0.2, 30.0), upper=2.0)
        assert res.positive
        assert res.theta_hat_hi < 1.25
        z = np.array([0.2, 30.0]) - 1.0
        assert np.all(1.0 + res.theta_hat_hi * z > 0.0)

    def test_bad_upper(self):
        with pytest.raises(RangeError):
            fit_theta(hs(2.0), upper=0.0)

    @settings(max_examples=60, deadline=None)
    @given(
        st.lists(
            st.floats(0.01, 40.0).filter(lambda v: abs(v - 1.0) > 1e-6),
            min_size=1,
            max_size=25,
        )
    )
    def test_positivity_matches_fit(self, values):
        sample = hs(*values)
        assert positivity(sample) == fit_theta(sample, upper=1.0).positive


class TestUnequalSupportFit:
    def test_bernoulli_closed_form(self):
        res = fit_theta(hs(0.0, 1.0, math.inf, math.inf, 1.0), upper=1.0)
        assert res.theta_hat_hi == pytest.approx(2.0 / 3.0, rel=1e-15)
        assert res.positive is True
        assert res.lambda_ == math.inf

    def test_all_lower_support(self):
        res = fit_theta(hs(0.0, 1.0, 0.0), upper=1.0)
        assert res.theta_hat_hi == 0.0
        assert res.positive is False
        assert res.grad_at_zero == -2.0

    def test_flat_middle_only(self):
        res = fit_theta(hs(1.0, 1.0), upper=1.0)
        assert (res.theta_hat_lo, res.theta_hat_hi) == (0.0, 1.0)
        assert res.positive is True

    def test_shifted_uniform_positivity_rate(self):
        # P(theta_hat > 0 under the null) = 2^-n for the shifted pair:
        # positive exactly when no observation lands in the lower half
        pair = get_pair("uniform_shift")
        rng = np.random.default_rng(5)
        n, reps = 4, 40000
        hits = 0
        x = pair.sample_f0(rng, (reps, n))
        for row in x:
            if fit_theta(ratio_sample(pair, row), upper=1.0).positive:
                hits += 1
        rate = hits / reps
        se = math.sqrt(2.0**-n * (1 - 2.0**-n) / reps)
        assert abs(rate - 2.0**-n) < 4.0 * se


class TestLrStatistic:
    def test_plug_in(self):
        assert lr_statistic(hs(3.0, 1.0 / 3.0), 0.5) == pytest.approx(
            2.0 * math.log(4.0 / 3.0), rel=1e-14
        )

    def test_zero_theta(self):
        assert lr_statistic(hs(3.0, 0.2), 0.0) == 0.0

    def test_infeasible_raises(self):
        with pytest.raises(RangeError):
            lr_statistic(hs(1.0 / 3.0, 3.0), 2.0)

    def test_permutation_invariance_exact(self):
        rng = np.random.default_rng(9)
        vals = rng.lognormal(size=50)
        lam1 = lr_statistic(hs(*vals), 0.3)
        lam2 = lr_statistic(hs(*np.random.default_rng(1).permutation(vals)), 0.3)
        assert lam1 == lam2

    def test_fit_lambda_nonnegative(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            vals = rng.lognormal(sigma=1.5, size=30)
            res = fit_theta(hs(*vals), upper=1.0)
            assert res.lambda_ >= 0.0


class TestApproxStats:
    def test_plug_in(self):
        out = approx_stats(hs(3.0, 1.0 / 3.0))
        assert out["r"] == pytest.approx(2.0 / 3.0, rel=1e-14)
        assert out["lambda_tilde"] == pytest.approx(
            -4.0 / 3.0 + 2.0 * math.log(3.0), rel=1e-12
        )
        assert out["wald"] == out["rao"] == out["r"]

    def test_small_r_quadratic(self):
        # lambda_tilde ~ r^2 + (2/3) r^3 + ... for small r
        out = approx_stats(hs(1.0 + 1e-3, 1.0 - 0.9995e-3))
        r = out["r"]
        assert 0.0 < r < 1e-3
        assert out["lambda_tilde"] == pytest.approx(r * r, rel=1e-3)

    def test_r_above_one_sentinel(self):
        out = approx_stats(hs(2.0, 1.5))
        assert out["r"] == pytest.approx(1.5, rel=1e-14)
        assert out["lambda_tilde"] == math.inf

    def test_no_positive_excess_raises(self):
        with pytest.raises(DomainError):
            approx_stats(hs(0.5, 0.6))


class TestActivityRates:
    def test_plug_in(self):
        out = activity_rates(hs(3.0, 1.0 / 3.0), 0.5)
        assert out.rates == pytest.approx([0.75, 0.25], rel=1e-14)
        assert out.max_rate == pytest.approx(0.75)
        assert out.min_fdr == pytest.approx(0.25)

    def test_zero_theta(self):
        out = activity_rates(hs(3.0, 0.5), 0.0)
        assert np.all(out.rates == 0.0)
        assert out.min_fdr == 1.0

    def test_unit_theta(self):
        out = activity_rates(hs(3.0, 0.5), 1.0)
        assert out.rates == pytest.approx([1.0, 1.0])

    def test_infinite_ratio(self):
        out = activity_rates(hs(math.inf, 1.0), 0.25)
        assert out.rates == pytest.approx([1.0, 0.25])

    def test_infeasible(self):
        with pytest.raises(RangeError):
            activity_rates(hs(0.1, 3.0), 1.5)

    def test_max_rate_tracks_r(self):
        # given positivity the largest rate approximates the R statistic
        pair = get_pair("gauss_cauchy")
        rng = np.random.default_rng(33)
        gaps = []
        while len(gaps) < 30:
            sample = ratio_sample(pair, pair.sample_f0(rng, 20000))
            if not positivity(sample):
                continue
            res = fit_theta(sample, upper=1.0)
            rates = activity_rates(sample, res.theta_hat_hi)
            gaps.append(abs(rates.max_rate - res.r_stat))
        assert np.median(gaps) < 0.05


class TestBartlett:
    def test_constant(self):
        assert bartlett_factor([1.0, 1.0, 1.0]) == 1.0

    def test_mean_of_limit_draws(self):
        # the limit law has unit mean; quantile-transform uniforms
        rng = np.random.default_rng(123)
        draws = g_quantile(rng.uniform(size=100000))
        assert bartlett_factor(draws) == pytest.approx(1.0, abs=0.02)

    def test_empty(self):
        with pytest.raises(InputError):
            bartlett_factor([])
