"""Checks for stable-law numerics: tail constants, negativity
probabilities, the maximally skew Cauchy, and the boundary LR law."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from mixtail import stable_laws as sl
from mixtail.errors import DomainError, RangeError

# ---------------------------------------------------------------------------
# frozen oracle values
#
# Skew Cauchy pdf/cdf: 40-digit mpmath tanh-sinh quadrature of the
# defining integrals, split at t in {1, 5, 15, 30, 60}.
# G cumulants: exact Fraction arithmetic on the multinomial expansion of
# E[(-2U - 2 log(1-U))^k]; moments (1, 10/3, 56/3, 6524/45).
# Taylor check: 40-digit bisection inversion of the quantile, evaluated
# on the implementation's default 599-point grid.
# ---------------------------------------------------------------------------

SC_PDF = {
    (0.0, 1.0): 0.26224012637535166,
    (2.0, 1.0): 0.095524226133477159,
    (-2.0, 1.0): 0.0065076368220751102,
    (10.0, 0.5): 0.0050983958225143916,
}
SC_CDF = {
    (5.0, 1.0): 0.85880422708086209,
    (30.0, 1.0): 0.97740914508934964,
    (0.0, -0.25): 0.5298955502936812,
}
SC_BELOW_ZERO_BETA1 = 0.36523870151237480
SC_BELOW_ZERO_BETA05 = 0.43751148385908788
G_CUMULANTS = (1.0, 7.0 / 3.0, 32.0 / 3.0, 3194.0 / 45.0)
TAYLOR_DEFAULT_GRID_MAX = 0.0109331543


# ---------------------------------------------------------------------------
# tail constant and characteristic function
# ---------------------------------------------------------------------------


def test_c_alpha_known_values():
    assert sl.c_alpha(1.0) == pytest.approx(1.0 / math.pi, rel=1e-14)
    assert sl.c_alpha(2.0) == pytest.approx(0.0, abs=1e-16)
    closed = math.gamma(1.5) * math.sin(3.0 * math.pi / 4.0) / math.pi
    assert sl.c_alpha(1.5) == pytest.approx(closed, rel=1e-14)
    assert sl.c_alpha(1.5) == pytest.approx(0.19947, abs=5e-6)


@pytest.mark.parametrize("alpha", [0.0, -1.0, 2.5, math.inf])
def test_c_alpha_rejects_bad_index(alpha):
    with pytest.raises(RangeError):
        sl.c_alpha(alpha)


def test_stable_spec_validates():
    spec = sl.StableSpec(alpha=1.5, beta=-0.5)
    assert (spec.alpha, spec.beta) == (1.5, -0.5)
    with pytest.raises(RangeError):
        sl.StableSpec(alpha=2.2, beta=0.0)
    with pytest.raises(RangeError):
        sl.StableSpec(alpha=1.0, beta=1.2)


def test_log_chf_branches():
    t = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
    # alpha = 2: Gaussian component, beta immaterial
    assert np.allclose(sl.stable_log_chf(t, 2.0, 0.7), -(t * t))
    # alpha = 1: log-corrected linear branch
    got = sl.stable_log_chf(2.0, 1.0, 1.0)
    want = -2.0 * (1.0 + 2j * math.log(2.0) / math.pi)
    assert got == pytest.approx(want, rel=1e-14)
    assert sl.stable_log_chf(0.0, 1.0, 1.0) == 0.0
    # generic branch
    got = sl.stable_log_chf(-3.0, 1.5, 0.5)
    want = -(3.0**1.5) * (1.0 + 0.5j * math.tan(0.75 * math.pi))
    assert got == pytest.approx(want, rel=1e-14)


@given(
    t=st.floats(-50.0, 50.0),
    alpha=st.floats(0.1, 2.0),
    beta=st.floats(-1.0, 1.0),
)
def test_log_chf_is_hermitian(t, alpha, beta):
    # psi(-t) = conj(psi(t)) so the density is real
    a = sl.stable_log_chf(t, alpha, beta)
    b = sl.stable_log_chf(-t, alpha, beta)
    assert b == pytest.approx(np.conj(a), rel=1e-12, abs=1e-12)


# ---------------------------------------------------------------------------
# negativity probabilities
# ---------------------------------------------------------------------------


def test_negativity_closed_form_values():
    assert sl.stable_negativity(1.5, 1.0) == pytest.approx(2.0 / 3.0, rel=1e-13)
    assert sl.stable_negativity(1.7, 0.0) == 0.5
    assert sl.stable_negativity(2.0, 0.9) == 0.5


def test_negativity_alpha_one_uses_skew_cauchy():
    got = sl.stable_negativity(1.0, 1.0)
    assert got == pytest.approx(SC_BELOW_ZERO_BETA1, abs=1e-9)
    assert got == pytest.approx(0.3652, abs=5e-4)
    assert sl.stable_negativity(1.0, 0.5) == pytest.approx(
        SC_BELOW_ZERO_BETA05, abs=1e-9
    )


def test_negativity_rejects_out_of_range():
    with pytest.raises(RangeError):
        sl.stable_negativity(2.1, 0.5)
    with pytest.raises(RangeError):
        sl.stable_negativity(1.5, -1.5)


@given(alpha=st.floats(1.01, 1.99), beta=st.floats(-1.0, 1.0))
def test_negativity_reflection_and_bounds(alpha, beta):
    p = sl.stable_negativity(alpha, beta)
    q = sl.stable_negativity(alpha, -beta)
    assert 0.0 < p < 1.0
    assert p + q == pytest.approx(1.0, abs=1e-12)


def test_negativity_increases_with_beta_above_alpha_one():
    # heavier right tail pulls the mode left of the (zero) mean
    vals = [sl.stable_negativity(1.5, b) for b in np.linspace(-1.0, 1.0, 9)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(2.0 / 3.0, rel=1e-13)


# ---------------------------------------------------------------------------
# skew Cauchy density
# ---------------------------------------------------------------------------


def test_pdf_matches_mpmath_oracle():
    for (x, beta), want in SC_PDF.items():
        assert sl.skew_cauchy_pdf(x, beta) == pytest.approx(want, abs=1e-10)


def test_pdf_beta_zero_is_cauchy():
    for x in [0.0, 0.3, -2.0, 7.0]:
        want = 1.0 / (math.pi * (1.0 + x * x))
        assert sl.skew_cauchy_pdf(x, 0.0) == pytest.approx(want, abs=1e-10)


def test_pdf_vectorizes_and_validates():
    xs = np.array([-1.0, 0.0, 1.0])
    out = sl.skew_cauchy_pdf(xs, 1.0)
    assert out.shape == (3,)
    assert np.all(out > 0.0)
    with pytest.raises(DomainError):
        sl.skew_cauchy_pdf(math.nan, 1.0)
    with pytest.raises(RangeError):
        sl.skew_cauchy_pdf(0.0, 1.5)


def test_pdf_right_tail_constant():
    # x^2 f(x) -> (1 + beta)/pi
    x = 100.0
    got = x * x * sl.skew_cauchy_pdf(x, 1.0)
    assert got == pytest.approx(2.0 / math.pi, rel=0.05)


def test_pdf_normalizes_including_tails():
    # body plus 1/x-substituted wings out to X = 4000, where the
    # first-order tail integrals (1 -+ beta)/(pi X) are good to ~2e-7
    # (the neglected correction is O(log X / X^2))
    beta = 1.0
    big = 4000.0
    body, e1 = quad(
        lambda v: sl.skew_cauchy_pdf(v, beta), -30.0, 30.0, limit=200, epsabs=1e-10
    )
    right, e2 = quad(
        lambda y: sl.skew_cauchy_pdf(1.0 / y, beta) / (y * y),
        1.0 / big,
        1.0 / 30.0,
        limit=200,
        epsabs=1e-9,
    )
    left, e3 = quad(
        lambda y: sl.skew_cauchy_pdf(-1.0 / y, beta) / (y * y),
        1.0 / big,
        1.0 / 30.0,
        limit=200,
        epsabs=1e-9,
    )
    tails = (1.0 + beta) / (math.pi * big) + (1.0 - beta) / (math.pi * big)
    assert e1 + e2 + e3 < 1e-7
    assert body + right + left + tails == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=25, deadline=None)
@given(x=st.floats(-30.0, 30.0), beta=st.floats(0.0, 1.0))
def test_pdf_reflection_identity(x, beta):
    # f(x; -beta) = f(-x; beta)
    a = sl.skew_cauchy_pdf(x, -beta)
    b = sl.skew_cauchy_pdf(-x, beta)
    assert a == pytest.approx(b, abs=1e-10)
    assert a >= 0.0


def test_pdf_oscillatory_branch_agrees_with_plain():
    # straddle the Fourier-rule crossover with an overlapping point
    for x in [24.9, 25.1, 40.0]:
        val = sl.skew_cauchy_pdf(x, 1.0)
        ref, err = quad(
            lambda t: math.exp(-t) * math.cos(t * x + 2.0 * t * math.log(t) / math.pi)
            if t > 0.0
            else 1.0,
            0.0,
            50.0,
            limit=3000,
            epsabs=1e-13,
            epsrel=1e-13,
        )
        assert err < 1e-10
        assert val == pytest.approx(ref / math.pi, abs=5e-10)


# ---------------------------------------------------------------------------
# skew Cauchy distribution function
# ---------------------------------------------------------------------------


def test_cdf_matches_mpmath_oracle():
    for (x, beta), want in SC_CDF.items():
        assert sl.skew_cauchy_cdf(x, beta) == pytest.approx(want, abs=1e-10)
    # the beta = 1 left tail is superexponentially thin
    assert sl.skew_cauchy_cdf(-5.0, 1.0) == pytest.approx(0.0, abs=1e-10)


def test_cdf_beta_zero_is_cauchy():
    for x in [-3.0, 0.0, 0.7, 12.0]:
        want = 0.5 + math.atan(x) / math.pi
        assert sl.skew_cauchy_cdf(x, 0.0) == pytest.approx(want, abs=1e-10)


def test_cdf_below_zero_values():
    assert sl.skew_cauchy_cdf_below_zero(1.0) == pytest.approx(
        SC_BELOW_ZERO_BETA1, abs=1e-9
    )
    assert sl.skew_cauchy_cdf_below_zero(1.0) == pytest.approx(0.3652, abs=5e-4)
    assert sl.skew_cauchy_cdf_below_zero(0.0) == pytest.approx(0.5, abs=1e-6)
    assert sl.skew_cauchy_cdf_below_zero(-1.0) == pytest.approx(
        1.0 - 0.3652, abs=5e-4
    )


def test_cdf_reflection_agrees_with_direct_integral():
    # two routes to P(X < 0) at beta = -0.25: reflection of the +0.25
    # integral, and the direct Gil-Pelaez evaluation
    via_reflection = sl.skew_cauchy_cdf_below_zero(-0.25)
    direct = sl.skew_cauchy_cdf(0.0, -0.25)
    assert via_reflection == pytest.approx(direct, abs=1e-10)
    assert direct == pytest.approx(SC_CDF[(0.0, -0.25)], abs=1e-10)


def test_cdf_monotone_and_bounded():
    # monotone up to the quadrature's absolute accuracy; the beta = 1
    # left tail is superexponentially thin, so values there are noise
    # at the 1e-15 level
    xs = np.linspace(-8.0, 40.0, 25)
    vals = [sl.skew_cauchy_cdf(float(x), 1.0) for x in xs]
    assert all(0.0 <= v <= 1.0 for v in vals)
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("beta", [0.0, 0.5, 1.0])
def test_cdf_right_tail_constant(beta):
    # x * P(X > x) -> (1 + beta)/pi, within 5% by x = 1e3
    x = 1e3
    got = x * (1.0 - sl.skew_cauchy_cdf(x, beta))
    assert got == pytest.approx((1.0 + beta) / math.pi, rel=0.05)


def test_cdf_consistent_with_pdf():
    # central difference of the cdf recovers the density
    for x, beta in [(0.0, 1.0), (3.0, 1.0), (-1.0, 0.5)]:
        h = 1e-5
        deriv = (sl.skew_cauchy_cdf(x + h, beta) - sl.skew_cauchy_cdf(x - h, beta)) / (
            2.0 * h
        )
        assert deriv == pytest.approx(sl.skew_cauchy_pdf(x, beta), rel=1e-6, abs=1e-9)


# ---------------------------------------------------------------------------
# the boundary LR limit law G
# ---------------------------------------------------------------------------


def test_g_quantile_closed_form():
    assert sl.g_quantile(0.0) == 0.0
    assert sl.g_quantile(0.5) == pytest.approx(2.0 * math.log(2.0) - 1.0, rel=1e-15)
    assert sl.g_quantile(1.0) == math.inf
    with pytest.raises(DomainError):
        sl.g_quantile(-0.1)
    with pytest.raises(DomainError):
        sl.g_quantile(1.1)


def test_g_roundtrip_quantile_then_cdf():
    u = np.linspace(0.001, 0.999, 999)
    back = sl.g_cdf(sl.g_quantile(u))
    assert np.max(np.abs(back - u)) <= 1e-10


def test_g_roundtrip_cdf_then_quantile():
    x = np.concatenate([np.logspace(-6, -1, 11), np.linspace(0.2, 30.0, 150)])
    back = sl.g_quantile(sl.g_cdf(x))
    assert np.max(np.abs(back - x)) <= 1e-8


def test_g_cdf_edges():
    assert sl.g_cdf(0.0) == 0.0
    assert sl.g_cdf(80.0) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DomainError):
        sl.g_cdf(-1.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-8, 0.999999))
def test_g_quantile_strictly_increasing(u):
    eps = max(1e-9, u * 1e-9)
    assert sl.g_quantile(min(u + eps, 0.9999999)) > sl.g_quantile(u) - 1e-18


def test_g_pdf_matches_quantile_derivative():
    # dG^{-1}/du = 2u/(1-u), so pdf = (1-u)/(2u) along the curve
    for u in [0.01, 0.3, 0.8, 0.99]:
        x = sl.g_quantile(u)
        assert sl.g_pdf(x) == pytest.approx((1.0 - u) / (2.0 * u), rel=1e-9)


def test_g_pdf_square_root_singularity():
    x = 1e-8
    assert 0.49 < math.sqrt(x) * sl.g_pdf(x) < 0.51
    with pytest.raises(DomainError):
        sl.g_pdf(0.0)


def test_g_cumulants_match_exact_rationals():
    # oracle: Fraction arithmetic on the multinomial moment expansion
    got = sl.g_cumulants(4)
    assert np.allclose(got, G_CUMULANTS, rtol=1e-9, atol=1e-9)
    assert sl.g_cumulants(2) == pytest.approx(G_CUMULANTS[:2], rel=1e-9)
    with pytest.raises(RangeError):
        sl.g_cumulants(5)


def test_taylor_check_default_grid_value():
    # frozen from the 40-digit oracle on the same 599-point grid; the
    # supremum over (0,3) is ~1.0934e-2, just above the 1e-2 mark
    got = sl.g_sqrt_logpdf_taylor_check()
    assert got == pytest.approx(TAYLOR_DEFAULT_GRID_MAX, abs=1e-6)


def test_taylor_check_below_one_percent_up_to_2_19():
    grid = np.linspace(0.01, 2.19, 219)
    assert sl.g_sqrt_logpdf_taylor_check(grid) < 0.01


def test_taylor_series_value_at_one_matches_log_density():
    series = -2.0 / 3.0 - 5.0 / 36.0 - 23.0 / 810.0 - 31.0 / 6480.0
    numeric = math.log(2.0 * sl.g_pdf(1.0))
    assert series == pytest.approx(numeric, abs=1e-3)


def test_taylor_check_vanishes_at_origin():
    assert sl.g_sqrt_logpdf_taylor_check(np.array([1e-3])) < 1e-3
    with pytest.raises(DomainError):
        sl.g_sqrt_logpdf_taylor_check(np.array([0.0, 1.0]))
