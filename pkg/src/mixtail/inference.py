"""Boundary maximum-likelihood estimation of the mixing weight.

The model is f(x; w) = (1 - w) f0(x) + w f1(x) with w restricted to
[0, upper]; all computation runs through the transformed sample
h_i = f1(X_i)/f0(X_i).  With Z_i = h_i - 1 the log likelihood
l(w) = sum log(1 + w Z_i) is strictly concave, so the maximizer is 0,
the upper bound, or the unique stationary point.

The estimate is positive exactly when the sample mean of the h_i
exceeds 1.  Both the positivity predicate and the fitter derive that
sign from the same compensated sum, so the equivalence holds bit for
bit, not just in exact arithmetic.

Flat likelihoods (every h_i = 1, possible under pairs with unequal
supports) are reported as a maximizer interval [lo, hi]; positivity is
judged by the upper endpoint, which reproduces the 2^-n boundary
accounting of the shifted-uniform pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    InputError,
    InvariantError,
    NumericError,
    RangeError,
)

__all__ = [
    "HSample",
    "FitResult",
    "ActivityRates",
    "ratio_sample",
    "positivity",
    "fit_theta",
    "lr_statistic",
    "approx_stats",
    "activity_rates",
    "bartlett_factor",
]

_MAX_NEWTON_ITERATIONS = 200

# Ratios from equal-support pairs are finite in exact arithmetic, but
# exp(log h) overflows once log f0 underflows (a 25-sigma point under a
# Gaussian f0 already does it).  Ratios are therefore clamped to
# exp(+-300) before fitting: the maximizer and the positivity sign move
# by less than one ulp, while the two statistics that do feel the tail,
# the likelihood ratio and n Zbar / Z_(n), are corrected exactly in log
# space through the clamp record below.
_LOG_RATIO_CLAMP = 300.0


@dataclass(frozen=True)
class _ClampInfo:
    """Log-space corrections for a sample with clamped large ratios.

    ``lambda_excess`` is 2 sum (log h_i - clamp) over the clamped
    entries: each contributes log(w h_i) to the log likelihood at any
    positive w, so the deficit is independent of the maximizer.
    ``r_value`` is (sum h_i - n) / (max h_i - 1) evaluated without
    forming the ratios.
    """

    lambda_excess: float
    r_value: float


@dataclass(frozen=True)
class HSample:
    """A sample of density ratios h(X_i), entries in [0, +inf]."""

    h: np.ndarray
    n: int
    clamp: "_ClampInfo | None" = None

    def __post_init__(self):
        arr = np.asarray(self.h, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise InputError("h must be a non-empty one-dimensional vector")
        if np.any(np.isnan(arr)):
            raise InputError("NaN in ratio sample")
        if np.any(arr < 0.0):
            raise InvariantError("density ratios must be nonnegative")
        object.__setattr__(self, "h", arr)
        object.__setattr__(self, "n", int(arr.size))

    @classmethod
    def from_values(cls, values) -> "HSample":
        arr = np.asarray(values, dtype=float)
        return cls(h=arr, n=arr.size)


@dataclass(frozen=True)
class FitResult:
    """Outcome of a boundary fit.

    ``theta_hat_lo == theta_hat_hi`` except for flat likelihoods, where
    the whole interval maximizes.  ``lambda_`` is the likelihood-ratio
    statistic at the upper maximizer; ``r_stat`` is the scaled-mean
    statistic n Zbar / Z_(n) (NaN when the largest centred ratio is not
    positive), and the Wald and Rao statistics coincide with it.
    """

    theta_hat_lo: float
    theta_hat_hi: float
    lambda_: float
    r_stat: float
    wald: float
    rao: float
    positive: bool
    iterations: int
    grad_at_zero: float

    def __post_init__(self):
        if self.theta_hat_lo > self.theta_hat_hi:
            raise InvariantError("maximizer interval reversed")
        if self.positive != (self.theta_hat_hi > 0.0):
            raise InvariantError("positivity flag inconsistent with interval")


@dataclass(frozen=True)
class ActivityRates:
    """Per-unit fitted activity rates and their extremes."""

    rates: np.ndarray
    max_rate: float
    min_fdr: float


def ratio_sample(pair, x) -> HSample:
    """Build an HSample from raw observations under a generator pair.

    For equal-support pairs the log ratio is finite and extreme values
    are clamped (see :data:`_LOG_RATIO_CLAMP`); pairs with unequal
    supports keep their genuine zero and infinite ratios.
    """
    from scipy.special import logsumexp

    from .generators import log_density_ratio

    logh = np.atleast_1d(log_density_ratio(pair, np.asarray(x, dtype=float)))
    if not pair.support_flags.equal_supports or not np.all(np.isfinite(logh)):
        return HSample.from_values(np.exp(logh))
    over = logh > _LOG_RATIO_CLAMP
    clamp = None
    if np.any(over):
        excess = 2.0 * float(np.sum(logh[over] - _LOG_RATIO_CLAMP))
        # r = (e^S - n) / (e^M - 1) with M >= 300: the -n and -1 are
        # below one ulp of the leading terms
        s = float(logsumexp(logh))
        m = float(np.max(logh))
        clamp = _ClampInfo(lambda_excess=excess, r_value=math.exp(s - m))
    h = np.exp(np.clip(logh, -_LOG_RATIO_CLAMP, _LOG_RATIO_CLAMP))
    return HSample(h=h, n=h.size, clamp=clamp)


def _grad_at_zero(sample: HSample) -> float:
    # single source of truth for the sign of l'(0) = sum(h) - n
    return math.fsum(sample.h.tolist()) - sample.n


def positivity(sample: HSample) -> bool:
    """True when the fitted mixing weight is positive: mean(h) > 1."""
    if np.any(np.isinf(sample.h)):
        return True
    # vectorized sum decides unless within its error margin of the
    # threshold, in which case the compensated sum settles the sign
    s = float(np.sum(sample.h))
    n = float(sample.n)
    if abs(s - n) > 1e-11 * (s + n):
        return s > n
    return _grad_at_zero(sample) > 0.0


def _r_stat(z: np.ndarray, grad0: float) -> float:
    zmax = float(np.max(z))
    if zmax <= 0.0:
        return math.nan
    return grad0 / zmax


def _fit_unequal(sample: HSample, upper: float) -> FitResult:
    """Maximizer when some ratios are 0 or +inf (unequal supports).

    With n0 zeros, k infinities and the remaining ratios finite, the
    likelihood splits off n0 log(1-w) + k log(w); when every finite
    ratio equals 1 (the shifted-uniform case) the middle block is flat
    and the maximizer is the Bernoulli solution k/(n0+k), clipped to
    the feasible range.
    """
    h = sample.h
    inf_mask = np.isinf(h)
    zero_mask = h == 0.0
    k = int(np.count_nonzero(inf_mask))
    n0 = int(np.count_nonzero(zero_mask))
    finite = h[~inf_mask & ~zero_mask]
    # with unit finite ratios, l'(0) = sum(z) is -n0 unless some ratio
    # is infinite
    grad0 = math.inf if k else float(-n0)

    if not np.all(finite == 1.0):
        raise NumericError(
            "unequal-support fit with non-unit finite ratios is not supported"
        )
    if k == 0 and n0 == 0:
        # flat likelihood over the whole range
        return FitResult(0.0, upper, 0.0, math.nan, math.nan, math.nan,
                         True, 0, 0.0)
    if k == 0:
        return FitResult(0.0, 0.0, 0.0, math.nan, math.nan, math.nan,
                         False, 0, grad0)
    theta = min(k / (n0 + k), upper)
    return FitResult(theta, theta, math.inf, math.nan, math.nan, math.nan,
                     True, 0, grad0)


def fit_theta(sample: HSample, upper: float = 1.0) -> FitResult:
    """Maximize the mixture log likelihood over [0, upper].

    ``upper`` is 1 for the model as stated, or the pair's extended
    upper endpoint.  Concavity reduces the search to a sign check of
    l' at the endpoints plus a safeguarded Newton iteration on l'
    (bracketing bisection fallback), converged to |l'| < 1e-10 n.
    """
    if not (upper > 0.0) or not math.isfinite(upper):
        raise RangeError(f"upper bound must be positive finite, got {upper!r}")
    if np.any(np.isinf(sample.h)) or np.any(sample.h == 0.0):
        return _fit_unequal(sample, upper)

    h = sample.h
    n = sample.n
    z = h - 1.0
    grad0 = _grad_at_zero(sample)
    r = sample.clamp.r_value if sample.clamp else _r_stat(z, grad0)

    if np.all(z == 0.0):
        # flat likelihood: every point of [0, upper] maximizes
        return FitResult(0.0, upper, 0.0, r, r, r, True, 0, grad0)
    if grad0 <= 0.0:
        return FitResult(0.0, 0.0, 0.0, r, r, r, False, 0, grad0)

    def grad(theta: float) -> float:
        # interior gradients only steer the bracketed iteration; the
        # boundary signs that decide positivity come from grad0 above
        return float(np.sum(z / (1.0 + theta * z)))

    zmin = float(np.min(z))
    # stay strictly inside the feasibility region 1 + theta z > 0
    hi = upper if zmin >= 0.0 else min(upper, (1.0 - 1e-12) / (-zmin))
    if hi >= upper and grad(upper) >= 0.0:
        lam = lr_statistic(sample, upper)
        return FitResult(upper, upper, lam, r, r, r, True, 0, grad0)

    lo, g_lo = 0.0, grad0
    g_hi = grad(hi)
    while g_hi >= 0.0:
        # pushed against the feasibility pole; tighten toward it
        hi = hi + 0.5 * ((1.0 / -zmin) - hi) if zmin < 0.0 else hi
        g_hi = grad(hi)
        if not math.isfinite(g_hi):
            raise NumericError("gradient overflow near feasibility boundary")

    theta = 0.5 * (lo + hi)
    tol = 1e-10 * n
    iterations = 0
    while True:
        iterations += 1
        if iterations > _MAX_NEWTON_ITERATIONS:
            raise NumericError("theta fit failed to converge")
        g = grad(theta)
        if abs(g) < tol:
            break
        if g > 0.0:
            lo, g_lo = theta, g
        else:
            hi, g_hi = theta, g
        curv = float(np.sum(z * z / np.square(1.0 + theta * z)))
        step = theta + g / curv  # l'' = -curv
        if lo < step < hi:
            theta = step
        else:
            theta = 0.5 * (lo + hi)
        if hi - lo < 1e-15 * max(1.0, hi):
            break

    lam = lr_statistic(sample, theta)
    return FitResult(theta, theta, lam, r, r, r, True, iterations, grad0)


def lr_statistic(sample: HSample, theta_hat: float) -> float:
    """Likelihood-ratio statistic 2 sum log(1 + theta (h_i - 1))."""
    if theta_hat == 0.0:
        return 0.0
    h = sample.h
    with np.errstate(invalid="ignore"):
        terms = 1.0 + theta_hat * (h - 1.0)
    if np.any(np.isinf(h)) and theta_hat > 0.0:
        terms = np.where(np.isinf(h), np.inf, terms)
    if np.any(terms <= 0.0):
        raise RangeError(f"theta={theta_hat!r} infeasible for this sample")
    lam = 2.0 * float(np.sum(np.log(terms)))
    if sample.clamp is not None and theta_hat > 0.0:
        lam += sample.clamp.lambda_excess
    return max(lam, 0.0) if lam > -1e-9 else lam


def approx_stats(sample: HSample) -> dict:
    """Local-approximation statistics for a conditioned sample.

    r = n Zbar / Z_(n); the approximate likelihood-ratio statistic is
    -2r - 2 log(1-r) for r < 1 and +inf past the approximation's range
    (such replicates are retained and counted, not discarded).  The
    Wald and Rao statistics both reduce to r.
    """
    z = sample.h - 1.0
    zmax = float(np.max(z))
    if zmax <= 0.0:
        raise DomainError("approx_stats requires a positive largest centred ratio")
    r = sample.clamp.r_value if sample.clamp else _grad_at_zero(sample) / zmax
    if r < 1.0:
        lam = -2.0 * r - 2.0 * math.log1p(-r)
    else:
        lam = math.inf
    return {"r": r, "lambda_tilde": lam, "wald": r, "rao": r}


def activity_rates(sample: HSample, theta_hat: float) -> ActivityRates:
    """Fitted per-unit activity rates theta h_i / (1 - theta + theta h_i)."""
    h = sample.h
    if theta_hat == 0.0:
        rates = np.zeros_like(h)
        return ActivityRates(rates=rates, max_rate=0.0, min_fdr=1.0)
    with np.errstate(invalid="ignore"):
        denom = 1.0 - theta_hat + theta_hat * h
    finite = np.isfinite(h)
    if np.any(denom[finite] <= 0.0):
        raise RangeError(f"theta={theta_hat!r} infeasible for this sample")
    with np.errstate(invalid="ignore"):
        rates = np.where(finite, theta_hat * h / denom, 1.0)
    max_rate = float(np.max(rates))
    return ActivityRates(rates=rates, max_rate=max_rate, min_fdr=1.0 - max_rate)


def bartlett_factor(lambdas) -> float:
    """Sample mean of conditioned likelihood-ratio statistics."""
    arr = np.asarray(lambdas, dtype=float)
    if arr.size == 0:
        raise InputError("empty likelihood-ratio sample")
    return float(np.mean(arr))
