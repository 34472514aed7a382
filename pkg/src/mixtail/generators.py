"""Two-component generator pairs: densities, ratios, samplers, and the
extended mixing-weight range.

A pair (f0, f1) defines the one-parameter family
f(x; w) = (1 - w) f0(x) + w f1(x), which stays a probability density
for w in an interval [w_min, w_max] that is wider than [0, 1] whenever
the ratio f1/f0 is bounded away from 0 or infinity on one side.  All
ratio work is done on the log scale; the factor exp(x^2/2) appearing in
Gaussian-null ratios overflows beyond |x| ~ 38 and is never formed.

Each catalog pair carries the slow-variation parameters of the null
tail of its density ratio, in the parametrisation of
:mod:`mixtail.asymptotics`; the ``mu`` field of that record refers to
the centred ratio h(X) - 1 and is zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.stats import t as student_t

from .asymptotics import SlowVariationParams
from .errors import (
    DegenerateModelError,
    DomainError,
    NumericError,
    RangeError,
    UnknownPairError,
)

__all__ = [
    "SupportFlags",
    "GeneratorPair",
    "ThetaBounds",
    "log_density_ratio",
    "mixture_log_density",
    "theta_bounds",
    "convolve_density",
    "powerphi_boundary_limit",
    "builtin_pairs",
    "get_pair",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True, slots=True)
class SupportFlags:
    """Support relationship between the two generators."""

    equal_supports: bool = True


@dataclass(frozen=True, eq=False)
class GeneratorPair:
    """A named pair of generator densities with samplers.

    ``log_f0``/``log_f1`` accept scalars or arrays and return log
    densities (-inf outside the support); ``sample_f0``/``sample_f1``
    take (rng, size).  ``support0``/``support1`` bound the supports for
    quadrature; ``tail_model`` holds the slow-variation parameters of
    the null ratio tail when the ratio is in the heavy-tailed class.
    """

    name: str
    log_f0: Callable
    log_f1: Callable
    sample_f0: Callable
    sample_f1: Callable
    tail_model: Optional[SlowVariationParams] = None
    support_flags: SupportFlags = field(default_factory=SupportFlags)
    support0: tuple = (-np.inf, np.inf)
    support1: tuple = (-np.inf, np.inf)


@dataclass(frozen=True, slots=True)
class ThetaBounds:
    """Extended mixing-weight range [theta_min, theta_max].

    ``argmin_x`` is the point where the ratio is largest on the scan
    grid (the lower endpoint is approached there); ``argmax_x`` is the
    ratio's minimiser, where the upper-endpoint density touches zero.
    """

    theta_min: float
    theta_max: float
    argmin_x: float
    argmax_x: float


def log_density_ratio(pair: GeneratorPair, x):
    """log of f1/f0 at ``x``; +-inf where exactly one density vanishes.

    Raises a domain error if both densities vanish anywhere in ``x``.
    """
    xs = np.asarray(x, dtype=float)
    l0 = np.asarray(pair.log_f0(xs), dtype=float)
    l1 = np.asarray(pair.log_f1(xs), dtype=float)
    both_zero = np.isneginf(l0) & np.isneginf(l1)
    if np.any(both_zero):
        bad = np.atleast_1d(xs)[np.atleast_1d(both_zero)][0]
        raise DomainError(f"both densities vanish at x={bad!r}")
    with np.errstate(invalid="ignore"):
        out = l1 - l0
    # one infinite log-density: the ratio is determined by that side
    out = np.where(np.isneginf(l0) & ~np.isneginf(l1), np.inf, out)
    out = np.where(np.isneginf(l1) & ~np.isneginf(l0), -np.inf, out)
    return float(out) if xs.ndim == 0 else out


def mixture_log_density(pair: GeneratorPair, theta: float, x):
    """log[(1-theta) f0 + theta f1] via log-sum-exp on the larger term.

    ``theta`` may lie anywhere in the pair's extended range; outside it
    the mixture is negative somewhere and a range error is raised.  For
    pairs with unequal supports the range is just [0, 1].
    """
    if pair.support_flags.equal_supports:
        bounds = theta_bounds(pair)
        t_lo, t_hi = bounds.theta_min, bounds.theta_max
    else:
        t_lo, t_hi = 0.0, 1.0
    if not (t_lo <= theta <= t_hi):
        raise RangeError(f"theta={theta!r} outside [{t_lo!r}, {t_hi!r}]")
    xs = np.asarray(x, dtype=float)
    l0 = np.asarray(pair.log_f0(xs), dtype=float)
    l1 = np.asarray(pair.log_f1(xs), dtype=float)
    m = np.maximum(l0, l1)
    m = np.where(np.isneginf(m), 0.0, m)
    with np.errstate(invalid="ignore"):
        inner = (1.0 - theta) * np.exp(l0 - m) + theta * np.exp(l1 - m)
    inner = np.where(np.isneginf(l0) & np.isneginf(l1), 0.0, inner)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = m + np.log(np.maximum(inner, 0.0))
    return float(out) if xs.ndim == 0 else out


# Scan grid for the extended range: the ratio extrema of every catalog
# pair sit at |x| = O(1), and beyond |x| ~ 38 the Gaussian-null ratios
# exceed the overflow threshold anyway.
_SCAN_HALF_WIDTH = 50.0
_SCAN_POINTS = 200001
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_min(fn: Callable[[float], float], lo: float, hi: float) -> float:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > 1e-10:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


@lru_cache(maxsize=64)
def theta_bounds(pair: GeneratorPair) -> ThetaBounds:
    """Extended range of the mixing weight, by grid scan of the log
    ratio plus golden-section refinement of the interior minimum."""
    if not pair.support_flags.equal_supports:
        raise DomainError(f"theta_bounds requires equal supports ({pair.name})")
    grid = np.linspace(-_SCAN_HALF_WIDTH, _SCAN_HALF_WIDTH, _SCAN_POINTS)
    logh = log_density_ratio(pair, grid)
    if np.max(np.abs(logh)) < 1e-12:
        raise DegenerateModelError(f"generators of {pair.name!r} are identical")

    def logh_at(xv: float) -> float:
        return float(log_density_ratio(pair, xv))

    # upper endpoint: smallest ratio (interior minimum, refined)
    i_min = int(np.argmin(logh))
    lo = grid[max(i_min - 1, 0)]
    hi = grid[min(i_min + 1, len(grid) - 1)]
    x_star = _golden_min(logh_at, lo, hi)
    h_min = math.exp(logh_at(x_star))
    theta_max = 1.0 / (1.0 - h_min) if h_min < 1.0 else math.inf

    # lower endpoint: largest ratio; the catalog ratios are unbounded,
    # so the supremum of -1/(h-1) over {h>1} is zero, approached far out
    i_max = int(np.argmax(logh))
    if i_max in (0, len(grid) - 1) or logh[i_max] > 100.0:
        theta_min = 0.0
        x_top = float(grid[i_max])
    else:
        x_top = _golden_min(
            lambda xv: -logh_at(xv), grid[i_max - 1], grid[i_max + 1]
        )
        h_top = math.exp(logh_at(x_top))
        theta_min = -1.0 / (h_top - 1.0) if h_top > 1.0 else 0.0
    return ThetaBounds(
        theta_min=theta_min,
        theta_max=theta_max,
        argmin_x=x_top,
        argmax_x=x_star,
    )


def convolve_density(signal_density: Callable[[float], float], y: float) -> float:
    """Gaussian blur of a symmetric signal density at ``y``:
    integral of phi(y - x) * signal_density(x).

    Relative accuracy is better than 1e-8 for |y| <= 40; the quadrature
    window covers both the Gaussian bump at x = y and the signal body.
    """
    y = float(y)
    if not math.isfinite(y):
        raise DomainError("convolve_density requires finite y")

    def integrand(xv: float) -> float:
        return (
            math.exp(-0.5 * (y - xv) ** 2 - _LOG_SQRT_2PI) * signal_density(xv)
        )

    lo = min(-45.0, y - 45.0)
    hi = max(45.0, y + 45.0)
    pts = [p for p in (0.0, y) if lo < p < hi]
    val, err = quad(integrand, lo, hi, points=pts, limit=400, epsabs=1e-300,
                    epsrel=1e-11)
    if not math.isfinite(val) or (val > 0 and err / val > 1e-8):
        raise NumericError(
            f"convolution quadrature failed at y={y!r}: value {val!r}, error {err!r}"
        )
    return val


def powerphi_boundary_limit(nu: float) -> float:
    """Limiting boundary-activity probability for the power-weighted
    Gaussian alternative: 1/2 in the normal-attraction range nu >= -1/2,
    and 1 + nu for -1 < nu < -1/2."""
    if not -1.0 < nu:
        raise RangeError(f"power exponent must exceed -1, got {nu!r}")
    return 0.5 if nu >= -0.5 else 1.0 + nu


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------


def _log_phi(x):
    return -0.5 * x * x - _LOG_SQRT_2PI


def _gauss_cauchy() -> GeneratorPair:
    return GeneratorPair(
        name="gauss_cauchy",
        log_f0=_log_phi,
        log_f1=lambda x: -math.log(math.pi) - np.log1p(np.square(x)),
        sample_f0=lambda rng, size=None: rng.standard_normal(size),
        sample_f1=lambda rng, size=None: rng.standard_cauchy(size),
        tail_model=SlowVariationParams(beta0=2.0, beta1=0.0, delta=0.5, gamma=0.0),
    )


def _gauss_laplace() -> GeneratorPair:
    return GeneratorPair(
        name="gauss_laplace",
        log_f0=_log_phi,
        log_f1=lambda x: -np.abs(x) - math.log(2.0),
        sample_f0=lambda rng, size=None: rng.standard_normal(size),
        sample_f1=lambda rng, size=None: rng.laplace(size=size),
        tail_model=SlowVariationParams(
            beta0=8.0 / math.pi**2, beta1=2.0, delta=-0.5, gamma=0.5
        ),
    )


def _gauss_t(nu: float, sigma: float) -> GeneratorPair:
    if not (nu > 0.0 and sigma > 0.0):
        raise RangeError(f"need nu > 0 and sigma > 0, got ({nu!r}, {sigma!r})")
    # f1(x) ~ C x^{-nu-1} with C the scaled Student tail constant
    tail_c = (
        math.gamma((nu + 1.0) / 2.0)
        * nu ** (nu / 2.0)
        * sigma**nu
        / (math.sqrt(math.pi) * math.gamma(nu / 2.0))
    )
    beta0 = 2.0 * (math.pi * tail_c) ** (-2.0 / (nu + 2.0))
    return GeneratorPair(
        name=f"gauss_t:nu={nu:g},sigma={sigma:g}",
        log_f0=_log_phi,
        log_f1=lambda x: student_t.logpdf(x, df=nu, scale=sigma),
        sample_f0=lambda rng, size=None: rng.standard_normal(size),
        sample_f1=lambda rng, size=None: rng.standard_t(nu, size) * sigma,
        tail_model=SlowVariationParams(
            beta0=beta0, beta1=0.0, delta=nu / 2.0, gamma=0.0
        ),
    )


def _gauss_powerphi(nu: float) -> GeneratorPair:
    if not (-1.0 < nu and nu != 0.0):
        raise RangeError(f"power exponent must lie in (-1, inf)\\{{0}}, got {nu!r}")
    log_z = (nu / 2.0) * math.log(2.0) + math.lgamma((nu + 1.0) / 2.0) - 0.5 * math.log(
        math.pi
    )

    def log_f1(x):
        ax = np.abs(np.asarray(x, dtype=float))
        with np.errstate(divide="ignore"):
            out = nu * np.log(ax) + _log_phi(ax) - log_z
        return out[()] if out.ndim == 0 else out

    def sample_f1(rng, size=None):
        g = rng.gamma((nu + 1.0) / 2.0, size=size)
        sign = rng.integers(0, 2, size=size) * 2 - 1
        return sign * np.sqrt(2.0 * g)

    # moments of the ratio are all finite for nu > 0 (normal domain of
    # attraction), so there is no slow-variation tail record
    return GeneratorPair(
        name=f"gauss_powerphi:nu={nu:g}",
        log_f0=_log_phi,
        log_f1=log_f1,
        sample_f0=lambda rng, size=None: rng.standard_normal(size),
        sample_f1=sample_f1,
        tail_model=None,
    )


def _gauss_regvar(kappa: float) -> GeneratorPair:
    if not (0.0 < kappa < 1.0):
        raise RangeError(f"tail exponent kappa must lie in (0, 1), got {kappa!r}")
    c_k = 1.0 / (2.0 * math.gamma(1.0 + 1.0 / (2.0 * kappa)))
    shape = 1.0 / (2.0 * kappa)

    def sample_f1(rng, size=None):
        g = rng.gamma(shape, size=size)
        sign = rng.integers(0, 2, size=size) * 2 - 1
        return sign * g ** (1.0 / (2.0 * kappa))

    return GeneratorPair(
        name=f"gauss_regvar:kappa={kappa:g}",
        log_f0=_log_phi,
        log_f1=lambda x: -np.abs(x) ** (2.0 * kappa) + math.log(c_k),
        sample_f0=lambda rng, size=None: rng.standard_normal(size),
        sample_f1=sample_f1,
        tail_model=SlowVariationParams(
            beta0=2.0 / (c_k * math.pi) ** 2, beta1=2.0, delta=-0.5, gamma=kappa
        ),
    )


def _uniform_shift() -> GeneratorPair:
    def log_u(x, lo, hi):
        xs = np.asarray(x, dtype=float)
        out = np.where(
            (xs > lo) & (xs < hi), -math.log(hi - lo), -np.inf
        )
        return out[()] if out.ndim == 0 else out

    return GeneratorPair(
        name="uniform_shift",
        log_f0=lambda x: log_u(x, 0.0, 2.0),
        log_f1=lambda x: log_u(x, 1.0, 3.0),
        sample_f0=lambda rng, size=None: rng.uniform(0.0, 2.0, size),
        sample_f1=lambda rng, size=None: rng.uniform(1.0, 3.0, size),
        tail_model=None,
        support_flags=SupportFlags(equal_supports=False),
        support0=(0.0, 2.0),
        support1=(1.0, 3.0),
    )


def _gauss_psi(nu: float) -> GeneratorPair:
    # the spherical-excess family lives in the composite module;
    # imported lazily to keep this module independent of it
    from . import composite

    fam = composite.ZetaFamily(nu)

    def log_f1(x):
        xs = np.asarray(x, dtype=float)
        out = _log_phi(xs) + fam.log_zeta(xs)
        return out[()] if out.ndim == 0 else out

    tail_model = None
    if nu < 2.0:
        k_nu = fam.tail_constant
        tail_model = SlowVariationParams(
            beta0=2.0 * (math.pi * k_nu) ** (-2.0 / (nu + 2.0)),
            beta1=0.0,
            delta=nu / 2.0,
            gamma=0.0,
        )
    return GeneratorPair(
        name=f"gauss_psi:nu={nu:g}",
        log_f0=_log_phi,
        log_f1=log_f1,
        sample_f0=lambda rng, size=None: rng.standard_normal(size),
        sample_f1=lambda rng, size=None: fam.sample(rng, size),
        tail_model=tail_model,
    )


_FACTORIES = {
    "gauss_cauchy": _gauss_cauchy,
    "gauss_laplace": _gauss_laplace,
    "gauss_t": _gauss_t,
    "gauss_powerphi": _gauss_powerphi,
    "gauss_regvar": _gauss_regvar,
    "uniform_shift": _uniform_shift,
    "gauss_psi": _gauss_psi,
}

_DEFAULT_ARGS = {
    "gauss_t": {"nu": 3.0, "sigma": 1.0},
    "gauss_powerphi": {"nu": 1.0},
    "gauss_regvar": {"kappa": 0.5},
    "gauss_psi": {"nu": 1.5},
}


def builtin_pairs() -> dict:
    """Catalog of the built-in pairs, parameterised families at their
    default parameters."""
    return {name: get_pair(name) for name in _FACTORIES}


def get_pair(spec: str) -> GeneratorPair:
    """Look up a pair by name, with optional parameters after a colon:
    e.g. ``gauss_t:nu=3,sigma=0.5``."""
    name, _, argpart = spec.partition(":")
    name = name.strip()
    if name not in _FACTORIES:
        raise UnknownPairError(
            f"unknown generator pair {name!r}; known: {sorted(_FACTORIES)}"
        )
    kwargs = dict(_DEFAULT_ARGS.get(name, {}))
    if argpart:
        if not kwargs:
            raise DomainError(f"pair {name!r} takes no parameters")
        for item in argpart.split(","):
            key, _, val = item.partition("=")
            key = key.strip()
            if key not in kwargs or not val:
                raise DomainError(f"bad parameter {item!r} for pair {name!r}")
            try:
                kwargs[key] = float(val)
            except ValueError as exc:
                raise DomainError(f"bad parameter value {val!r}") from exc
    return _FACTORIES[name](**kwargs)
