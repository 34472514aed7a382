"""Exception taxonomy shared by all mixtail modules.

Every error raised by the library derives from :class:`MixtailError` so
callers can trap the whole family at once.  The split mirrors how the
command line reports failures: bad user input, a point outside a
function's domain, a parameter set outside the supported range, an
algorithm that failed to converge, and a model that is degenerate
(for instance a density ratio that is identically one).
"""

from __future__ import annotations


class MixtailError(Exception):
    """Base class for all library errors."""


class InputError(MixtailError, ValueError):
    """Malformed user input: bad shapes, NaN entries, unknown keys."""


class DomainError(MixtailError, ValueError):
    """Argument outside the mathematical domain of the function."""


class RangeError(MixtailError, ValueError):
    """Parameter outside the supported range (e.g. a stable index)."""


class NumericError(MixtailError, ArithmeticError):
    """An iteration or quadrature failed to reach its tolerance."""


class DegenerateModelError(MixtailError, ValueError):
    """The two mixture components coincide, so the weight is unidentifiable."""


class UnknownPairError(MixtailError, KeyError):
    """Catalog lookup for a generator pair name that does not exist."""


class InvariantError(MixtailError, RuntimeError):
    """A runtime self-check failed; indicates a bug, not bad input."""


class ClampWarning(UserWarning):
    """A requested quantile fell inside the distribution body and was
    clamped to the support endpoint."""
