"""Exception hierarchy shared by all modules.

Input problems raise :class:`ValidationError`; failures of a numerical
procedure (nonconvergence, zero counts that do not match, degenerate
geometry) raise :class:`NumericalError`. The command line maps the two
families to distinct exit codes.
"""

from __future__ import annotations


class ValidationError(ValueError):
    """Malformed or inconsistent input."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to deliver its postcondition."""


class ConvergenceError(NumericalError):
    """An iteration (Newton, fixed point, quadrature) did not converge."""


class CountMismatchError(NumericalError):
    """A contour count disagrees with the expected number of zeros."""


class ContourTooCloseError(NumericalError):
    """The function nearly vanishes on the contour used for counting."""


class NonTameError(NumericalError):
    """Two divisor points coincide (or nearly so)."""


class CollisionError(NonTameError):
    """Two divisor points approached each other during a flow."""


class DegenerateError(NumericalError):
    """A linear system or normalisation is singular."""


class ContractionError(ConvergenceError):
    """A fixed-point iteration failed to contract."""
