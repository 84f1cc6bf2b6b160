"""Exception types shared across the package."""

from __future__ import annotations


class NlsvarError(Exception):
    """Base class for domain errors raised by this package."""


class ModelError(NlsvarError, ValueError):
    """A model specification is malformed or dimensionally inconsistent."""


class FamilyMismatch(NlsvarError, TypeError):
    """An operation was called on a model family that does not support it."""


class CrscViolation(NlsvarError):
    """The image of the error-correction map is not a fixed subspace.

    ``regime`` is the offending regime index and ``residual`` measures how
    far that regime's long-run matrix is from spanning the common subspace.
    """

    def __init__(self, regime: int, residual: float, detail: str = "") -> None:
        self.regime = regime
        self.residual = float(residual)
        msg = f"common row space condition fails in regime {regime} (residual {residual:.3e})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class NoRegimeAccepts(NlsvarError):
    """No regime-wise inverse candidate lies in its own regime."""


class NewtonDivergence(NlsvarError):
    """Damped Newton iteration failed to reach the requested residual."""


class NotMemberError(NlsvarError):
    """An operation requiring class membership was given a non-member model."""


class StationaryModelError(NlsvarError):
    """The model has no common trends (r == p), so trend objects are empty."""


class OffAttractorError(NlsvarError):
    """A point that should lie on the attractor does not."""
