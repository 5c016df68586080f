"""Exceptions and warnings raised across the package."""


class TwoPhotonError(Exception):
    """Base class for all package errors."""


class ConfigError(TwoPhotonError, ValueError):
    """Invalid user configuration (scenario file, CLI flags, crystal database)."""


class OutOfRange(TwoPhotonError, ValueError):
    """Wavelength outside the window where a Sellmeier form is evaluated."""


class PoleProximity(TwoPhotonError, ValueError):
    """Wavelength too close to the resonance pole of a Sellmeier term."""


class OutOfModel(TwoPhotonError, ValueError):
    """Input outside the small-detuning / paraxial regime of the model."""


class NumericalError(TwoPhotonError, ArithmeticError):
    """Base class for failures of the numerical kernels."""


class NoSignChange(NumericalError):
    """Root bracket endpoints do not straddle a root."""


class NoRoot(NoSignChange):
    """A phase-matching condition has no solution on the scanned range."""


class NotConverged(NumericalError):
    """A quadrature refinement check exceeded its tolerance."""


class NoRing(NumericalError):
    """The squared ring radius is negative: no emission cone exists."""


class EmptyGrid(NumericalError):
    """A grid has no points or carries no weight."""


class ParaxialViolation(UserWarning):
    """Transverse wavevector is not small compared to the wavenumber."""


class SellmeierRangeWarning(UserWarning):
    """Wavelength is outside the validity range declared for a crystal."""


class TruncationWarning(UserWarning):
    """A finite integration window loses a noticeable share of the mass."""
