"""Exception hierarchy for levygof."""


class LevyGofError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(LevyGofError, ValueError):
    """An argument lies outside the domain of the requested function."""


class UnsupportedFamilyError(LevyGofError, ValueError):
    """The requested operation is not available for this distribution family."""


class EstimationError(LevyGofError, ArithmeticError):
    """A scale estimate could not be formed (overflow, degenerate sample)."""


class DegenerateStatisticError(LevyGofError, ArithmeticError):
    """A statistic is undefined for the given sample (e.g. zero denominator)."""


class QuadratureError(LevyGofError, RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Attributes
    ----------
    value : float
        Best estimate returned by the integrator.
    abserr : float
        Achieved absolute error estimate.
    """

    def __init__(self, message: str, value: float, abserr: float):
        super().__init__(f"{message} (value={value!r}, abserr={abserr:.3g})")
        self.value = value
        self.abserr = abserr
