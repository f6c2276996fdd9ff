"""Exception and warning types shared across the package."""


class CumicaError(Exception):
    """Base class for all errors raised by this package."""


class NotPositiveDefinite(CumicaError):
    """A matrix required to be symmetric positive definite is not."""


class RankDeficient(CumicaError):
    """A matrix required to have full rank is (numerically) singular."""


class NotUnit(CumicaError):
    """A projection direction is not a unit vector."""


class IndexOutOfRange(CumicaError, IndexError):
    """A component index is outside the valid range (or k equals l)."""


class SingularCustomWhitener(CumicaError):
    """A caller-supplied standardizing matrix is numerically singular."""


class SingularInput(CumicaError):
    """A matrix argument that must be invertible is numerically singular."""


class InvalidSpec(CumicaError):
    """A source or model specification has out-of-range parameters."""


class InvalidParams(CumicaError):
    """A numeric argument is outside its documented domain."""


class ZeroDenominator(CumicaError):
    """An asymptotic-variance denominator vanishes for some component/pair.

    Carries the offending component index or (k, l) pair in ``components``.
    """

    def __init__(self, message, components=()):
        super().__init__(message)
        self.components = tuple(components)


class AssumptionViolated(CumicaError):
    """The source model violates the identifiability assumption a method needs.

    ``number`` is the assumption number (3-8) that failed.
    """

    def __init__(self, number, message):
        super().__init__(f"assumption {number} violated: {message}")
        self.number = number


class TooManyFailures(CumicaError):
    """More than 1% of Monte Carlo replications failed to converge."""


class CumicaWarning(UserWarning):
    """Base class for warnings emitted by this package."""


class DegenerateObjective(CumicaWarning):
    """The attained estimator objective is too small to separate anything."""


class NearDegenerateSpectrum(CumicaWarning):
    """Cumulant eigenvalues are too close to identify components reliably."""
