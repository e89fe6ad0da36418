"""Exception types shared across the package."""


class ConjLocusError(Exception):
    """Base class for all package errors."""


class DomainError(ConjLocusError):
    """A chart coordinate lies outside the open domain of the chart."""


class ChartSingularError(ConjLocusError):
    """A point is too close to the singular set of every available chart."""


class FrameError(ConjLocusError):
    """A supplied frame is not orthonormal with respect to the metric."""


class IntegrationError(ConjLocusError):
    """The adaptive stepper failed (step-size underflow or step budget)."""


class HorizonTooShort(ConjLocusError):
    """Fewer than two conjugate roots were found before t_max.

    Carries the offending launch direction so sweeps can report it.
    """

    def __init__(self, message, direction=None):
        super().__init__(message)
        self.direction = direction


class UmbilicAmbiguity(ConjLocusError):
    """The collapsing direction is not unique (umbilic direction)."""


class ConfigError(ConjLocusError):
    """Invalid run configuration; the message names the offending key."""
