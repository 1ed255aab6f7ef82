"""Exception hierarchy shared by all modules."""


class HPZError(Exception):
    """Base class for all package errors."""


class DomainError(HPZError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigError(HPZError):
    """A run configuration is malformed or inconsistent."""


class SeriesTruncationError(HPZError):
    """The Matsubara series could not be converged within ``max_terms``.

    ``bound`` is the estimated relative size of the omitted tail.
    """

    def __init__(self, message, bound):
        super().__init__(message)
        self.bound = bound


class NonNormalizableError(HPZError, ValueError):
    """A Gaussian with ``C <= 0`` (or ``c1 <= 0``) was passed where a
    normalizable state is required."""


class SpectrumUndefinedError(HPZError, ValueError):
    """Spectrum or purity requested for ``A <= 0`` or ``C <= 0``."""


class IntegrationError(HPZError):
    """The ODE integrator failed (step-size underflow or step budget).

    ``t`` and ``state`` hold the last accepted point.
    """

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class NoStationaryStateError(HPZError):
    """The Markovian generator is singular (e.g. ``gamma == 0``)."""
