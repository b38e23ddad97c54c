"""Exception hierarchy shared by all modules."""


class OVError(Exception):
    """Base class for every error raised by ovforge."""


class DomainError(OVError, ValueError):
    """An argument lies outside the domain of the requested quantity."""


class ConvergenceError(OVError, RuntimeError):
    """Adaptive quadrature exhausted its subdivision budget.

    The best estimate and its error bound are kept on the instance so a
    caller can decide whether the partial result is still usable.
    """

    def __init__(self, message, estimate=None, error=None):
        super().__init__(message)
        self.estimate = estimate
        self.error = error


class StencilError(OVError, ValueError):
    """A finite-difference stencil would touch an excluded locus."""


class RayProximityError(DomainError):
    """The twistor parameter sits too close to a BPS ray."""


class SingularFactorError(DomainError):
    """A wall-crossing factor vanishes (chi_e = -1 or w = -1)."""


class PositivityError(DomainError):
    """The Gibbons-Hawking potential is not positive at the point."""


class ConfigError(OVError, ValueError):
    """Invalid or unreadable run configuration."""
