"""Exception types shared across the package."""


class GeometryError(Exception):
    """Base class for all package errors."""


class DomainError(GeometryError):
    """A point lies outside the chart where a field is defined."""


class SingularLocusError(DomainError):
    """A point is too close to a coordinate singularity (inside the guard margin)."""


class DegenerateMetricError(GeometryError):
    """Metric matrix is singular (or numerically near-singular) at the point."""


class SignatureError(GeometryError):
    """Metric eigenvalue signs do not match the declared signature."""


class FrameError(GeometryError):
    """Frame is not invertible or fails its Gram-matrix contract."""


class DerivativeError(GeometryError):
    """A finite-difference stencil could not be evaluated (step underflow etc.)."""


class IntegrationError(GeometryError):
    """An ODE solve failed to converge or left the admissible region."""


class CausalityViolationError(GeometryError):
    """A supposedly causal vector or curve turned spacelike."""

    def __init__(self, message, point=None, value=None):
        super().__init__(message)
        self.point = point
        self.value = value


class NotInStabilizerError(GeometryError):
    """Matrix violates the block pattern of the null-line stabilizer subalgebra."""


class ToleranceError(GeometryError):
    """Rank/closure computation cannot stabilize at the requested tolerance."""


class LoopTooLargeError(GeometryError):
    """Loop transport stayed too far from the identity even after shrinking."""


class ClassificationError(GeometryError):
    """No algebra template fits; carries the per-template residual table."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals or {}


class ScenarioSpecError(GeometryError):
    """A scenario recipe violates one of its structural constraints."""


class WindowError(GeometryError):
    """A fitting window is too short (needs at least a decade of data)."""


class ConfigError(GeometryError):
    """Config file is malformed or references unknown suites/fields."""
