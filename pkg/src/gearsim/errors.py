"""Exception types shared across the package."""


class GearsError(Exception):
    """Base class for all gearsim errors."""


class NonPhysicalError(GearsError, ValueError):
    """A collective momentum has no integer (m1, m2) preimage."""


class UnsupportedInertiaError(GearsError, ValueError):
    """Operation requires equal moments of inertia (I1 == I2)."""


class ConvergenceFailure(GearsError, RuntimeError):
    """A numerical routine failed to converge."""


class StepTooLarge(GearsError, ValueError):
    """Integrator step exceeds its stability bound."""


class TruncationBreach(GearsError, RuntimeError):
    """Probability reached the edge of a truncated basis; results untrusted."""


class InternalInconsistency(GearsError, RuntimeError):
    """Two redundant computations of the same quantity disagree (bug guard)."""


class ConfigError(GearsError, ValueError):
    """Malformed or contradictory experiment configuration."""
