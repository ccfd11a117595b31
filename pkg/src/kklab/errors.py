"""Exception types shared across kklab."""


class KKLabError(Exception):
    """Base class for all library errors."""


class SingularMetric(KKLabError):
    """A metric (or fibre metric) is singular, indefinite or badly conditioned."""


class OutOfDomain(KKLabError):
    """A point or finite-difference stencil leaves the declared chart domain."""


class ChartExit(KKLabError):
    """A diffusion path left a non-periodic chart."""


class InsufficientPaths(KKLabError):
    """Every simulated path was discarded."""


class RepresentationMismatch(KKLabError):
    """Generator matrices do not reproduce the structure constants."""


class InvalidStructure(KKLabError):
    """Structure constants violate antisymmetry, Jacobi or unimodularity."""


class ConfigError(KKLabError):
    """A scenario configuration could not be parsed or validated."""


class NumericalFailure(KKLabError):
    """An internal invariant check failed while running a scenario."""
