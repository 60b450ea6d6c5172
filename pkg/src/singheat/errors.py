"""Exception types shared across the package (and mapped to CLI exit codes)."""


class SingheatError(Exception):
    """Base class for all package-specific failures."""


class ConfigError(SingheatError):
    """Bad or missing configuration input."""


class HypothesisError(SingheatError):
    """A theorem's admissibility condition is violated for the given data."""


class NoRootError(SingheatError):
    """Mass-normalization constant could not be bracketed."""


class SingularSteadyStateError(SingheatError):
    """Steady-state denominator loses positivity."""


class SolverError(SingheatError):
    """Time stepper failed (Newton divergence, CFL floor, ...)."""


class QuenchError(SolverError):
    """Solution approached the singular set u = 0."""
