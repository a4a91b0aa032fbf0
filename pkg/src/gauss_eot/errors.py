"""Exception and warning types used across the package."""


class GaussEotError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(GaussEotError):
    """Operands have incompatible dimensions."""


class DegenerateMatrix(GaussEotError):
    """A matrix required to be positive definite fails the eigenvalue floor.

    Raised instead of clamping: the formulas downstream (inverse roots,
    log-determinants) are genuinely singular there, so a clamped answer
    would be fabricated. Carries an optional iteration ``report`` when the
    failure happened inside a fixed-point loop.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class TOutOfRange(GaussEotError):
    """Interpolation parameter outside its valid interval."""


class MarginalMismatch(GaussEotError):
    """A transport plan's marginals do not match the given measures."""


class PotentialMismatch(GaussEotError):
    """Potentials were solved for a different problem than the one given."""


class CoverageError(GaussEotError):
    """Discretization grid does not cover enough of the distribution's mass."""


class NumericalUnderflow(GaussEotError):
    """Linear-domain Sinkhorn kernel underflowed; use the log-domain solver."""


class NotConverged(GaussEotError):
    """An iterative solver exhausted its iteration budget.

    Carries the iteration ``report`` (fixed-point loops) or the last
    ``marginal_err`` (Sinkhorn loops) so callers can inspect how close the
    run got.
    """

    def __init__(self, message, report=None, marginal_err=None):
        super().__init__(message)
        self.report = report
        self.marginal_err = marginal_err


class ConfigError(GaussEotError):
    """Invalid configuration value, flag combination, or input file."""


class ConditioningWarning(UserWarning):
    """Result was computed outside the well-conditioned parameter range."""
