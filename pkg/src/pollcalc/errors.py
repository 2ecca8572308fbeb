"""Exception hierarchy. Every error carries a short machine-readable code."""


class PollingError(Exception):
    """Base class for all pollcalc errors."""

    code = "ERROR"


class BadShapeError(PollingError):
    """Structurally invalid system description (empty queues, negative rates, ...)."""

    code = "BAD_SHAPE"


class UnstableError(PollingError):
    """Offered load at or above capacity; steady state does not exist."""

    code = "UNSTABLE"


class ZeroSwitchoverError(PollingError):
    """Total mean switch-over time is zero; the analytic engine needs it positive."""

    code = "ZERO_SWITCHOVER"


class DomainError(PollingError):
    """Transform evaluated outside its domain of definition."""

    code = "DOMAIN"


class NoConvergenceError(PollingError):
    """Fixed-point iteration exceeded its iteration cap (load too close to critical)."""

    code = "NO_CONVERGENCE"


class EmptyBandError(PollingError):
    """Conditioning band carries (numerically) no probability mass."""

    code = "EMPTY_BAND"


class TruncationError(PollingError):
    """Infinite-product truncation could not reach its tail-bound target."""

    code = "TRUNCATION"


class RouteMismatchError(PollingError):
    """Two independent evaluation routes for the same quantity disagree."""

    code = "ROUTE_MISMATCH"


class FormMismatchError(PollingError):
    """Two algebraically equivalent formula forms disagree numerically."""

    code = "FORM_MISMATCH"


class IllConditionedError(PollingError):
    """Numerical differentiation produced inconsistent extrapolants."""

    code = "ILL_CONDITIONED"


class AccuracyError(PollingError):
    """Numerical inversion diagnostics exceed the accuracy target."""

    code = "ACCURACY"


class UnsupportedFamilyError(PollingError):
    """Operation requested for a distribution family that does not support it."""

    code = "UNSUPPORTED_FAMILY"
