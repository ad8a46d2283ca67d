"""Exception types shared across the package."""


class LpslbError(Exception):
    """Base class for all package-specific errors."""


class DegenerateParametersError(LpslbError):
    """Closed-form expression undefined at these parameters (p == q);
    caller should fall back to the numeric route."""


class IndexDegeneracyError(LpslbError):
    """Cumulative stationary mass failed the strict-increase assumption,
    so the index formula's denominator is numerically zero."""


class TableRangeError(LpslbError):
    """A queue length fell outside the precomputed index-table range."""


class CostMonotonicityError(LpslbError):
    """Holding-cost function decreased somewhere on the requested range."""


class SingularSystemError(LpslbError):
    """Stationary-distribution solve failed (malformed transition matrix)."""


class NonConvergenceError(LpslbError):
    """Value iteration exceeded its iteration budget."""


class TruncationError(LpslbError):
    """Truncated state space carries non-negligible boundary mass."""


class QueueOverflowError(LpslbError):
    """A simulated queue grew past the overflow guard (unstable policy)."""


class ConfigError(LpslbError):
    """Experiment configuration failed validation; message carries the field path."""
