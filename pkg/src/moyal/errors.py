"""Exception and warning types shared across the package."""


class MoyalError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(MoyalError):
    """Truncation dimension is too small or otherwise invalid."""


class ShapeError(MoyalError):
    """Operand shapes or grids do not match."""


class ScheduleError(MoyalError):
    """Damping schedule violates its invariants."""


class ValidationError(MoyalError):
    """Input operator failed a physical validation check (hermiticity, trace)."""


class PositivityError(MoyalError):
    """A positive matrix was required (square root transport) but not supplied."""


class IllConditionedError(MoyalError):
    """Requested ratio or inverse is dominated by its own error estimate."""


class PrecisionError(MoyalError):
    """Internal floating-point failure (overflow in a closed-form evaluation)."""


class ContractViolationError(MoyalError):
    """Caller violated a numerical-contract precondition that has no fallback."""


class ConfigError(MoyalError):
    """Run configuration is malformed (unknown keys, bad values)."""


class NumericsWarning(UserWarning):
    """Base class for numerical-contract warnings (strict CLI mode turns these into failures)."""


class TruncationWarning(NumericsWarning):
    """Truncation dimension too small for the requested damping or grid extent."""


class BoundaryDecayWarning(NumericsWarning):
    """A symbol field does not decay at the grid boundary."""


class AliasingWarning(NumericsWarning):
    """Grid spacing too coarse for the requested truncation dimension."""


class NonConvergentWarning(NumericsWarning):
    """Damped-trace extrapolation did not settle."""
