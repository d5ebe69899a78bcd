"""Exception types shared across the toolkit."""


class LoccError(Exception):
    """Base class for all toolkit errors."""


class NotHermitian(LoccError):
    """Matrix fails the hermiticity tolerance."""


class NotPsd(LoccError):
    """Matrix has an eigenvalue below the PSD tolerance."""


class NoConvergence(LoccError):
    """Iterative eigensolver exceeded its iteration cap."""


class DimensionMismatch(LoccError):
    """Operands have incompatible shapes for the requested operation."""


class NumericalDegeneracy(LoccError):
    """Support reduction stalled; usually a tolerance misconfiguration."""


class ConvergenceFailure(LoccError):
    """Equalization loop failed to terminate within its iteration budget."""


class CapExceeded(LoccError):
    """Component enumeration would exceed the materialization cap."""


class LabelOutOfRange(LoccError):
    """A leaf label does not index into the ensemble."""
