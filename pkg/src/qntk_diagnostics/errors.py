"""Exception types shared across the package."""


class QntkError(Exception):
    """Base class for all package errors."""


class ConfigurationError(QntkError):
    """Invalid user-facing configuration: bad sizes, ranges, or option names."""


class StructuralError(QntkError):
    """Malformed inputs: wrong shapes, out-of-range indices, mismatched dimensions."""


class NumericalIntegrityError(QntkError):
    """A numeric result violated an exactness guarantee (non-finite value, complex residue)."""


class UnsupportedGateError(QntkError):
    """A gate cannot be used in the requested role, e.g. a parameterized CNOT."""


class SingularKernelError(QntkError):
    """The kernel spectrum is unusable at the requested cutoff."""


class DivergenceError(QntkError):
    """Training produced non-finite parameters; carries the partial log."""

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log


class UndefinedMetricError(QntkError):
    """A metric is undefined for the given inputs (zero variance or zero norm)."""
