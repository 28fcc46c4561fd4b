"""Exception hierarchy shared across the pipeline."""


class CutonceError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(CutonceError):
    """A file or byte stream does not conform to its container format."""


class ValidationError(CutonceError):
    """Structurally valid data violates a documented invariant."""


class DataError(CutonceError):
    """Numeric contents are unusable (non-finite, degenerate vectors)."""


class ParameterError(CutonceError):
    """A configuration value is outside its legal range."""


class ContractError(CutonceError):
    """A function was called with inputs violating its precondition."""


class ConvergenceError(CutonceError):
    """An iterative solve ended without meeting its residual target."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
