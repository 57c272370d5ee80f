"""Exception hierarchy shared by every module."""


class BurgersError(Exception):
    """Base class for all package errors."""


class DomainError(BurgersError, ValueError):
    """An argument lies outside the domain of an operation."""


class InvalidFieldError(BurgersError, ValueError):
    """A grid field contains non-finite values or has the wrong shape."""


class DivisionHazardError(BurgersError, ZeroDivisionError):
    """A denominator in the Cole-Hopf inversion is numerically zero."""

    def __init__(self, index, value):
        self.index = index
        self.value = value
        super().__init__(f"psi[{index}] = {value!r} is too close to zero for inversion")


class EncodingError(BurgersError, ValueError):
    """A vector cannot be amplitude-encoded (zero norm)."""


class UnsupportedBoundaryError(BurgersError, ValueError):
    """The operation requires a periodic grid."""


class NumericalGuardError(BurgersError, ArithmeticError):
    """A numerical safeguard tripped (overflow, vanishing norm, ill-conditioned ratio)."""


class IllConditionedRatioError(NumericalGuardError):
    """The normalizing moment is too small relative to its readout noise."""


class ResourceLimitError(BurgersError, RuntimeError):
    """A statevector would exceed the configured qubit ceiling."""

    def __init__(self, required, allowed):
        self.required = required
        self.allowed = allowed
        super().__init__(f"statevector needs {required} qubits, ceiling is {allowed}")


class ConfigError(BurgersError, ValueError):
    """Invalid run configuration."""
