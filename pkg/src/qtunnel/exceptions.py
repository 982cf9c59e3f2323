"""Exception hierarchy shared across the package."""


class QTunnelError(Exception):
    """Base class for all package errors."""


class SizeError(QTunnelError, ValueError):
    """A system-size guard was violated (too many qubits)."""


class ShapeError(QTunnelError, ValueError):
    """Operands act on different qubit counts or mismatched arrays."""


class IndexErrorQ(QTunnelError, IndexError):
    """A qubit or parameter-slot index is out of range."""


class ArityError(QTunnelError, ValueError):
    """Parameter vector length does not match the circuit."""


class ConfigError(QTunnelError, ValueError):
    """An experiment configuration is inconsistent or malformed."""


class NumericError(QTunnelError, ArithmeticError):
    """A non-finite value appeared during optimization.

    Carries the phase and iteration index where it happened.
    """

    def __init__(self, message: str, phase: str = "", iteration: int = -1):
        super().__init__(message)
        self.phase = phase
        self.iteration = iteration
