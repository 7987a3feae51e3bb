"""Exception types shared across the package."""


class LatticeSliceError(Exception):
    """Base class for all package errors."""


class DomainError(LatticeSliceError, ValueError):
    """Operand outside the domain of an operation (e.g. log of a value <= 1)."""


class CapacityExceeded(LatticeSliceError):
    """A request needs more depth, memory or enumeration than allowed."""


class InvalidParameter(LatticeSliceError, ValueError):
    """Construction or geometry parameter out of range."""


class EmptyInput(LatticeSliceError, ValueError):
    pass


class ParseError(LatticeSliceError, ValueError):
    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class ConfigError(LatticeSliceError, ValueError):
    pass


class UnknownSuite(LatticeSliceError, KeyError):
    pass
