"""Exception hierarchy shared by the library and the command line."""


class FormanFlowError(Exception):
    """Base class for all package errors."""


class InputError(FormanFlowError, ValueError):
    """Malformed or unusable input data."""


class ParseError(InputError):
    """A data line could not be parsed.

    ``lineno`` is 1-based and refers to the physical line in the source.
    """

    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class EmptyGraphError(InputError):
    def __init__(self, message="empty graph"):
        super().__init__(message)


class ConfigError(FormanFlowError, ValueError):
    """Invalid parameter values."""


class BudgetError(FormanFlowError, MemoryError):
    """A requested dense artifact or densification exceeds its size budget."""


class ContractError(FormanFlowError, ValueError):
    """Weights and graph (or a derived field) do not belong together."""


class FlowOverflowError(FormanFlowError, ArithmeticError):
    """Flow weights left the floating-point range."""
