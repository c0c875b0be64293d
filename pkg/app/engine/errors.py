"""Exception hierarchy shared by the reasoning engine, the CLI and the HTTP routes."""


class EngineError(Exception):
    """Base class for every failure raised by the engine."""
    pass


class ParseError(EngineError):
    """Raised when program text cannot be parsed."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(str(self))

    def __str__(self):
        if self.line is None:
            return self.message
        return f"line {self.line}, column {self.column}: {self.message}"


class ArityError(ParseError):
    """Raised when a predicate is used with two different arities."""
    pass


class ReservedSymbolError(ParseError):
    """Raised when user input mentions a symbol reserved for the engine."""
    pass


class UnsafeQueryError(EngineError):
    """Raised when a head variable of a query does not occur in its body."""
    pass


class NotNormalizedError(EngineError):
    """Raised when the rewriter receives a TGD outside the normal form."""
    pass


class NotLinearError(EngineError):
    """Raised when query elimination is requested for a non-linear TGD set."""
    pass


class TerminationError(EngineError):
    """Raised when rewriting has neither a termination certificate nor a round bound."""
    pass


class UnsupportedClassError(EngineError):
    """Raised for class-membership tests the engine deliberately does not decide."""
    pass


class EmitError(EngineError):
    """Raised when a UCQ cannot be serialised."""
    pass
