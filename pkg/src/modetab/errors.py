"""Exception types shared across the package."""


class ModetabError(Exception):
    """Base class for every error this package raises on purpose."""


class ParseError(ModetabError):
    """Source text could not be parsed; carries line and column when known."""

    def __init__(self, message, line=None, col=None):
        if line is not None:
            message = "line %d, column %d: %s" % (line, col, message)
        super().__init__(message)
        self.line = line
        self.col = col


class ModeError(ModetabError):
    """Invalid mode declaration (unknown mode, arity clash, repeated sum/last)."""


class EvaluationError(ModetabError):
    """Runtime failure while evaluating a program."""


class DerivationLimitError(ModetabError):
    """The derivation budget ran out; the query is likely non-terminating."""
