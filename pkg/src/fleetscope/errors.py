"""Exception types shared across the engine.

``PreconditionError`` marks caller mistakes (bad parameters, selections that
violate an operation's contract); the HTTP layer maps it to 422. Everything
else derives from ``FleetscopeError`` so batch entry points can catch one
base class and exit nonzero.
"""


class FleetscopeError(Exception):
    """Base class for all engine errors."""


class IngestError(FleetscopeError):
    """Raised when CSV input cannot be turned into a tensor.

    Carries file and line context where available.
    """

    def __init__(self, message: str, file: str | None = None, line: int | None = None):
        self.file = file
        self.line = line
        prefix = ""
        if file is not None:
            prefix = f"{file}:{line}: " if line is not None else f"{file}: "
        super().__init__(prefix + message)


class PreconditionError(FleetscopeError):
    """An operation was called outside its contract (maps to HTTP 422)."""
