"""Exception taxonomy shared by all engine modules."""


class EngineError(Exception):
    """Base class for every error raised by this package."""


class UsageError(EngineError):
    """An operation was called outside its contract (bad arguments)."""


class ParseError(EngineError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = "%s (at position %d)" % (message, position)
        super().__init__(message)


class PreconditionError(EngineError):
    """Input data violates a stated mathematical precondition."""


class NormalizationError(EngineError):
    """Canonical form does not exist (division by an identically zero expression)."""


class EvalDomainError(EngineError):
    """Numeric evaluation hit a singular point or a missing assignment."""


class InternalConsistencyError(EngineError):
    """The engine derived something that contradicts its own invariants."""


class SelectionError(EngineError):
    """The column-selection algorithm could not pick an admissible column."""


class QuadratureError(EngineError):
    """Grid refinement disagreed: quadrature too coarse for the requested check."""
