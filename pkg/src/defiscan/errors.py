"""Exception hierarchy shared across the pipeline."""


class DefiscanError(Exception):
    """Base class for all library errors."""


class MalformedInputError(DefiscanError, ValueError):
    """Input text (hex, address, CSV) could not be parsed."""

    def __init__(self, message, index=None, line=None):
        super().__init__(message)
        self.index = index
        self.line = line


class SchemaMismatchError(DefiscanError, KeyError):
    def __init__(self, opcode):
        super().__init__(f"schema mismatch: {opcode}")
        self.opcode = opcode

    def __str__(self):
        return self.args[0]


class InsufficientDataError(DefiscanError, ValueError):
    pass


class DegenerateLabelsError(DefiscanError, ValueError):
    """Only one class is present where two are required."""


class ShapeError(DefiscanError, ValueError):
    pass


class StratificationError(DefiscanError, ValueError):
    pass


class InvalidDataError(DefiscanError, ValueError):
    """Non-finite values in a numeric input."""


class UndefinedSimilarityError(DefiscanError, ValueError):
    pass


class UndefinedEffectError(DefiscanError, ValueError):
    pass


class NotFittedError(DefiscanError, RuntimeError):
    pass


class FetchError(DefiscanError):
    """A single address could not be fetched from the JSON-RPC endpoint."""

    def __init__(self, address, reason):
        super().__init__(f"{address}: {reason}")
        self.address = address
        self.reason = reason


class ExperimentError(DefiscanError):
    """Wraps a failure inside an experiment iteration."""

    def __init__(self, iteration, cause):
        super().__init__(f"iteration {iteration}: {cause}")
        self.iteration = iteration
        self.cause = cause
