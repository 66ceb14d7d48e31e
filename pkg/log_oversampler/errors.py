"""Exception hierarchy for the log oversampler."""


class LogOversamplerError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(LogOversamplerError, ValueError):
    """Array shapes do not agree."""

    def __init__(self, message: str, *shapes: tuple[int, ...]):
        if shapes:
            message = f"{message}: " + " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(message)
        self.shapes = shapes


class ArgumentError(LogOversamplerError, ValueError):
    """An argument is out of range or an input is empty."""


class NumericError(LogOversamplerError, ArithmeticError):
    """A loss or gradient became NaN or infinite."""


class ConsistencyError(LogOversamplerError):
    """A cached trace does not belong to the parameters it is used with."""


class CapacityError(LogOversamplerError):
    """An exhaustive enumeration would exceed its size limit."""


class UndefinedMetricError(LogOversamplerError, ZeroDivisionError):
    """A metric has a zero denominator."""


class CorpusFormatError(LogOversamplerError, ValueError):
    """A corpus, vocabulary, cache or checkpoint file is malformed."""


class PartialResultError(LogOversamplerError):
    """Oversampling stopped before reaching its target.

    The records generated so far and the diagnostics are kept on the exception.
    """

    def __init__(self, message: str, records=None, diagnostics=None):
        super().__init__(message)
        self.records = records if records is not None else []
        self.diagnostics = diagnostics if diagnostics is not None else []


class StageError(LogOversamplerError):
    """A pipeline stage failed."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"Stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
