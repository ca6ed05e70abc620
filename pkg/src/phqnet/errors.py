"""Exception hierarchy shared by every phqnet module."""


class PhqError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(PhqError, ValueError):
    pass


class ParameterError(PhqError, ValueError):
    pass


class LabelError(PhqError, ValueError):
    pass


class StateError(PhqError, RuntimeError):
    pass


class NonFiniteError(PhqError, FloatingPointError):
    pass


class InputError(PhqError, ValueError):
    pass


class FormatError(PhqError, ValueError):
    """Malformed file content. ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class CanonicalizationError(PhqError, ValueError):
    pass


class NormalizationError(PhqError, ValueError):
    pass


class EmptySegment(PhqError):
    """A time slice selected no frames; callers decide how to recover."""


class IngestionError(PhqError):
    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path is not None else message)


class AggregationError(PhqError, ValueError):
    pass


class CheckpointError(PhqError):
    pass


class ConfigError(PhqError, ValueError):
    pass


class TrainingAborted(PhqError):
    def __init__(self, epoch, batch, loss):
        self.epoch = epoch
        self.batch = batch
        self.loss = loss
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}, batch {batch}")
