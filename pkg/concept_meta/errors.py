"""Exception hierarchy for Concept Meta."""
from pathlib import Path


class ConceptMetaError(Exception):
    """Base class for every domain error raised by the package."""


class DimensionError(ConceptMetaError, ValueError):
    """Operand shapes are incompatible."""

    def __init__(self, message: str, *shapes: tuple[int, ...]):
        if shapes:
            message = f"{message}: " + " vs ".join(str(tuple(s)) for s in shapes)
        super().__init__(message)
        self.shapes = shapes


class ConfigurationError(ConceptMetaError, ValueError):
    """Invalid configuration or empty input where content is required."""


class SchemaError(ConceptMetaError, ValueError):
    """Vocabulary, mask or schema invariant violated."""


class ParseError(ConceptMetaError, ValueError):
    """Malformed input file."""

    def __init__(self, message: str, path: str | Path | None = None, line_number: int | None = None):
        location = ""
        if path is not None:
            location = f"{path}"
            if line_number is not None:
                location += f":{line_number}"
            location += ": "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line_number = line_number


class UndefinedMetricError(ConceptMetaError, ValueError):
    """Metric is undefined for the given input."""


class NonFiniteLossError(ConceptMetaError, RuntimeError):
    """Training produced a NaN or infinite loss."""

    def __init__(self, step: int, task_id: str, loss: float):
        super().__init__(f"Non-finite loss {loss!r} at step {step} (task {task_id})")
        self.step = step
        self.task_id = task_id
        self.loss = loss


class StaleCacheError(ConceptMetaError):
    """Backward pass called with a cache from an older parameter version."""


class CheckpointError(ConceptMetaError):
    """Checkpoint file is unreadable or has an unsupported version."""
