"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operand shapes are incompatible; the message carries both shapes."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss; the message names the epoch."""


class ModelFileError(ValueError):
    """A model file failed to parse or validate.

    ``line`` is the 1-based line number the failure was detected at, when
    known.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
