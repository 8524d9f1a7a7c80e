"""Exception types shared across the pipeline.

Each class maps to one CLI exit code so shell callers can distinguish
failure families without parsing messages.
"""

EXIT_INPUT_FORMAT = 2
EXIT_PARAMETER = 3
EXIT_TRAINING = 4


class PwptagError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class CorpusFormatError(PwptagError):
    """A corpus/embedding/artifact file violates its wire format."""

    exit_code = EXIT_INPUT_FORMAT


class ParameterError(PwptagError):
    """A caller-supplied parameter is out of range or inconsistent."""

    exit_code = EXIT_PARAMETER


class TrainingDivergenceError(PwptagError):
    """Training produced a non-finite loss."""

    exit_code = EXIT_TRAINING

    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch
