class QivifError(Exception):
    """Base class for failures that end a qivif run.

    Attributes:
        message -- explanation of the error
        detail -- the offending value (path, shape, key, ...)
        exit_code -- process exit status used by the command line
    """

    exit_code = 1

    def __init__(self, message, detail=None):
        self.message = message
        self.detail = detail
        super().__init__(self.message)

    def __str__(self):
        if self.detail is None:
            return self.message
        return f"{self.message} : {self.detail} "


class ImageIOError(QivifError):
    """A raster could not be read, decoded or written."""

    exit_code = 2


class MissingInputError(QivifError):
    """An input path does not exist."""

    exit_code = 3


class DimensionMismatchError(QivifError, ValueError):
    """Operands or an image pair disagree in shape."""

    exit_code = 3


class InvalidConfigError(QivifError, ValueError):
    """A configuration value, key or file is invalid."""

    exit_code = 4


class JournalIntegrityError(QivifError):
    """The run journal was misused or could not be persisted."""

    exit_code = 2


class UnknownFilterError(QivifError, ValueError):
    pass


class ShrinkDomainError(QivifError, ValueError):
    pass


class NonFiniteInputError(QivifError, ValueError):
    pass


class QsvdDiagnosticsError(QivifError, RuntimeError):
    """Singular values of the complex adjoint did not come in pairs."""


class SubproblemSolveError(QivifError, RuntimeError):
    pass


class ConvergenceWarning(UserWarning):
    """An iterative solver stopped at its iteration cap."""


class AlphaChannelWarning(UserWarning):
    pass
