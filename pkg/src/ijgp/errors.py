"""Exception hierarchy shared by every module of the package."""


class InferenceError(Exception):
    """Base class for all errors raised by this package."""


class ModelInconsistencyError(InferenceError, ValueError):
    """Two factors disagree on the cardinality of a shared variable."""


class InconsistentEvidenceError(InferenceError):
    """Evidence has zero probability under the model (or the approximation)."""


class WidthGuardError(InferenceError):
    """A dense table would exceed the configured size cap."""


class InvalidDecompositionError(InferenceError, ValueError):
    """A join-graph fails the placement or arc-connectedness checks."""


class ParseError(InferenceError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
