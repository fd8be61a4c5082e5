"""Exception taxonomy shared across the package.

In-process backends and remote backends raise the same error types so the
stage orchestrator never needs to know which kind it is talking to.
"""


class QRefineError(Exception):
    """Base class for all package errors."""


class ImageDecodeError(QRefineError):
    """Raised when an encoded image stream is malformed or unsupported."""


class ImageSizeError(QRefineError):
    """Raised when an image or cell is below the minimum workable size."""


class ShapeMismatchError(QRefineError):
    """Raised when two arrays that must share dimensions do not."""


class ConfigError(QRefineError):
    """Raised for invalid configuration values or invariant violations."""


class StageError(QRefineError):
    """A refining stage failed; carries the underlying backend diagnostics."""


class IntegrityError(QRefineError):
    """A backend result violated its contract (dimensions, preservation)."""


class BackendError(QRefineError):
    """The backend reported a failure (HTTP error, malformed response)."""


class BackendUnavailableError(BackendError):
    """The backend endpoint could not be reached within the retry budget."""


class ProtocolError(BackendError):
    """A wire-protocol response did not have the required shape."""


class RequestTooLargeError(BackendError):
    """A request payload exceeded the endpoint's size limit."""


class UnsolvableMaskError(QRefineError):
    """Harmonic inpainting has no boundary data (fully masked image)."""


class CorpusSpecError(QRefineError):
    """A degradation spec is invalid (bad regions, bad parameters)."""
