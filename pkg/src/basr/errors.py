"""Exception types shared across the package."""


class BasrError(Exception):
    """Base class for all package errors."""


class ShapeError(BasrError):
    """Raised when an array operation receives incompatible shapes."""


class VocabularyError(BasrError):
    """Raised for invalid vocabulary construction or lookup."""


class DatasetError(BasrError):
    """Raised for malformed dataset files or invalid generator specs."""


class CheckpointError(BasrError):
    """Raised for unreadable or inconsistent checkpoint files."""


class DivergenceError(BasrError):
    """Raised when training produces a non-finite loss."""
