"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Array shapes or lengths do not agree."""


class DomainError(ValueError):
    """A scalar or set argument lies outside its admissible domain."""


class InfeasibleError(RuntimeError):
    """The residual constraint cannot be met by any vector."""


class ResourceError(MemoryError):
    """A requested dense computation exceeds the configured size cap."""


class FormatError(ValueError):
    """A file does not match the expected binary layout.

    ``offset`` is the byte position at which parsing failed, when known.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
