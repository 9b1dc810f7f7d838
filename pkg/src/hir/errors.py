"""Exception types shared across the package."""


class HirError(Exception):
    """Base class for all data and format errors raised by this package."""


class CorpusError(HirError):
    """A corpus file could not be read or violated the record format.

    ``line_no`` is 1-based and None when the error is not tied to a line.
    """

    def __init__(self, message: str, path: str | None = None, line_no: int | None = None):
        self.path = path
        self.line_no = line_no
        prefix = ""
        if path is not None:
            prefix += str(path)
        if line_no is not None:
            prefix += f":{line_no}"
        super().__init__(f"{prefix}: {message}" if prefix else message)


class EmbeddingFormatError(HirError):
    """An embedding file is missing the magic bytes or is inconsistent."""


class PipelineError(HirError):
    """A pipeline stage received inputs that cannot produce a valid result."""
