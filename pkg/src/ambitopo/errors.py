"""Exception types shared across the package."""


class DegenerateInputError(ValueError):
    """Raised when an input is too degenerate to process (zero vector,
    duplicate point at zero distance, empty text)."""


class DimensionMismatchError(ValueError):
    """Raised when vectors of different dimensions are mixed."""


class EmbedderError(RuntimeError):
    """Raised when an embedding backend fails (unreachable service,
    malformed response, dimension drift across batches)."""
