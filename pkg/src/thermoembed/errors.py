"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument or configuration violates its documented contract."""


class DataFormatError(ValueError):
    """A file on disk is missing, truncated, or not in the expected format."""


class MetadataMismatchError(ValueError):
    """Two artifacts (or an artifact and its upstream stage) disagree on configuration."""
