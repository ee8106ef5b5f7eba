"""Exception types shared across the package."""


class MotiMemError(Exception):
    """Base class for every library-raised error."""


class DimensionMismatch(MotiMemError):
    """Shapes of related inputs (frame, mask, comparison frame) disagree."""


class EmptyStream(MotiMemError):
    """A bitstream metric was requested on a zero-length stream."""


class UndefinedRatio(MotiMemError):
    """Normalized density is undefined because the raw stream has no set bits."""


class TooShort(MotiMemError):
    """Transition activity needs at least two words."""


class Misaligned(MotiMemError):
    """Stream length is not a whole number of words."""


class ParseError(MotiMemError):
    """Malformed input file.

    Carries ``offset`` (byte offset, binary formats) or ``line`` (1-based,
    line-delimited formats) pointing at the failure.
    """

    def __init__(self, message: str, *, offset: int | None = None, line: int | None = None):
        self.offset = offset
        self.line = line
        if offset is not None:
            message = f"{message} [byte offset {offset}]"
        elif line is not None:
            message = f"{message} [line {line}]"
        super().__init__(message)


class UnsupportedMaxval(MotiMemError):
    """Netpbm maxval is not of the form 2**bit_width - 1."""


class BadMagic(MotiMemError):
    """Container file does not start with the expected magic bytes."""


class UnsupportedVersion(MotiMemError):
    """Container version is not one this reader understands."""


class LengthMismatch(MotiMemError):
    """Container payload length disagrees with its header."""


class OrderError(MotiMemError):
    """Frame indices regress within a detection record file."""

    def __init__(self, message: str, *, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"{message} [line {line}]"
        super().__init__(message)


class AlignmentError(MotiMemError):
    """Frame and detection sequences disagree on indices or shape."""
