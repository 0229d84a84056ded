"""Exception hierarchy.

Everything raised for bad input derives from :class:`ValidationError` so the
command line layer can map it to exit code 2.
"""


class AceError(Exception):
    pass


class ValidationError(AceError, ValueError):
    pass


class ShapeMismatch(ValidationError):
    pass


class NonFiniteInput(ValidationError):
    pass


class FieldTooSmall(ValidationError):
    pass


class DegenerateRange(ValidationError):
    pass


class EvenKernel(ValidationError):
    pass


class NegativeInput(ValidationError):
    pass


class InvalidParameter(ValidationError):
    pass


class InvalidSpec(ValidationError):
    pass


class InvalidRange(ValidationError):
    pass


class ArrayFormatError(ValidationError):
    """Malformed array file. ``offset`` is the byte position of the problem."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class BadMagic(ArrayFormatError):
    pass


class UnsupportedDtype(ArrayFormatError):
    pass


class FortranOrderUnsupported(ArrayFormatError):
    pass


class TruncatedPayload(ArrayFormatError):
    pass
