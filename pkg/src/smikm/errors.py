"""Exception hierarchy shared across the package."""


class SmikmError(Exception):
    """Base class for every error raised by smikm."""


class DecodeError(SmikmError):
    pass


class ChannelError(SmikmError):
    pass


class DimensionMismatch(SmikmError, ValueError):
    pass


class ParameterError(SmikmError, ValueError):
    pass


class DegenerateImage(SmikmError):
    """Raised when an image or patch carries zero total mass."""


class TooSmall(SmikmError, ValueError):
    pass


class EmptyResult(SmikmError):
    """Raised by the keypoint detector when no extremum passes the threshold."""


class NotEnoughData(SmikmError, ValueError):
    pass


class VocabMismatch(SmikmError):
    pass


class IndexFormatError(SmikmError):
    pass


class FormatVersionError(IndexFormatError):
    pass


class ChecksumError(IndexFormatError):
    pass


class LayoutError(SmikmError):
    pass


class PipelineError(SmikmError):
    pass
