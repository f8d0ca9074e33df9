"""Exception hierarchy shared by every emofuse module."""


class EmofuseError(Exception):
    """Base class for all errors raised by this package."""


# -- ingestion ---------------------------------------------------------------

class NotPcm16Error(EmofuseError):
    pass


class BadRateError(EmofuseError):
    pass


class BadChannelsError(EmofuseError):
    pass


class TruncatedError(EmofuseError):
    pass


class BadMagicError(EmofuseError):
    pass


class BadMaxvalError(EmofuseError):
    pass


class BadLineError(EmofuseError):
    pass


class EmptyError(EmofuseError):
    pass


# -- features ----------------------------------------------------------------

class TooShortError(EmofuseError):
    pass


class OutOfBoundsError(EmofuseError):
    pass


class ImageTooSmallError(EmofuseError):
    pass


class BadSizeError(EmofuseError):
    pass


# -- face detection ----------------------------------------------------------

class CascadeParseError(EmofuseError):
    pass


class EmptyStageError(EmofuseError):
    pass


class RectOutOfWindowError(EmofuseError):
    pass


# -- classifiers -------------------------------------------------------------

class DimMismatchError(EmofuseError):
    pass


class TooFewSamplesError(EmofuseError):
    pass


class KTooLargeError(EmofuseError):
    pass


class SingleClassError(EmofuseError):
    pass


class UnknownLabelError(EmofuseError):
    pass


class ModelIoError(EmofuseError):
    pass


class BadVersionError(EmofuseError):
    pass


class CorruptError(EmofuseError):
    pass


# -- fusion ------------------------------------------------------------------

class NoFramesError(EmofuseError):
    pass


class EmptyCountsError(EmofuseError):
    pass


class NoCasesError(EmofuseError):
    pass
