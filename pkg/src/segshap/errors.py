"""Exception hierarchy shared by every segshap module."""


class SegshapError(Exception):
    """Base class for all segshap errors."""


# ingestion -----------------------------------------------------------------


class ParseError(SegshapError, ValueError):
    pass


class MalformedHeader(ParseError):
    pass


class UnsupportedFeature(ParseError):
    pass


class DataRowMismatch(ParseError):
    pass


class NonDivisibleColumns(ParseError):
    pass


class NonNumericValue(ParseError):
    pass


class EmptyData(SegshapError, ValueError):
    pass


class InvalidGeometry(SegshapError, ValueError):
    pass


class ShapeMismatch(SegshapError, ValueError):
    pass


# segmentation --------------------------------------------------------------


class InvalidCount(SegshapError, ValueError):
    pass


class SeriesTooShort(SegshapError, ValueError):
    pass


class DegenerateSignal(UserWarning):
    """Issued when a segmentation method falls back to an equal split."""


# models --------------------------------------------------------------------


class MissingClass(SegshapError, ValueError):
    pass


class ExternalProtocolError(SegshapError, RuntimeError):
    """An external classifier process misbehaved or reported an error."""


class HandshakeFailure(ExternalProtocolError):
    pass


class ProtocolViolation(ExternalProtocolError):
    pass


class ProcessExit(ExternalProtocolError):
    pass


# attribution ---------------------------------------------------------------


class InvalidFeature(SegshapError, ValueError):
    pass


class TooManyFeatures(SegshapError, ValueError):
    pass


class InvalidPermutationCount(SegshapError, ValueError):
    pass


# evaluation ----------------------------------------------------------------


class ZeroBaseProbability(SegshapError, ValueError):
    pass


class SingleClassDataset(SegshapError, ValueError):
    pass


# runner --------------------------------------------------------------------


class ConfigInvalid(SegshapError, ValueError):
    pass


class DatasetLoadError(SegshapError, OSError):
    pass


class EmptyAfterFiltering(SegshapError, ValueError):
    pass


class UnpairedRecords(SegshapError, ValueError):
    pass
