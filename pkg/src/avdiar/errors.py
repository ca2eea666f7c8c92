class AvdiarError(Exception):
    """Base class for every error raised by this package."""


class IngestError(AvdiarError, ValueError):
    def __init__(self, message: str, *, path=None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class MalformedCue(IngestError):
    pass


class MalformedTimestamp(MalformedCue):
    pass


class NonMonotonicIndex(IngestError):
    pass


class DimensionMismatch(IngestError):
    pass


class DuplicateId(IngestError):
    pass


class MissingUtterance(IngestError):
    pass


class GapOrOverlapBetweenShots(IngestError):
    pass


class UnknownUtteranceId(IngestError):
    pass


class ImageTooSmall(AvdiarError, ValueError):
    pass


class GeometryMismatch(AvdiarError, ValueError):
    pass


class PairNotInPatternSet(AvdiarError, KeyError):
    pass


class InvalidP(AvdiarError, ValueError):
    pass


class SizeGuardExceeded(AvdiarError, ValueError):
    pass


class OrderMismatch(AvdiarError, ValueError):
    pass


class EmptyCluster(AvdiarError, ValueError):
    pass


class UniverseMismatch(AvdiarError, ValueError):
    pass


class FusionDegenerate(AvdiarError):
    pass


class MissingReference(AvdiarError, KeyError):
    pass


class EmptyScoredSet(AvdiarError, ValueError):
    pass
