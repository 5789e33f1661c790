"""Exception types shared across the package."""


class SolforgeError(Exception):
    """Base class for all package errors."""


class LexError(SolforgeError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset


class ParseError(SolforgeError):
    def __init__(self, message: str, offset: int = -1):
        super().__init__(message if offset < 0 else f"{message} at byte {offset}")
        self.offset = offset


class TooShort(SolforgeError):
    pass


class TooFew(SolforgeError):
    pass


class MissingInstruction(SolforgeError):
    pass


class SentinelInSource(SolforgeError):
    pass


class EmptyReference(SolforgeError):
    pass


class EmptySamples(SolforgeError):
    pass


class EmptyResults(SolforgeError):
    pass


class ToolSpawnError(SolforgeError):
    pass


class MappingGap(SolforgeError):
    """External detector id missing from the mapping table; recorded, never raised."""

    def __init__(self, detector_id: str):
        super().__init__(f"unmapped detector id {detector_id!r}")
        self.detector_id = detector_id


class SequenceTooLong(SolforgeError):
    pass


class TargetTruncated(SolforgeError):
    pass


class StageMismatch(SolforgeError):
    pass


class NonFiniteLoss(SolforgeError):
    def __init__(self, record_id: str, value: float):
        super().__init__(f"non-finite loss {value!r} on record {record_id!r}")
        self.record_id = record_id


class NotTrained(SolforgeError):
    pass


class CheckpointError(SolforgeError):
    pass
