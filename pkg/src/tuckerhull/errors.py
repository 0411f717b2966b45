"""Exception types raised by the library."""


class TuckerHullError(Exception):
    """Base class for every error raised by tuckerhull."""


class DimensionMismatchError(TuckerHullError, ValueError):
    pass


class SizeCapError(TuckerHullError, MemoryError):
    """A dense representation was requested above the configured entry cap."""


class RankDeficiencyError(TuckerHullError, ValueError):
    """The data cannot support the requested number of basis vectors."""

    def __init__(self, mode, requested, attainable):
        self.mode = mode
        self.requested = requested
        self.attainable = attainable
        super().__init__(
            f"mode {mode}: requested {requested} basis vectors but the data "
            f"only supports rank {attainable}"
        )


class InvalidParameterError(TuckerHullError, ValueError):
    pass


class FormatError(TuckerHullError):
    """Base class for malformed persisted files.

    ``offset`` is the byte offset at which the problem was detected.
    """

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)


class MalformedHeaderError(FormatError):
    pass


class TruncatedPayloadError(FormatError):
    def __init__(self, message, offset=None, record=None):
        self.record = record
        if record is not None:
            message = f"{message} [record {record}]"
        super().__init__(message, offset)


class InconsistentDimensionError(FormatError):
    pass
