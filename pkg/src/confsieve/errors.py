"""Exception hierarchy shared across the package.

Everything raised on bad data derives from ConfsieveError so the CLI can
map it to a single "data error" exit status.
"""


class ConfsieveError(Exception):
    """Base class for all confsieve data errors."""


class TimestampOrderingError(ConfsieveError):
    """A timestamp went backwards where monotonicity is required."""


class VersionNotFoundError(ConfsieveError):
    """A version index or path does not exist in the store."""


class StoreFormatError(ConfsieveError):
    """A log file or store index is malformed or fails its checksum."""


class TraceParseError(ConfsieveError):
    """A trace line could not be parsed; message names the line number."""


class EmptyLogError(ConfsieveError):
    """An operation that needs at least one version was given none."""


class BinaryContentError(ConfsieveError):
    """Entry tracking was asked to analyze non-text content."""


class LabelMismatchError(ConfsieveError):
    """Score and label path sets disagree; message lists the missing paths."""
