"""Exception hierarchy shared by all flashtriage modules.

Plain argument problems raise ``ValueError``; the classes here cover
failures a caller may want to tell apart.
"""


class TriageError(Exception):
    """Base class for flashtriage errors."""


class IngestionError(TriageError):
    """The dump source could not be read to the end."""


class InsufficientDataError(TriageError, ValueError):
    """Payload is shorter than one entropy window."""


class HeaderError(TriageError):
    """A structural header could not be parsed at the requested offset."""


class TruncatedHeaderError(HeaderError):
    """The header, or the payload it declares, runs past the end of the image."""


class MalformedHeaderError(HeaderError):
    """Header fields violate the format's constraints."""


class CorpusError(TriageError):
    pass


class RecordValidationError(CorpusError, ValueError):
    """A ledger record violates its own invariants."""


class PersistenceError(CorpusError):
    """The corpus store could not be written or read."""


class ConflictError(CorpusError):
    """A second canonical dump was registered for one device model."""
