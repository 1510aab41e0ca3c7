"""Exception types shared across the pipeline."""


class MemeclfError(Exception):
    """Base class for all package errors."""


class FormatError(MemeclfError):
    """A binary file does not carry the expected magic/version/flags."""


class CorruptionError(MemeclfError):
    """A binary file is truncated or fails its checksum."""


class IntegrityError(MemeclfError):
    """Duplicate ids or inconsistent record bookkeeping."""


class AlignmentError(MemeclfError):
    """Two id-keyed collections do not cover the same id set."""


class ShapeError(MemeclfError):
    """Array dimensions do not match the operation's contract."""


class EmptyIndexError(MemeclfError):
    """A query was issued against an index with no rows."""


class UndefinedMetricError(MemeclfError):
    """A metric has no defined value for the given inputs."""


class DependencyError(MemeclfError):
    """A pipeline step is missing an artifact a previous step produces."""
