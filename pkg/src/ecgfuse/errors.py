"""Typed exceptions raised across the package.

Every failure surfaced to callers is an :class:`EcgfuseError` subclass, so
the CLI (and fuzz harnesses) can distinguish expected rejections from bugs.
"""


class EcgfuseError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(EcgfuseError):
    """Input data violates a documented invariant."""


class FormatError(EcgfuseError):
    """Byte stream is not a well-formed EBF document."""


class UnsupportedVersionError(FormatError):
    """EBF version byte is not one this reader understands."""


class TruncationError(FormatError):
    """Byte stream ends before the declared payload is complete."""


class SinkError(EcgfuseError):
    """Writing to a byte sink failed."""


class AlignmentError(EcgfuseError):
    """Two embedding sets cannot be brought onto shared records."""


class LabelConflictError(AlignmentError):
    """The same record id carries different labels in two sets."""


class StratificationError(EcgfuseError):
    """A class stratum is too small to split."""


class UndefinedMetricError(EcgfuseError):
    """Metric is undefined for the given labels (single-class input)."""


class DegenerateAffinityError(EcgfuseError):
    """Bandwidth search cannot bracket the perplexity target for a row."""


class ConfigError(EcgfuseError):
    """A configuration object or file violates its invariants."""
