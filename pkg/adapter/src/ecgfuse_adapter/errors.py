"""Typed adapter errors."""


class AdapterError(Exception):
    """Base class for all adapter failures."""


class RecordError(AdapterError):
    """An ECG record file is missing, malformed, or has a bad shape/rate."""


class ManifestError(AdapterError):
    """The label manifest does not cover the input records."""


class CheckpointError(AdapterError):
    """Checkpoint unreadable or architecture/kind mismatch."""


class SplitDigestError(AdapterError):
    """An exported split plan failed its integrity digest check."""
