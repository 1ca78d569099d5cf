"""ECG record and label-manifest IO.

A record is a .npy file holding a float array of shape (12, samples) with
samples in {4000, 5000} (10 seconds at 400 or 500 Hz); the file stem is the
record id. The manifest is a two-column CSV "id,label" whose ids must cover
every record in the input directory.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ManifestError, RecordError

N_LEADS = 12
VALID_SAMPLE_COUNTS = (4000, 5000)  # 10 s at 400 / 500 Hz


def load_record(path: Path) -> np.ndarray:
    try:
        arr = np.load(path)
    except Exception as exc:
        raise RecordError("cannot read record %s: %s" % (path, exc)) from exc
    if arr.ndim != 2 or arr.shape[0] != N_LEADS:
        raise RecordError("record %s has shape %s, expected (12, samples)"
                          % (path.name, arr.shape))
    if arr.shape[1] not in VALID_SAMPLE_COUNTS:
        raise RecordError(
            "record %s has %d samples, expected one of %s (10 s at 400/500 Hz)"
            % (path.name, arr.shape[1], VALID_SAMPLE_COUNTS))
    if not np.isfinite(arr).all():
        raise RecordError("record %s contains non-finite samples" % path.name)
    return np.ascontiguousarray(arr, dtype=np.float32)


def discover_records(records_dir: Path) -> dict[str, Path]:
    """Map record id (file stem) to path, sorted by id."""
    records_dir = Path(records_dir)
    if not records_dir.is_dir():
        raise RecordError("records directory %s does not exist" % records_dir)
    found = sorted(records_dir.glob("*.npy"))
    if not found:
        raise RecordError("no .npy records under %s" % records_dir)
    return {p.stem: p for p in found}


def read_manifest(path: Path) -> dict[str, int]:
    """Parse the "id,label" CSV; labels must be 0 or 1."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    while lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != "id,label":
        raise ManifestError('manifest %s must start with header "id,label"' % path)
    labels: dict[str, int] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 2:
            raise ManifestError("manifest line %d: expected 2 columns" % lineno)
        rid, raw = cells
        if raw not in ("0", "1"):
            raise ManifestError("manifest line %d: label must be 0 or 1" % lineno)
        if rid in labels:
            raise ManifestError("manifest line %d: duplicate id %r" % (lineno, rid))
        labels[rid] = int(raw)
    return labels


def check_manifest_covers(labels: dict[str, int], record_ids) -> None:
    missing = sorted(set(record_ids) - set(labels))
    if missing:
        preview = ", ".join(missing[:5])
        raise ManifestError("manifest misses %d record id(s): %s%s"
                            % (len(missing), preview,
                               "..." if len(missing) > 5 else ""))
