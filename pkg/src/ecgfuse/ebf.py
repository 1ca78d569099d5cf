"""Embedding interchange format (EBF) and the in-memory dataset type.

EBF v1 byte layout, all integers little-endian:

====================  ==========================================
magic                 4 bytes, ASCII ``ECGE``
version               u8, value 1
n                     u32 record count
d                     u32 feature count
source_tag            u16 byte length, then UTF-8 bytes
id table              n entries: u16 byte length + UTF-8 bytes
labels                n bytes, each 0x00 or 0x01
features              n*d IEEE-754 binary32, row-major
====================  ==========================================

The writer is a pure function of the set (identical sets always produce
identical bytes) and the reader rejects, never repairs: any violation of
the :class:`EmbeddingSet` invariants surfaces as a typed error.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, TextIO, Union

import numpy as np

from .errors import (
    AlignmentError,
    FormatError,
    LabelConflictError,
    SinkError,
    TruncationError,
    UnsupportedVersionError,
    ValidationError,
)

MAGIC = b"ECGE"
VERSION = 1

_U16_MAX = 0xFFFF
_U32_MAX = 0xFFFFFFFF


@dataclass(frozen=True, eq=False)
class EmbeddingSet:
    """Record ids, binary labels and an n x d float32 feature matrix.

    Instances are immutable and validated on construction; every reader
    and generator in the package returns values of this type.
    """

    ids: tuple[str, ...]
    labels: np.ndarray
    features: np.ndarray
    source_tag: str = ""

    def __post_init__(self):
        ids = tuple(str(i) for i in self.ids)
        labels = np.ascontiguousarray(self.labels, dtype=np.uint8)
        features = np.ascontiguousarray(self.features, dtype=np.float32)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "features", features)
        self.labels.setflags(write=False)
        self.features.setflags(write=False)

        if features.ndim != 2:
            raise ValidationError("features must be a 2-D matrix")
        n, d = features.shape
        if n < 1:
            raise ValidationError("embedding set must contain at least one record")
        if d < 1:
            raise ValidationError("embedding set must have at least one feature")
        if len(ids) != n or labels.shape != (n,):
            raise ValidationError(
                "ids (%d), labels (%s) and feature rows (%d) must agree"
                % (len(ids), labels.shape, n)
            )
        bad_label = np.flatnonzero(labels > 1)
        if bad_label.size:
            raise ValidationError(
                "label at row %d is %d, expected 0 or 1" % (bad_label[0], labels[bad_label[0]])
            )
        finite = np.isfinite(features)
        if not finite.all():
            r, c = np.argwhere(~finite)[0]
            raise ValidationError("non-finite feature at row %d, column %d" % (r, c))
        if len(set(ids)) != n:
            seen = set()
            for rid in ids:
                if rid in seen:
                    raise ValidationError("duplicate record id %r" % rid)
                seen.add(rid)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def select(self, indices: Iterable[int]) -> "EmbeddingSet":
        """Subset by row positions (order of ``indices`` is preserved)."""
        idx = np.asarray(list(indices), dtype=np.int64)
        return EmbeddingSet(
            ids=tuple(self.ids[i] for i in idx),
            labels=self.labels[idx],
            features=self.features[idx],
            source_tag=self.source_tag,
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, EmbeddingSet):
            return NotImplemented
        return (
            self.ids == other.ids
            and self.source_tag == other.source_tag
            and np.array_equal(self.labels, other.labels)
            and self.features.shape == other.features.shape
            and self.features.tobytes() == other.features.tobytes()
        )

    def __repr__(self) -> str:
        return "EmbeddingSet(n=%d, d=%d, source_tag=%r)" % (self.n, self.dim, self.source_tag)


def encode_ebf(es: EmbeddingSet) -> bytes:
    """Serialize to EBF v1 bytes. Pure: same set, same bytes."""
    out = io.BytesIO()
    out.write(MAGIC)
    tag = es.source_tag.encode("utf-8")
    if len(tag) > _U16_MAX:
        raise ValidationError("source_tag exceeds %d encoded bytes" % _U16_MAX)
    if es.n > _U32_MAX or es.dim > _U32_MAX:
        raise ValidationError("set too large for EBF v1 header")
    out.write(struct.pack("<BII", VERSION, es.n, es.dim))
    out.write(struct.pack("<H", len(tag)))
    out.write(tag)
    for rid in es.ids:
        raw = rid.encode("utf-8")
        if len(raw) > _U16_MAX:
            raise ValidationError("record id %r exceeds %d encoded bytes" % (rid, _U16_MAX))
        out.write(struct.pack("<H", len(raw)))
        out.write(raw)
    out.write(es.labels.astype(np.uint8).tobytes())
    out.write(np.ascontiguousarray(es.features, dtype="<f4").tobytes())
    return out.getvalue()


def write_ebf(es: EmbeddingSet, destination: Union[str, Path, BinaryIO]) -> None:
    """Write the EBF encoding of ``es`` to a path or binary sink."""
    payload = encode_ebf(es)
    try:
        if isinstance(destination, (str, Path)):
            with open(destination, "wb") as fh:
                fh.write(payload)
        else:
            destination.write(payload)
    except OSError as exc:
        raise SinkError("write failed at byte offset 0 of %d: %s" % (len(payload), exc)) from exc


class _Cursor:
    """Bounds-checked reader over a byte buffer."""

    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, count: int, what: str) -> bytes:
        end = self.pos + count
        if end > len(self.buf):
            raise TruncationError(
                "truncated %s: expected %d bytes, have %d" % (what, end, len(self.buf))
            )
        chunk = self.buf[self.pos:end]
        self.pos = end
        return chunk

    def u8(self, what: str) -> int:
        return self.take(1, what)[0]

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def decode_ebf(buf: bytes) -> EmbeddingSet:
    """Parse EBF v1 bytes, rejecting any invariant violation."""
    cur = _Cursor(buf)
    magic = cur.take(4, "magic")
    if magic != MAGIC:
        raise FormatError("bad magic %r, expected %r" % (magic, MAGIC))
    version = cur.u8("version")
    if version != VERSION:
        raise UnsupportedVersionError("unsupported EBF version %d" % version)
    n = cur.u32("record count")
    d = cur.u32("feature count")
    if n < 1:
        raise ValidationError("header declares n=0 records")
    if d < 1:
        raise ValidationError("header declares d=0 features")
    tag_len = cur.u16("source_tag length")
    try:
        tag = cur.take(tag_len, "source_tag").decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError("source_tag is not valid UTF-8: %s" % exc) from exc
    ids = []
    for i in range(n):
        id_len = cur.u16("id %d length" % i)
        try:
            ids.append(cur.take(id_len, "id %d" % i).decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise FormatError("id %d is not valid UTF-8: %s" % (i, exc)) from exc
    label_bytes = cur.take(n, "labels")
    labels = np.frombuffer(label_bytes, dtype=np.uint8)
    feat_bytes = cur.take(4 * n * d, "feature payload")
    if cur.pos != len(buf):
        raise FormatError("%d trailing bytes after feature payload" % (len(buf) - cur.pos))
    features = np.frombuffer(feat_bytes, dtype="<f4").reshape(n, d)
    return EmbeddingSet(ids=tuple(ids), labels=labels, features=features, source_tag=tag)


def read_ebf(source: Union[str, Path, bytes, BinaryIO]) -> EmbeddingSet:
    """Read an EmbeddingSet from a path, bytes, or binary stream."""
    if isinstance(source, bytes):
        buf = source
    elif isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            buf = fh.read()
    else:
        buf = source.read()
    return decode_ebf(buf)


def read_csv(source: Union[str, Path, TextIO], source_tag: str = "csv") -> EmbeddingSet:
    """Read the human-editable fixture format.

    Header must be exactly ``id,label,f0,...,f{d-1}``; one record per line;
    no quoting or escaping. Errors report 1-based line numbers.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = source.read()
    lines = text.splitlines()
    while lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ValidationError("line 1: empty input, expected header")
    header = lines[0].split(",")
    if len(header) < 3 or header[0] != "id" or header[1] != "label":
        raise ValidationError('line 1: header must start with "id,label,f0"')
    d = len(header) - 2
    for j, name in enumerate(header[2:]):
        if name != "f%d" % j:
            raise ValidationError("line 1: feature column %d must be named f%d, got %r" % (j, j, name))
    ids = []
    labels = []
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != d + 2:
            raise ValidationError(
                "line %d: expected %d columns, got %d" % (lineno, d + 2, len(cells))
            )
        ids.append(cells[0])
        if cells[1] == "0":
            labels.append(0)
        elif cells[1] == "1":
            labels.append(1)
        else:
            raise ValidationError("line %d: label must be 0 or 1, got %r" % (lineno, cells[1]))
        try:
            row = [float(c) for c in cells[2:]]
        except ValueError as exc:
            raise ValidationError("line %d: %s" % (lineno, exc)) from exc
        if not all(np.isfinite(row)):
            raise ValidationError("line %d: non-finite feature value" % lineno)
        rows.append(row)
    if not rows:
        raise ValidationError("line 2: no data rows")
    features = np.asarray(rows, dtype=np.float64).astype(np.float32)
    return EmbeddingSet(ids=tuple(ids), labels=np.asarray(labels, dtype=np.uint8),
                        features=features, source_tag=source_tag)


def align(a: EmbeddingSet, b: EmbeddingSet) -> tuple[EmbeddingSet, EmbeddingSet]:
    """Restrict both sets to their shared ids, sorted lexicographically.

    Labels for a shared id must agree between the inputs; the outputs have
    identical id and label sequences, so they are ready for :func:`fuse`.
    """
    pos_a = {rid: i for i, rid in enumerate(a.ids)}
    pos_b = {rid: i for i, rid in enumerate(b.ids)}
    shared = sorted(set(pos_a) & set(pos_b))
    if not shared:
        raise AlignmentError("no shared record ids between %r and %r" % (a.source_tag, b.source_tag))
    for rid in shared:
        if a.labels[pos_a[rid]] != b.labels[pos_b[rid]]:
            raise LabelConflictError("conflicting labels for record id %r" % rid)
    take_a = [pos_a[r] for r in shared]
    take_b = [pos_b[r] for r in shared]
    return a.select(take_a), b.select(take_b)
