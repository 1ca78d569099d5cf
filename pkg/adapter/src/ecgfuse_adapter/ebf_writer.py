"""Independent writer for the EBF v1 byte layout.

The byte format is the contract between this adapter and the evaluation
engine, so the adapter carries its own encoder; outputs are verified with
the engine's reader before an extraction job finishes.

Layout (little-endian): magic "ECGE", version u8=1, n u32, d u32,
source_tag (u16 length + UTF-8), n ids (u16 length + UTF-8 each),
n label bytes, n*d float32 features row-major.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np


def write_ebf_file(path: Path, ids, labels, features: np.ndarray, source_tag: str) -> None:
    features = np.ascontiguousarray(features, dtype="<f4")
    n, d = features.shape
    parts = [b"ECGE", struct.pack("<BII", 1, n, d)]
    tag = source_tag.encode("utf-8")
    parts.append(struct.pack("<H", len(tag)))
    parts.append(tag)
    for rid in ids:
        raw = str(rid).encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
    parts.append(bytes(int(l) for l in labels))
    parts.append(features.tobytes())
    Path(path).write_bytes(b"".join(parts))
