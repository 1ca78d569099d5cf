"""Batch embedding extraction from a checkpoint over a record directory."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from ecgfuse import read_ebf

from .ebf_writer import write_ebf_file
from .encoders import MODEL_KINDS, POOLING, load_checkpoint
from .errors import CheckpointError, RecordError
from .records import check_manifest_covers, discover_records, load_record, read_manifest

log = logging.getLogger("ecgfuse_adapter")


@dataclass
class ExtractionJob:
    model_kind: str
    checkpoint: Path
    records_dir: Path
    manifest: Path
    output: Path
    device: str = "cpu"
    batch_size: int = 64
    on_error: str = "fail"  # or "skip"

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise CheckpointError("model_kind must be one of %s" % (MODEL_KINDS,))
        if self.on_error not in ("fail", "skip"):
            raise ValueError('on_error must be "fail" or "skip"')


def _load_records(job: ExtractionJob):
    labels = read_manifest(job.manifest)
    paths = discover_records(job.records_dir)
    check_manifest_covers(labels, paths.keys())
    ids = []
    arrays = []
    for rid in sorted(paths):
        try:
            arrays.append(load_record(paths[rid]))
        except RecordError as exc:
            if job.on_error == "fail":
                raise
            log.warning("skipping record %s: %s", rid, exc)
            continue
        ids.append(rid)
    if not ids:
        raise RecordError("no readable records under %s" % job.records_dir)
    return ids, arrays, labels


def extract_embeddings(job: ExtractionJob) -> Path:
    """Run inference and write one embedding row per record.

    Records are processed in id order, batched among records of equal
    length (sampling rates may be mixed). The output EBF is re-read with
    the engine's reader before returning, so a path that completes has
    produced a valid file.
    """
    ids, arrays, labels = _load_records(job)
    model_kind, _, model = load_checkpoint(job.checkpoint, job.device)
    if model_kind != job.model_kind:
        raise CheckpointError("job expects %s but checkpoint holds %s"
                              % (job.model_kind, model_kind))

    rows: dict[str, np.ndarray] = {}
    by_length: dict[int, list[int]] = {}
    for i, arr in enumerate(arrays):
        by_length.setdefault(arr.shape[1], []).append(i)
    with torch.no_grad():
        for length in sorted(by_length):
            members = by_length[length]
            for lo in range(0, len(members), job.batch_size):
                chunk = members[lo:lo + job.batch_size]
                batch = torch.from_numpy(np.stack([arrays[i] for i in chunk]))
                out = model(batch.to(job.device)).cpu().numpy().astype(np.float32)
                for local, i in enumerate(chunk):
                    rows[ids[i]] = out[local]

    features = np.stack([rows[rid] for rid in ids])
    tag = "%s+%s" % (job.model_kind, POOLING[job.model_kind])
    write_ebf_file(job.output, ids, [labels[r] for r in ids], features, tag)

    validated = read_ebf(job.output)
    if validated.n != len(ids) or validated.dim != features.shape[1]:
        raise RecordError("engine reader disagrees with written shape for %s" % job.output)
    return Path(job.output)
