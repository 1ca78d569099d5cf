"""Checkpoint-to-EBF bridge and raw-signal baseline for the ecgfuse engine."""

__version__ = "0.1.0"

from .baseline import BaselineConfig, ResNet1d, read_scores_csv, resnet50_1d, train_baseline
from .encoders import (
    EcgFmEncoder,
    MODEL_KINDS,
    StMemEncoder,
    build_encoder,
    load_checkpoint,
    save_checkpoint,
)
from .errors import (
    AdapterError,
    CheckpointError,
    ManifestError,
    RecordError,
    SplitDigestError,
)
from .extract import ExtractionJob, extract_embeddings
from .records import discover_records, load_record, read_manifest
from .splits import IdSplit, compute_ids_digest, load_split_plan

__all__ = [name for name in dir() if not name.startswith("_")]
