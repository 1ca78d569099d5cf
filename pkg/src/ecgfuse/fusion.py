"""Min-max normalization and column-wise concatenation of embedding sets.

The late-fusion recipe is: fit one scaler per source on training rows only,
scale each source with its own scaler, then concatenate rows. Zero-range
columns map to 0.0 so fused dimensionality is stable across splits, and
out-of-range values are deliberately not clamped (downstream trees split on
thresholds, so the ordering information matters more than the [0, 1] box).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ebf import EmbeddingSet
from .errors import AlignmentError, ValidationError

FUSED_TAG = "fused"


@dataclass(frozen=True)
class MinMaxScaler:
    """Per-feature minima/maxima observed on a training matrix."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        mins = np.ascontiguousarray(self.mins, dtype=np.float64)
        maxs = np.ascontiguousarray(self.maxs, dtype=np.float64)
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)
        if mins.ndim != 1 or maxs.shape != mins.shape:
            raise ValidationError("mins and maxs must be 1-D vectors of equal length")
        if not (np.isfinite(mins).all() and np.isfinite(maxs).all()):
            raise ValidationError("scaler bounds must be finite")
        if (mins > maxs).any():
            raise ValidationError("scaler has mins[j] > maxs[j]")

    @property
    def dim(self) -> int:
        return self.mins.shape[0]


def fit_minmax(train_features: np.ndarray) -> MinMaxScaler:
    """Column minima/maxima over the provided rows only."""
    x = np.asarray(train_features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise ValidationError("need a non-empty 2-D matrix to fit a scaler")
    if not np.isfinite(x).all():
        raise ValidationError("cannot fit a scaler on non-finite values")
    return MinMaxScaler(mins=x.min(axis=0), maxs=x.max(axis=0))


def apply_minmax(scaler: MinMaxScaler, features: np.ndarray) -> np.ndarray:
    """(x - min) / (max - min) per column; zero-range columns map to 0.0.

    Values outside the training range extrapolate below 0 / above 1.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != scaler.dim:
        raise ValidationError(
            "feature matrix has %s columns, scaler expects %d"
            % (x.shape[1] if x.ndim == 2 else "?", scaler.dim)
        )
    span = scaler.maxs - scaler.mins
    zero = span == 0.0
    safe_span = np.where(zero, 1.0, span)
    out = (x - scaler.mins) / safe_span
    out[:, zero] = 0.0
    return out


def scale_set(es: EmbeddingSet, scaler: MinMaxScaler) -> EmbeddingSet:
    """Apply a fitted scaler to a whole set, keeping ids/labels/tag."""
    scaled = apply_minmax(scaler, es.features).astype(np.float32)
    return EmbeddingSet(ids=es.ids, labels=es.labels, features=scaled,
                        source_tag=es.source_tag)


def fuse(a: EmbeddingSet, b: EmbeddingSet) -> EmbeddingSet:
    """Row-wise concatenation [a_row | b_row] of two pre-normalized sets.

    Inputs must already share ids (same order) and labels; run
    :func:`ecgfuse.ebf.align` first if they do not.
    """
    if a.ids != b.ids:
        raise AlignmentError("cannot fuse sets with different id sequences")
    if not np.array_equal(a.labels, b.labels):
        raise AlignmentError("cannot fuse sets with conflicting labels")
    features = np.concatenate([a.features, b.features], axis=1)
    return EmbeddingSet(ids=a.ids, labels=a.labels, features=features,
                        source_tag=FUSED_TAG)
