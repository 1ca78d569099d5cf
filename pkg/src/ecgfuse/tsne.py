"""Exact (O(n^2)) t-SNE for qualitative embedding comparison.

Per-row Gaussian bandwidths are found by bisection in log-sigma space until
the conditional entropy matches log2(perplexity); affinities are
symmetrized, floored at 1e-12 off the diagonal, and renormalized. The 2-D
layout minimizes KL(P||Q) with Student-t (1 dof) low-dimensional
affinities, plain momentum gradient descent, and early exaggeration.
Everything is deterministic for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from .ebf import EmbeddingSet
from .errors import ConfigError, DegenerateAffinityError, SinkError, ValidationError
from .rng import Xoshiro256StarStar

AFFINITY_FLOOR = 1e-12
ENTROPY_TOL = 1e-5
MAX_BISECTIONS = 50
_MAX_BRACKET = 64


@dataclass(frozen=True)
class TsneConfig:
    """Layout hyperparameters (canonical defaults, all logged in reports)."""

    perplexity: float = 30.0
    n_iter: int = 1000
    learning_rate: float = 200.0
    early_exaggeration_factor: float = 12.0
    early_exaggeration_iters: int = 250
    momentum_initial: float = 0.5
    momentum_final: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not self.perplexity > 1.0:
            raise ConfigError("perplexity must exceed 1")
        if not isinstance(self.n_iter, int) or self.n_iter < 1:
            raise ConfigError("n_iter must be a positive integer")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if not self.early_exaggeration_factor > 0:
            raise ConfigError("early_exaggeration_factor must be positive")
        if not isinstance(self.early_exaggeration_iters, int) or self.early_exaggeration_iters < 0:
            raise ConfigError("early_exaggeration_iters must be a non-negative integer")
        if not (self.momentum_initial > 0 and self.momentum_final > 0):
            raise ConfigError("momentum values must be positive")
        if not isinstance(self.seed, int) or not 0 <= self.seed < (1 << 64):
            raise ConfigError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class Embedding2D:
    """2-D coordinates with the labels/ids they belong to."""

    coords: np.ndarray
    labels: np.ndarray
    ids: tuple[str, ...]

    def __post_init__(self):
        coords = np.ascontiguousarray(self.coords, dtype=np.float64)
        labels = np.ascontiguousarray(self.labels, dtype=np.uint8)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "ids", tuple(str(i) for i in self.ids))
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ValidationError("coords must be an n x 2 matrix")
        n = coords.shape[0]
        if labels.shape != (n,) or len(self.ids) != n:
            raise ValidationError("coords, labels and ids must agree in length")
        if not np.isfinite(coords).all():
            raise ValidationError("coords must be finite")


def subsample_balanced(es: EmbeddingSet, per_class: int, seed: int) -> EmbeddingSet:
    """Exactly per_class rows of each label, original row order preserved.

    Class 0 then class 1 draw Fisher-Yates prefixes from one seeded
    generator; the union of chosen indices is emitted ascending.
    """
    if per_class < 1:
        raise ValidationError("per_class must be at least 1")
    rng = Xoshiro256StarStar(seed)
    chosen = []
    for cls in (0, 1):
        stratum = np.flatnonzero(es.labels == cls)
        if stratum.size < per_class:
            raise ValidationError(
                "class %d has %d member(s), need %d" % (cls, stratum.size, per_class)
            )
        chosen.append(stratum[rng.choose(stratum.size, per_class)])
    keep = np.sort(np.concatenate(chosen))
    return es.select(keep)


def _squared_distances(X: np.ndarray) -> np.ndarray:
    norms = np.einsum("ij,ij->i", X, X)
    d2 = norms[:, None] + norms[None, :] - 2.0 * (X @ X.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def _row_entropy_bits(dist_row: np.ndarray, beta: float):
    """Entropy (bits) and conditionals for p_j ~ exp(-beta * d_j)."""
    shifted = dist_row - dist_row.min()
    w = np.exp(-beta * shifted)
    z = w.sum()
    p = w / z
    h_nats = math.log(z) + beta * float(np.dot(shifted, p))
    return h_nats / math.log(2.0), p


def conditional_affinities(X, perplexity: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-row conditional distributions matching the perplexity target.

    For each row the precision beta = 1/(2 sigma^2) is bracketed by
    doubling/halving and then bisected in log space (geometric midpoint,
    at most 50 steps) until the conditional entropy is within 1e-5 bits of
    log2(perplexity). Returns the n x n conditional matrix (rows sum to 1,
    zero diagonal) and the per-row betas.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 3:
        raise ValidationError("need an n x d matrix with n >= 3")
    if not np.isfinite(X).all():
        raise ValidationError("rows must be finite")
    n = X.shape[0]
    if not 1.0 < perplexity <= n - 1:
        raise ConfigError("perplexity must satisfy 1 < perplexity <= n - 1")
    target = math.log2(perplexity)
    d2 = _squared_distances(X)
    others = ~np.eye(n, dtype=bool)

    p_cond = np.zeros((n, n), dtype=np.float64)
    betas = np.empty(n, dtype=np.float64)
    for i in range(n):
        row = d2[i][others[i]]
        # anchor the search at the row's distance scale so a rescaled input
        # walks a rescaled (for powers of two: bit-identical) search path
        med = float(np.median(row))
        beta = 1.0 / med if med > 0.0 else 1.0
        entropy, p = _row_entropy_bits(row, beta)
        if abs(entropy - target) > ENTROPY_TOL:
            # entropy decreases monotonically in beta; bracket the target
            lo = hi = beta
            if entropy > target:
                for _ in range(_MAX_BRACKET):
                    hi *= 2.0
                    entropy, p = _row_entropy_bits(row, hi)
                    if abs(entropy - target) <= ENTROPY_TOL or entropy <= target:
                        break
                else:
                    raise DegenerateAffinityError(
                        "row %d: cannot bracket perplexity %.6g (duplicate-heavy input?)"
                        % (i, perplexity)
                    )
                beta = hi
            else:
                for _ in range(_MAX_BRACKET):
                    lo *= 0.5
                    entropy, p = _row_entropy_bits(row, lo)
                    if abs(entropy - target) <= ENTROPY_TOL or entropy >= target:
                        break
                else:
                    raise DegenerateAffinityError(
                        "row %d: cannot bracket perplexity %.6g" % (i, perplexity)
                    )
                beta = lo
            for _ in range(MAX_BISECTIONS):
                if abs(entropy - target) <= ENTROPY_TOL:
                    break
                mid = math.sqrt(lo * hi)
                entropy, p = _row_entropy_bits(row, mid)
                beta = mid
                if entropy > target:
                    lo = mid
                else:
                    hi = mid
        betas[i] = beta
        p_cond[i][others[i]] = p
    return p_cond, betas


def pairwise_affinities(X, perplexity: float) -> np.ndarray:
    """Symmetrized joint affinities: P = (P_cond + P_cond^T) / (2n).

    Off-diagonal entries are floored at 1e-12 and the matrix renormalized,
    so P is symmetric, non-negative, sums to 1, and never feeds a log(0).
    """
    p_cond, _ = conditional_affinities(X, perplexity)
    n = p_cond.shape[0]
    p = (p_cond + p_cond.T) / (2.0 * n)
    np.maximum(p, AFFINITY_FLOOR, out=p)
    np.fill_diagonal(p, 0.0)
    p /= p.sum()
    return p


def _student_t_affinities(Y: np.ndarray):
    d2 = _squared_distances(Y)
    w = 1.0 / (1.0 + d2)
    np.fill_diagonal(w, 0.0)
    q = w / w.sum()
    return q, w


def kl_divergence(P: np.ndarray, Q: np.ndarray) -> float:
    """KL(P||Q) over off-diagonal entries, with the 1e-12 floor on Q."""
    q = np.maximum(Q, AFFINITY_FLOOR)
    mask = P > 0.0
    return float(np.sum(P[mask] * np.log(P[mask] / q[mask])))


def tsne_embed(X, config: TsneConfig, return_trace: bool = False):
    """Standard t-SNE gradient descent; n x 2 coordinates.

    Initialization is seeded Gaussian noise with standard deviation 1e-4;
    P is multiplied by the exaggeration factor for the first
    early_exaggeration_iters iterations, and momentum steps up from
    momentum_initial to momentum_final when exaggeration ends. With
    ``return_trace`` the KL divergence against the true (un-exaggerated) P
    is recorded every 50 iterations and at the last iteration.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    P = pairwise_affinities(X, config.perplexity)
    n = P.shape[0]
    rng = Xoshiro256StarStar(config.seed)
    Y = rng.normals(2 * n).reshape(n, 2) * 1e-4
    velocity = np.zeros_like(Y)
    trace: list[tuple[int, float]] = []

    for it in range(config.n_iter):
        exaggerating = it < config.early_exaggeration_iters
        q, w = _student_t_affinities(Y)
        p_eff = P * config.early_exaggeration_factor if exaggerating else P
        m = (p_eff - q) * w
        grad = 4.0 * (m.sum(axis=1)[:, None] * Y - m @ Y)
        momentum = config.momentum_initial if exaggerating else config.momentum_final
        if return_trace and it % 50 == 0:
            trace.append((it, kl_divergence(P, q)))
        velocity = momentum * velocity - config.learning_rate * grad
        Y = Y + velocity

    if not np.isfinite(Y).all():
        raise ValidationError("layout diverged to non-finite coordinates")
    if return_trace:
        q, _ = _student_t_affinities(Y)
        trace.append((config.n_iter, kl_divergence(P, q)))
    if return_trace:
        return Y, trace
    return Y


def embed_set(es: EmbeddingSet, config: TsneConfig) -> Embedding2D:
    """Run t-SNE on a whole embedding set, carrying ids and labels along."""
    coords = tsne_embed(es.features, config)
    return Embedding2D(coords=coords, labels=es.labels, ids=es.ids)


# scatter rendering: one circle per point, two class colors, bbox + 5% margin

_CLASS_COLORS = {0: "#1f77b4", 1: "#d62728"}
_CLASS_NAMES = {0: "non-ACS", 1: "ACS"}
_VIEW_W = 800.0
_VIEW_H = 600.0


def export_scatter_svg(emb: Embedding2D, destination: Union[str, Path, BinaryIO]) -> None:
    """Standalone deterministic SVG scatter of a 2-D embedding."""
    coords = emb.coords
    x_min, y_min = coords.min(axis=0)
    x_max, y_max = coords.max(axis=0)
    pad_x = 0.05 * (x_max - x_min) or 1.0
    pad_y = 0.05 * (y_max - y_min) or 1.0
    x_lo, x_hi = x_min - pad_x, x_max + pad_x
    y_lo, y_hi = y_min - pad_y, y_max + pad_y

    def sx(x: float) -> float:
        return (x - x_lo) / (x_hi - x_lo) * _VIEW_W

    def sy(y: float) -> float:
        # SVG y axis points down
        return _VIEW_H - (y - y_lo) / (y_hi - y_lo) * _VIEW_H

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
        'viewBox="0 0 %d %d">' % (_VIEW_W, _VIEW_H, _VIEW_W, _VIEW_H),
        '<rect x="0.5" y="0.5" width="%.1f" height="%.1f" fill="white" '
        'stroke="#333333" stroke-width="1"/>' % (_VIEW_W - 1, _VIEW_H - 1),
    ]
    for (x, y), label in zip(coords, emb.labels):
        parts.append(
            '<circle cx="%.3f" cy="%.3f" r="3" fill="%s" fill-opacity="0.75"/>'
            % (sx(float(x)), sy(float(y)), _CLASS_COLORS[int(label)])
        )
    legend_y = 24.0
    for cls in (1, 0):
        parts.append(
            '<g><circle cx="%.1f" cy="%.1f" r="5" fill="%s"/>'
            '<text x="%.1f" y="%.1f" font-family="sans-serif" font-size="14">%s</text></g>'
            % (_VIEW_W - 130, legend_y, _CLASS_COLORS[cls],
               _VIEW_W - 118, legend_y + 5, _CLASS_NAMES[cls])
        )
        legend_y += 22.0
    parts.append("</svg>")
    payload = "\n".join(parts).encode("utf-8")
    try:
        if isinstance(destination, (str, Path)):
            with open(destination, "wb") as fh:
                fh.write(payload)
        else:
            destination.write(payload)
    except OSError as exc:
        raise SinkError("scatter write failed: %s" % exc) from exc


def export_coords_csv(emb: Embedding2D, destination: Union[str, Path]) -> None:
    """Write coordinates as "id,label,x,y" with round-trip float precision."""
    lines = ["id,label,x,y"]
    for rid, label, (x, y) in zip(emb.ids, emb.labels, emb.coords):
        lines.append("%s,%d,%r,%r" % (rid, label, float(x), float(y)))
    Path(destination).write_text("\n".join(lines) + "\n", encoding="utf-8")
