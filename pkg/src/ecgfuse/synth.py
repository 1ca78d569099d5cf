"""Statistics-matched synthetic embedding pairs with a closed-form oracle.

Two class-conditional Gaussian "views" share labels and record ids. View A
carries a class-mean shift of +/- dprime_a/2 along its axis 0, view B the
same along its own axis 0, so the two signals live in orthogonal subspaces
("complementary information"). With unit isotropic noise the Bayes-optimal
AUROC of a single view is Phi(dprime/sqrt(2)) and of the concatenated views
Phi(sqrt(dprime_a^2 + dprime_b^2)/sqrt(2)), which gives the benchmark an
analytic ground truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ebf import EmbeddingSet
from .errors import ConfigError
from .rng import Xoshiro256StarStar


@dataclass(frozen=True)
class SynthConfig:
    """Generation parameters; record counts default to the benchmark sizes."""

    n_records: int = 5813
    n_pos: int = 1207
    dim_a: int = 64
    dim_b: int = 64
    dprime_a: float = 1.0
    dprime_b: float = 1.0
    noise_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.n_records, int) or self.n_records < 2:
            raise ConfigError("n_records must be an integer >= 2")
        if not isinstance(self.n_pos, int) or not 1 <= self.n_pos < self.n_records:
            raise ConfigError("need 1 <= n_pos < n_records")
        if not isinstance(self.dim_a, int) or self.dim_a < 1:
            raise ConfigError("dim_a must be a positive integer")
        if not isinstance(self.dim_b, int) or self.dim_b < 1:
            raise ConfigError("dim_b must be a positive integer")
        if self.dprime_a < 0 or self.dprime_b < 0:
            raise ConfigError("dprime values must be non-negative")
        if not self.noise_scale > 0:
            raise ConfigError("noise_scale must be positive")
        if not isinstance(self.seed, int) or not 0 <= self.seed < (1 << 64):
            raise ConfigError("seed must fit in 64 unsigned bits")


def generate(config: SynthConfig) -> tuple[EmbeddingSet, EmbeddingSet]:
    """Deterministic (labels, view A, view B) from one seed.

    Draw order from the seeded generator: label shuffle, then view A noise
    (row-major), then view B noise. Ids are rec_000000... shared by both
    views, and labels contain exactly n_pos ones.
    """
    n = config.n_records
    rng = Xoshiro256StarStar(config.seed)
    labels = [1] * config.n_pos + [0] * (n - config.n_pos)
    rng.shuffle(labels)
    labels = np.asarray(labels, dtype=np.uint8)
    ids = tuple("rec_%06d" % i for i in range(n))
    sign = np.where(labels == 1, 1.0, -1.0)

    def view(dim: int, dprime: float, tag: str) -> EmbeddingSet:
        noise = rng.normals(n * dim).reshape(n, dim) * config.noise_scale
        noise[:, 0] += sign * (dprime / 2.0)
        return EmbeddingSet(ids=ids, labels=labels,
                            features=noise.astype(np.float32), source_tag=tag)

    set_a = view(config.dim_a, config.dprime_a, "synth-a")
    set_b = view(config.dim_b, config.dprime_b, "synth-b")
    return set_a, set_b


def bayes_auroc(dprime: float) -> float:
    """AUROC of the Bayes-optimal scorer for unit-variance Gaussian classes.

    Phi(dprime / sqrt(2)), evaluated through the complementary error
    function.
    """
    if dprime < 0:
        raise ConfigError("dprime must be non-negative")
    return 0.5 * math.erfc(-dprime / 2.0)


def fused_dprime(dprime_a: float, dprime_b: float) -> float:
    """Effective separation of two orthogonal unit-noise signals."""
    return math.hypot(dprime_a, dprime_b)
