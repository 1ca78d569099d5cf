"""Stratified 80/20 reshuffling and the multi-arm benchmark driver.

Every repeat builds one stratified split from the shared labels and every
arm (including fused pairs) is trained and scored on that identical split,
so the comparison across arms is paired. Scalers for fused arms are fitted
on the train rows of the repeat only; neither scalers nor classifiers ever
observe test rows.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .ebf import EmbeddingSet
from .errors import AlignmentError, ConfigError, StratificationError, ValidationError
from .fusion import MinMaxScaler, fit_minmax, fuse, scale_set
from .gbdt import GBDTConfig, GBDTModel, predict_proba, train
from .metrics import EvalResult, SummaryStats, evaluate, summarize
from .rng import Xoshiro256StarStar

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SplitPlan:
    """One train/test index partition with the seed that produced it."""

    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int

    def __post_init__(self):
        train = np.ascontiguousarray(self.train_indices, dtype=np.int64)
        test = np.ascontiguousarray(self.test_indices, dtype=np.int64)
        object.__setattr__(self, "train_indices", train)
        object.__setattr__(self, "test_indices", test)
        self.train_indices.setflags(write=False)
        self.test_indices.setflags(write=False)

    @property
    def n(self) -> int:
        return self.train_indices.size + self.test_indices.size

    def digest(self) -> str:
        """sha256 over the canonical index encoding of this plan."""
        payload = "split-indices/v1\ntrain %s\ntest %s\n" % (
            " ".join(str(i) for i in self.train_indices),
            " ".join(str(i) for i in self.test_indices),
        )
        return hashlib.sha256(payload.encode("ascii")).hexdigest()


@dataclass(frozen=True)
class ReshuffleSpec:
    """How many repeats, what test fraction, and the seed schedule base."""

    n_repeats: int = 10
    test_fraction: float = 0.2
    base_seed: int = 0

    def __post_init__(self):
        if not isinstance(self.n_repeats, int) or self.n_repeats < 1:
            raise ConfigError("n_repeats must be a positive integer")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction must be in (0, 1)")
        if not isinstance(self.base_seed, int) or not 0 <= self.base_seed <= _MASK64:
            raise ConfigError("base_seed must fit in 64 unsigned bits")

    def seed_for(self, repeat: int) -> int:
        return (self.base_seed + repeat) & _MASK64


def stratum_test_count(stratum_size: int, test_fraction: float) -> int:
    """round-half-up(n_s * fraction), clamped to [1, n_s - 1]."""
    return min(stratum_size - 1, max(1, int(math.floor(stratum_size * test_fraction + 0.5))))


def stratified_split(labels, test_fraction: float, seed: int) -> SplitPlan:
    """Seeded stratified partition; both classes appear on both sides.

    Strata are processed in ascending label order (0 then 1), each drawing
    its test members as a Fisher-Yates prefix from the shared generator;
    emitted index lists are ascending.
    """
    y = np.asarray(labels)
    if y.ndim != 1:
        raise ValidationError("labels must be a 1-D vector")
    if not np.isin(y, (0, 1)).all():
        raise ValidationError("labels must be 0 or 1")
    n = y.size
    if n < 4:
        raise ValidationError("need at least 4 records to split")
    if not 0.0 < test_fraction < 1.0:
        raise ValidationError("test_fraction must be in (0, 1)")
    rng = Xoshiro256StarStar(seed)
    test_parts = []
    for cls in (0, 1):
        stratum = np.flatnonzero(y == cls)
        if stratum.size < 2:
            raise StratificationError(
                "class %d has %d member(s); need at least 2" % (cls, stratum.size)
            )
        k = stratum_test_count(stratum.size, test_fraction)
        test_parts.append(stratum[rng.choose(stratum.size, k)])
    test = np.sort(np.concatenate(test_parts))
    mask = np.ones(n, dtype=bool)
    mask[test] = False
    train = np.flatnonzero(mask)
    return SplitPlan(train_indices=train, test_indices=test, seed=seed)


@dataclass
class ArmOutcome:
    """Per-repeat results and their aggregation for one benchmark arm."""

    name: str
    results: list[EvalResult]
    auroc_summary: SummaryStats
    aucpr_summary: SummaryStats
    # fused arms only: one {source_name: scaler} mapping per repeat
    scalers: Optional[list[dict[str, MinMaxScaler]]] = None
    # populated when collect_artifacts is requested
    models: Optional[list[GBDTModel]] = None
    test_sets: Optional[list[EmbeddingSet]] = None


@dataclass
class BenchmarkReport:
    """Everything cmd_benchmark needs to serialize a run."""

    arms: list[ArmOutcome]
    reshuffle: ReshuffleSpec
    classifier: GBDTConfig
    split_seeds: list[int]
    plan_digests: list[str]
    plans: list[SplitPlan]
    n_records: int
    fuse_pairs: list[tuple[str, str]] = field(default_factory=list)

    def arm(self, name: str) -> ArmOutcome:
        for outcome in self.arms:
            if outcome.name == name:
                return outcome
        raise KeyError(name)


def fused_arm_name(a: str, b: str) -> str:
    return "fused(%s,%s)" % (a, b)


def _check_arms_aligned(arms: dict[str, EmbeddingSet]):
    names = list(arms)
    if not names:
        raise ValidationError("need at least one arm")
    first = arms[names[0]]
    for name in names[1:]:
        other = arms[name]
        if other.ids != first.ids:
            raise AlignmentError("arm %r ids differ from arm %r" % (name, names[0]))
        if not np.array_equal(other.labels, first.labels):
            raise AlignmentError("arm %r labels differ from arm %r" % (name, names[0]))
    return first


def _run_arm(features32, labels, plans, config):
    """Train/evaluate one feature matrix over every plan."""
    results = []
    models = []
    for plan in plans:
        x_train = features32[plan.train_indices]
        y_train = labels[plan.train_indices]
        model = train(x_train, y_train, config)
        scores = predict_proba(model, features32[plan.test_indices])
        results.append(evaluate(scores, labels[plan.test_indices]))
        models.append(model)
    return results, models


def run_benchmark(
    arms: dict[str, EmbeddingSet],
    spec: ReshuffleSpec,
    classifier_config: GBDTConfig,
    fuse_pairs: Optional[Sequence[tuple[str, str]]] = None,
    collect_artifacts: bool = False,
) -> BenchmarkReport:
    """Paired-split comparison of every arm and requested fused pair.

    For repeat i (seed = base_seed + i) one SplitPlan is built from the
    shared labels; all arms train on its train rows and are scored on its
    test rows with identical classifier settings. Fused arms normalize
    each source with a scaler fitted on that repeat's train rows, then
    concatenate.
    """
    fuse_pairs = [tuple(p) for p in (fuse_pairs or [])]
    reference = _check_arms_aligned(arms)
    for a, b in fuse_pairs:
        for name in (a, b):
            if name not in arms:
                raise ConfigError("fuse pair references unknown arm %r" % name)
        if fused_arm_name(a, b) in arms:
            raise ConfigError("arm name %r collides with a fused arm" % fused_arm_name(a, b))
    labels = reference.labels
    plans = [stratified_split(labels, spec.test_fraction, spec.seed_for(i))
             for i in range(spec.n_repeats)]

    outcomes = []
    for name, arm_set in arms.items():
        results, models = _run_arm(arm_set.features, labels, plans, classifier_config)
        outcome = ArmOutcome(
            name=name,
            results=results,
            auroc_summary=summarize([r.auroc for r in results]),
            aucpr_summary=summarize([r.aucpr for r in results]),
        )
        if collect_artifacts:
            outcome.models = models
            outcome.test_sets = [arm_set.select(p.test_indices) for p in plans]
        outcomes.append(outcome)

    for a, b in fuse_pairs:
        set_a, set_b = arms[a], arms[b]
        results = []
        models = []
        test_sets = []
        repeat_scalers = []
        for plan in plans:
            scaler_a = fit_minmax(set_a.features[plan.train_indices])
            scaler_b = fit_minmax(set_b.features[plan.train_indices])
            fused = fuse(scale_set(set_a, scaler_a), scale_set(set_b, scaler_b))
            x_train = fused.features[plan.train_indices]
            model = train(x_train, labels[plan.train_indices], classifier_config)
            scores = predict_proba(model, fused.features[plan.test_indices])
            results.append(evaluate(scores, labels[plan.test_indices]))
            repeat_scalers.append({a: scaler_a, b: scaler_b})
            if collect_artifacts:
                models.append(model)
                test_sets.append(fused.select(plan.test_indices))
        outcome = ArmOutcome(
            name=fused_arm_name(a, b),
            results=results,
            auroc_summary=summarize([r.auroc for r in results]),
            aucpr_summary=summarize([r.aucpr for r in results]),
            scalers=repeat_scalers,
        )
        if collect_artifacts:
            outcome.models = models
            outcome.test_sets = test_sets
        outcomes.append(outcome)

    return BenchmarkReport(
        arms=outcomes,
        reshuffle=spec,
        classifier=classifier_config,
        split_seeds=[p.seed for p in plans],
        plan_digests=[p.digest() for p in plans],
        plans=plans,
        n_records=reference.n,
        fuse_pairs=fuse_pairs,
    )
