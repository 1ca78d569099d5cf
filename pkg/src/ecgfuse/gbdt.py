"""Gradient-boosted decision trees with second-order (Newton) boosting.

Binary classifier under the logistic objective. Each round computes
per-row gradients g = p - y and hessians h = p(1 - p) at the current
probabilities, draws seeded row/column subsamples, and grows one tree by
exact greedy split search: every candidate threshold is the midpoint of two
consecutive distinct sorted feature values, the split gain is

    0.5 * (GL^2/(HL+lam) + GR^2/(HR+lam) - (GL+GR)^2/(HL+HR+lam)) - gamma

and a node splits only when the best gain is strictly positive and both
children reach min_child_weight. Leaf weight is -G/(H+lam); the model
margin is logit(base_score) + learning_rate * sum of tree outputs.

Determinism notes:
  * gain ties break to the lowest feature index, then the lowest threshold;
  * training rows are first brought into a canonical order (lexicographic
    by feature values, then label), so permuting the input rows cannot
    change the trained model;
  * prefix statistics accumulate in canonical sorted order, which the
    brute-force oracle in the test suite reproduces term for term.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
from numba import njit

from .errors import ConfigError, ValidationError
from .rng import Xoshiro256StarStar


@dataclass(frozen=True)
class GBDTConfig:
    """Training hyperparameters; defaults are the benchmark settings."""

    n_rounds: int = 100
    max_depth: int = 6
    learning_rate: float = 0.1
    subsample: float = 0.8
    colsample_bytree: float = 0.8
    reg_lambda: float = 1.0
    gamma: float = 0.0
    min_child_weight: float = 1.0
    base_score: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.n_rounds, int) or self.n_rounds < 0:
            raise ConfigError("n_rounds must be a non-negative integer")
        if not isinstance(self.max_depth, int) or self.max_depth < 1:
            raise ConfigError("max_depth must be a positive integer")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if not 0 < self.subsample <= 1:
            raise ConfigError("subsample must be in (0, 1]")
        if not 0 < self.colsample_bytree <= 1:
            raise ConfigError("colsample_bytree must be in (0, 1]")
        if self.reg_lambda < 0:
            raise ConfigError("reg_lambda must be non-negative")
        if self.gamma < 0:
            raise ConfigError("gamma must be non-negative")
        if self.min_child_weight < 0:
            raise ConfigError("min_child_weight must be non-negative")
        if not 0 < self.base_score < 1:
            raise ConfigError("base_score must be a probability in (0, 1)")
        if not isinstance(self.seed, int) or not 0 <= self.seed < (1 << 64):
            raise ConfigError("seed must fit in 64 unsigned bits")


@dataclass(frozen=True)
class TreeNode:
    """Regression-tree node: internal (feature/threshold) or leaf (weight).

    Internal nodes route x left when x[feature] < threshold, else right.
    """

    feature: Optional[int] = None
    threshold: float = 0.0
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    weight: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    @staticmethod
    def leaf(weight: float) -> "TreeNode":
        return TreeNode(weight=float(weight))

    @staticmethod
    def split(feature: int, threshold: float, left: "TreeNode", right: "TreeNode") -> "TreeNode":
        return TreeNode(feature=int(feature), threshold=float(threshold),
                        left=left, right=right)

    def max_leaf_depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.max_leaf_depth(), self.right.max_leaf_depth())


@dataclass(frozen=True)
class GBDTModel:
    """Ordered trees plus the configuration that produced them."""

    trees: tuple[TreeNode, ...]
    config: GBDTConfig
    n_features: int


@njit(cache=True)
def _grow_tree_kernel(X, g, h, global_order, rows, cols, max_depth, lam, gamma, mcw):
    """Grow one tree level-wise over the subsampled rows/columns.

    global_order holds, per column, all row indices sorted ascending by
    value (stable in canonical row order); per-node orders are maintained
    by stable partition so the expensive sort happens once per training
    run. Node statistics G/H accumulate over rows in ascending canonical
    order; prefix statistics GL/HL accumulate in column-sorted order.
    """
    n_total = X.shape[0]
    m0 = rows.shape[0]
    ncols = cols.shape[0]
    max_nodes = (1 << (max_depth + 1)) - 1

    feat = np.full(max_nodes, -1, np.int64)
    thr = np.zeros(max_nodes, np.float64)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    weight = np.zeros(max_nodes, np.float64)

    member = np.zeros(n_total, np.bool_)
    for i in range(m0):
        member[rows[i]] = True

    order = np.empty((m0, ncols), np.int32)
    for j in range(ncols):
        cj = cols[j]
        k = 0
        for t in range(n_total):
            r = global_order[t, cj]
            if member[r]:
                order[k, j] = r
                k += 1
    order_buf = np.empty(m0, np.int32)

    byrow = rows.copy()
    byrow_buf = np.empty(m0, np.int32)

    cur_ids = np.empty(1, np.int64)
    cur_ids[0] = 0
    cur_lo = np.zeros(1, np.int64)
    cur_hi = np.empty(1, np.int64)
    cur_hi[0] = m0
    n_nodes = 1

    for depth in range(max_depth + 1):
        n_front = cur_ids.shape[0]
        if n_front == 0:
            break
        nxt_ids = np.empty(2 * n_front, np.int64)
        nxt_lo = np.empty(2 * n_front, np.int64)
        nxt_hi = np.empty(2 * n_front, np.int64)
        n_nxt = 0
        for f in range(n_front):
            nid = cur_ids[f]
            lo = cur_lo[f]
            hi = cur_hi[f]
            G = 0.0
            H = 0.0
            for t in range(lo, hi):
                r = byrow[t]
                G += g[r]
                H += h[r]
            weight[nid] = -G / (H + lam)
            if depth == max_depth or hi - lo < 2:
                continue
            parent_score = G * G / (H + lam)
            best_gain = 0.0
            best_j = -1
            best_thr = 0.0
            for j in range(ncols):
                cj = cols[j]
                GL = 0.0
                HL = 0.0
                for k in range(lo, hi - 1):
                    r = order[k, j]
                    GL += g[r]
                    HL += h[r]
                    x0 = X[r, cj]
                    x1 = X[order[k + 1, j], cj]
                    if x1 > x0:
                        HR = H - HL
                        if HL >= mcw and HR >= mcw:
                            GR = G - GL
                            gain = 0.5 * (GL * GL / (HL + lam)
                                          + GR * GR / (HR + lam)
                                          - parent_score) - gamma
                            if gain > best_gain:
                                best_gain = gain
                                best_j = j
                                mid = 0.5 * (x0 + x1)
                                if mid <= x0:
                                    # adjacent floats can round the midpoint
                                    # down; fall back to the upper value so
                                    # routing matches the prefix counting
                                    mid = x1
                                best_thr = mid
            if best_j < 0:
                continue
            best_col = cols[best_j]
            n_left = 0
            for t in range(lo, hi):
                if X[byrow[t], best_col] < best_thr:
                    n_left += 1
            a = lo
            b = lo + n_left
            for t in range(lo, hi):
                r = byrow[t]
                if X[r, best_col] < best_thr:
                    byrow_buf[a] = r
                    a += 1
                else:
                    byrow_buf[b] = r
                    b += 1
            for t in range(lo, hi):
                byrow[t] = byrow_buf[t]
            for j in range(ncols):
                a = lo
                b = lo + n_left
                for k in range(lo, hi):
                    r = order[k, j]
                    if X[r, best_col] < best_thr:
                        order_buf[a] = r
                        a += 1
                    else:
                        order_buf[b] = r
                        b += 1
                for k in range(lo, hi):
                    order[k, j] = order_buf[k]
            lid = n_nodes
            rid = n_nodes + 1
            n_nodes += 2
            feat[nid] = best_col
            thr[nid] = best_thr
            left[nid] = lid
            right[nid] = rid
            nxt_ids[n_nxt] = lid
            nxt_lo[n_nxt] = lo
            nxt_hi[n_nxt] = lo + n_left
            n_nxt += 1
            nxt_ids[n_nxt] = rid
            nxt_lo[n_nxt] = lo + n_left
            nxt_hi[n_nxt] = hi
            n_nxt += 1
        cur_ids = nxt_ids[:n_nxt].copy()
        cur_lo = nxt_lo[:n_nxt].copy()
        cur_hi = nxt_hi[:n_nxt].copy()
    return feat, thr, left, right, weight


@njit(cache=True)
def _apply_tree_kernel(X, feat, thr, left, right, weight, out):
    for i in range(X.shape[0]):
        nid = 0
        while feat[nid] >= 0:
            if X[i, feat[nid]] < thr[nid]:
                nid = left[nid]
            else:
                nid = right[nid]
        out[i] = weight[nid]


def _arrays_to_tree(feat, thr, left, right, weight, nid: int = 0) -> TreeNode:
    if feat[nid] < 0:
        return TreeNode.leaf(weight[nid])
    return TreeNode.split(
        feat[nid], thr[nid],
        _arrays_to_tree(feat, thr, left, right, weight, left[nid]),
        _arrays_to_tree(feat, thr, left, right, weight, right[nid]),
    )


def _tree_to_arrays(root: TreeNode):
    index_of = {}
    ordered = []

    def walk(node):
        ordered.append(node)
        index_of[id(node)] = len(ordered) - 1
        if not node.is_leaf:
            walk(node.left)
            walk(node.right)

    walk(root)
    n = len(ordered)
    feat = np.full(n, -1, np.int64)
    thr = np.zeros(n, np.float64)
    left = np.full(n, -1, np.int64)
    right = np.full(n, -1, np.int64)
    weight = np.zeros(n, np.float64)
    for i, node in enumerate(ordered):
        if node.is_leaf:
            weight[i] = node.weight
        else:
            feat[i] = node.feature
            thr[i] = node.threshold
            left[i] = index_of[id(node.left)]
            right[i] = index_of[id(node.right)]
    return feat, thr, left, right, weight


def _sigmoid(margin: np.ndarray) -> np.ndarray:
    out = np.empty_like(margin)
    pos = margin >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-margin[pos]))
    e = np.exp(margin[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _round_count(fraction: float, n: int) -> int:
    """round-half-up(fraction * n), clamped to [1, n]."""
    return min(n, max(1, int(math.floor(fraction * n + 0.5))))


def _check_training_input(features, labels):
    X = np.ascontiguousarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if X.ndim != 2:
        raise ValidationError("features must be a 2-D matrix")
    n, d = X.shape
    if n < 2 or d < 1:
        raise ValidationError("need at least 2 rows and 1 feature to train")
    if y.shape != (n,):
        raise ValidationError("labels length %s does not match %d rows" % (y.shape, n))
    if not np.isfinite(X).all():
        raise ValidationError("features must be finite")
    if not np.isin(y, (0, 1)).all():
        raise ValidationError("labels must be 0 or 1")
    return X, y.astype(np.float64)


def train(features, labels, config: GBDTConfig) -> GBDTModel:
    """Fit config.n_rounds trees; fully determined by (features, labels, config)."""
    X, y = _check_training_input(features, labels)
    n, d = X.shape

    # canonical row order: lexicographic by features then label, so the
    # model is invariant to any permutation of the input rows
    keys = (y,) + tuple(X[:, j] for j in range(d - 1, -1, -1))
    canon = np.lexsort(keys)
    X = np.ascontiguousarray(X[canon])
    y = y[canon]

    global_order = np.argsort(X, axis=0, kind="stable").astype(np.int32)
    rng = Xoshiro256StarStar(config.seed)
    k_rows = _round_count(config.subsample, n)
    k_cols = _round_count(config.colsample_bytree, d)
    base_margin = math.log(config.base_score / (1.0 - config.base_score))
    margin = np.full(n, base_margin, dtype=np.float64)

    trees = []
    out = np.empty(n, dtype=np.float64)
    for _ in range(config.n_rounds):
        p = _sigmoid(margin)
        g = p - y
        h = p * (1.0 - p)
        rows = rng.choose(n, k_rows).astype(np.int32)
        cols = rng.choose(d, k_cols).astype(np.int32)
        feat, thr, left, right, weight = _grow_tree_kernel(
            X, g, h, global_order, rows, cols,
            config.max_depth, config.reg_lambda, config.gamma,
            config.min_child_weight,
        )
        _apply_tree_kernel(X, feat, thr, left, right, weight, out)
        margin = margin + config.learning_rate * out
        trees.append(_arrays_to_tree(feat, thr, left, right, weight))
    return GBDTModel(trees=tuple(trees), config=config, n_features=d)


def predict_margin(model: GBDTModel, features) -> np.ndarray:
    """logit(base_score) + learning_rate * sum of per-tree leaf weights."""
    X = np.ascontiguousarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValidationError(
            "feature matrix must be 2-D with %d columns" % model.n_features
        )
    cfg = model.config
    margin = np.full(X.shape[0],
                     math.log(cfg.base_score / (1.0 - cfg.base_score)),
                     dtype=np.float64)
    out = np.empty(X.shape[0], dtype=np.float64)
    for tree in model.trees:
        feat, thr, left, right, weight = _tree_to_arrays(tree)
        _apply_tree_kernel(X, feat, thr, left, right, weight, out)
        margin = margin + cfg.learning_rate * out
    return margin


def predict_proba(model: GBDTModel, features) -> np.ndarray:
    """Elementwise logistic sigmoid of the margins; values in (0, 1)."""
    return _sigmoid(predict_margin(model, features))


def _node_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"weight": node.weight}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(obj: dict) -> TreeNode:
    if "weight" in obj:
        return TreeNode.leaf(obj["weight"])
    return TreeNode.split(obj["feature"], obj["threshold"],
                          _node_from_dict(obj["left"]),
                          _node_from_dict(obj["right"]))


def model_to_json(model: GBDTModel) -> str:
    """JSON document {config, trees}; floats keep round-trip precision."""
    doc = {
        "format": "gbdt-model/v1",
        "n_features": model.n_features,
        "config": asdict(model.config),
        "trees": [_node_to_dict(t) for t in model.trees],
    }
    return json.dumps(doc, sort_keys=True, indent=1)


def model_from_json(text: str) -> GBDTModel:
    try:
        doc = json.loads(text)
        if doc.get("format") != "gbdt-model/v1":
            raise ConfigError("not a gbdt-model/v1 document")
        config = GBDTConfig(**doc["config"])
        trees = tuple(_node_from_dict(t) for t in doc["trees"])
        n_features = int(doc["n_features"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("malformed model document: %s" % exc) from exc
    return GBDTModel(trees=trees, config=config, n_features=n_features)


def save_model(model: GBDTModel, path: Union[str, Path]) -> None:
    Path(path).write_text(model_to_json(model), encoding="utf-8")


def load_model(path: Union[str, Path]) -> GBDTModel:
    return model_from_json(Path(path).read_text(encoding="utf-8"))
