"""Consumption of split plans exported by the evaluation engine.

The engine's benchmark writes one ``split-plan/v1`` JSON per repeat with
train/test id lists and a sha256 integrity digest over those lists. The
adapter recomputes the digest before using a plan, so the baseline is
guaranteed to run on the exact split the embedding arms used.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import SplitDigestError

SPLIT_FORMAT = "split-plan/v1"


@dataclass(frozen=True)
class IdSplit:
    repeat: int
    seed: int
    test_fraction: float
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    ids_digest: str


def compute_ids_digest(train_ids, test_ids) -> str:
    payload = "split-ids/v1\ntrain\n%s\ntest\n%s\n" % (
        "\n".join(train_ids), "\n".join(test_ids))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def load_split_plan(path: Path) -> IdSplit:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SplitDigestError("cannot read split plan %s: %s" % (path, exc)) from exc
    if doc.get("format") != SPLIT_FORMAT:
        raise SplitDigestError("%s is not a %s document" % (path, SPLIT_FORMAT))
    train_ids = tuple(doc["train_ids"])
    test_ids = tuple(doc["test_ids"])
    recomputed = compute_ids_digest(train_ids, test_ids)
    if recomputed != doc.get("ids_digest"):
        raise SplitDigestError(
            "split plan %s failed its digest check (stored %s, recomputed %s)"
            % (path, doc.get("ids_digest"), recomputed))
    if set(train_ids) & set(test_ids):
        raise SplitDigestError("split plan %s has overlapping train/test ids" % path)
    return IdSplit(repeat=int(doc.get("repeat", 0)), seed=int(doc.get("seed", 0)),
                   test_fraction=float(doc.get("test_fraction", 0.0)),
                   train_ids=train_ids, test_ids=test_ids,
                   ids_digest=recomputed)
