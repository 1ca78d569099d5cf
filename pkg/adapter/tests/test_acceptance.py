"""Adapter acceptance: conformance with the engine's external interfaces.

The full path exercised here is the real deployment flow: raw records ->
checkpoint extraction -> EBF -> engine benchmark (which exports split
plans) -> baseline training/scoring on the exported split -> engine
metrics over the score CSV.
"""

import json
import time
from contextlib import contextmanager

import numpy as np
import pytest
import torch

from ecgfuse import evaluate, read_ebf
from ecgfuse.cli import main as engine_cli
from ecgfuse_adapter import (
    BaselineConfig,
    ExtractionJob,
    build_encoder,
    extract_embeddings,
    read_scores_csv,
    save_checkpoint,
    train_baseline,
)

from conftest import TINY_ST_MEM, make_records


@contextmanager
def criterion(name):
    start = time.time()
    try:
        yield
    except BaseException:
        print("[acceptance] FAIL %s (%.1fs)" % (name, time.time() - start))
        raise
    print("[acceptance] PASS %s (%.1fs)" % (name, time.time() - start))


@pytest.fixture(scope="module")
def no_signal_flow(tmp_path_factory):
    """Records, extraction output, engine benchmark artifacts, one split."""
    root = tmp_path_factory.mktemp("adapter-acceptance")
    rec_dir, manifest, labels = make_records(root, n=500, seed=2026, n_pos=250)

    torch.manual_seed(7)
    checkpoint = root / "st_mem.pt"
    save_checkpoint(checkpoint, "st_mem", build_encoder("st_mem", TINY_ST_MEM),
                    TINY_ST_MEM)
    ebf_path = root / "st_mem.ebf"
    extract_embeddings(ExtractionJob(
        model_kind="st_mem", checkpoint=checkpoint, records_dir=rec_dir,
        manifest=manifest, output=ebf_path, batch_size=64))

    config = {
        "out_dir": "engine_out",
        "arms": {"stmem": "st_mem.ebf"},
        "reshuffle": {"n_repeats": 1, "test_fraction": 0.8, "base_seed": 60},
        "gbdt": {"n_rounds": 2, "max_depth": 2, "seed": 1},
    }
    cfg_path = root / "run.json"
    cfg_path.write_text(json.dumps(config))
    assert engine_cli(["benchmark", str(cfg_path)]) == 0
    split_path = root / "engine_out" / "splits" / "repeat_00.json"
    return {"root": root, "records": rec_dir, "manifest": manifest,
            "labels": labels, "ebf": ebf_path, "split": split_path}


def test_adapter_ebf_passes_primary_validation(no_signal_flow):
    with criterion("adapter EBF passes engine validation"):
        es = read_ebf(no_signal_flow["ebf"])
        assert es.n == 500
        assert es.dim == TINY_ST_MEM["embed_dim"]
        assert es.source_tag == "st_mem+cls"


def test_baseline_scores_cover_exported_test_ids_and_chance_auroc(no_signal_flow, tmp_path):
    with criterion("baseline covers exported split; 0-epoch AUROC ~ 0.5"):
        split_doc = json.loads(no_signal_flow["split"].read_text())
        scores_path = tmp_path / "scores.csv"
        train_baseline(no_signal_flow["records"], no_signal_flow["manifest"],
                       no_signal_flow["split"], scores_path,
                       BaselineConfig(epochs=0, seed=11, batch_size=64))
        scores = read_scores_csv(scores_path)
        assert list(scores) == split_doc["test_ids"]  # exactly, in order

        manifest_labels = {}
        for line in no_signal_flow["manifest"].read_text().strip().splitlines()[1:]:
            rid, lab = line.split(",")
            manifest_labels[rid] = int(lab)
        y = np.array([manifest_labels[r] for r in scores])
        result = evaluate(np.array(list(scores.values())), y)
        print("[acceptance]   0-epoch baseline AUROC %.4f on %d test records"
              % (result.auroc, len(y)))
        assert abs(result.auroc - 0.5) <= 0.05
        assert 0.0 <= result.aucpr <= 1.0
