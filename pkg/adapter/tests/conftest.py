import json

import numpy as np
import pytest
import torch

from ecgfuse_adapter import build_encoder, save_checkpoint

TINY_ST_MEM = {"embed_dim": 24, "depth": 1, "n_heads": 2, "patch_len": 500}
TINY_ECG_FM = {"embed_dim": 16, "depth": 1, "n_heads": 2, "conv_width": 16}


def make_records(root, n, seed, length=4000, n_pos=None, prefix="rec"):
    """Noise records plus a matching manifest; returns (dir, manifest, labels)."""
    rng = np.random.default_rng(seed)
    rec_dir = root / "records"
    rec_dir.mkdir(parents=True, exist_ok=True)
    n_pos = n // 4 if n_pos is None else n_pos
    labels = np.zeros(n, dtype=int)
    labels[rng.permutation(n)[:n_pos]] = 1
    lines = ["id,label"]
    for i in range(n):
        rid = "%s_%06d" % (prefix, i)
        np.save(rec_dir / ("%s.npy" % rid),
                rng.standard_normal((12, length)).astype(np.float32))
        lines.append("%s,%d" % (rid, labels[i]))
    manifest = root / "labels.csv"
    manifest.write_text("\n".join(lines) + "\n")
    return rec_dir, manifest, labels


@pytest.fixture(scope="session")
def small_workspace(tmp_path_factory):
    """60 mixed-rate records with checkpoints for both encoder families."""
    root = tmp_path_factory.mktemp("adapter-small")
    rec_dir, manifest, labels = make_records(root, n=48, seed=5)
    # add a few 500 Hz records to exercise mixed-rate batching
    rng = np.random.default_rng(99)
    extra_lines = []
    for i in range(48, 60):
        rid = "rec_%06d" % i
        np.save(rec_dir / ("%s.npy" % rid),
                rng.standard_normal((12, 5000)).astype(np.float32))
        extra_lines.append("%s,%d" % (rid, i % 2))
    manifest.write_text(manifest.read_text() + "\n".join(extra_lines) + "\n")

    torch.manual_seed(42)
    ck_st = root / "st_mem.pt"
    save_checkpoint(ck_st, "st_mem", build_encoder("st_mem", TINY_ST_MEM), TINY_ST_MEM)
    torch.manual_seed(43)
    ck_fm = root / "ecg_fm.pt"
    save_checkpoint(ck_fm, "ecg_fm", build_encoder("ecg_fm", TINY_ECG_FM), TINY_ECG_FM)
    return {"root": root, "records": rec_dir, "manifest": manifest,
            "st_mem": ck_st, "ecg_fm": ck_fm, "n": 60}


def write_split_plan(path, seed, test_fraction, train_ids, test_ids):
    """A split-plan/v1 document exactly as the engine's benchmark exports it."""
    from ecgfuse_adapter import compute_ids_digest

    doc = {
        "format": "split-plan/v1",
        "repeat": 0,
        "seed": seed,
        "test_fraction": test_fraction,
        "n": len(train_ids) + len(test_ids),
        "train_ids": list(train_ids),
        "test_ids": list(test_ids),
        "ids_digest": compute_ids_digest(list(train_ids), list(test_ids)),
    }
    path.write_text(json.dumps(doc, indent=1))
    return path
