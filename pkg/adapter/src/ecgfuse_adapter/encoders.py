"""Embedding extractors for the two supported checkpoint families.

``st_mem`` checkpoints hold a per-lead patch-token transformer whose class
token is the embedding (masked-reconstruction pretraining family).
``ecg_fm`` checkpoints hold a strided convolutional front end followed by a
transformer over time tokens, mean-pooled (contrastive lead-dropping
family). Architecture hyperparameters travel inside the checkpoint, so
scaled-down models load through the same path as full-size ones.
"""

from __future__ import annotations

from pathlib import Path

import torch
import torch.nn as nn

from .errors import CheckpointError
from .records import N_LEADS

MODEL_KINDS = ("st_mem", "ecg_fm")
MAX_SAMPLES = 5000

POOLING = {"st_mem": "cls", "ecg_fm": "meanpool"}

ST_MEM_DEFAULT_ARCH = {"embed_dim": 64, "depth": 2, "n_heads": 4, "patch_len": 500}
ECG_FM_DEFAULT_ARCH = {"embed_dim": 64, "depth": 2, "n_heads": 4, "conv_width": 32}


class StMemEncoder(nn.Module):
    """Per-lead temporal patches + transformer encoder, class-token pooled."""

    def __init__(self, embed_dim=64, depth=2, n_heads=4, patch_len=500):
        super().__init__()
        self.patch_len = patch_len
        self.embed_dim = embed_dim
        self.patch_embed = nn.Conv1d(1, embed_dim, kernel_size=patch_len,
                                     stride=patch_len)
        max_tokens = N_LEADS * (MAX_SAMPLES // patch_len)
        self.pos_embed = nn.Parameter(torch.zeros(1, max_tokens, embed_dim))
        self.lead_embed = nn.Parameter(torch.zeros(1, N_LEADS, embed_dim))
        self.cls_token = nn.Parameter(torch.zeros(1, 1, embed_dim))
        layer = nn.TransformerEncoderLayer(
            d_model=embed_dim, nhead=n_heads, dim_feedforward=2 * embed_dim,
            batch_first=True, norm_first=True)
        self.encoder = nn.TransformerEncoder(layer, num_layers=depth,
                                             enable_nested_tensor=False)
        self.norm = nn.LayerNorm(embed_dim)
        nn.init.trunc_normal_(self.pos_embed, std=0.02)
        nn.init.trunc_normal_(self.lead_embed, std=0.02)
        nn.init.trunc_normal_(self.cls_token, std=0.02)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, n_leads, length = x.shape
        t = length // self.patch_len
        tokens = self.patch_embed(x.reshape(b * n_leads, 1, length))
        tokens = tokens.transpose(1, 2).reshape(b, n_leads, t, self.embed_dim)
        tokens = tokens + self.lead_embed[:, :, None, :]
        tokens = tokens.reshape(b, n_leads * t, self.embed_dim)
        tokens = tokens + self.pos_embed[:, :tokens.shape[1]]
        cls = self.cls_token.expand(b, -1, -1)
        encoded = self.encoder(torch.cat([cls, tokens], dim=1))
        return self.norm(encoded[:, 0])


class EcgFmEncoder(nn.Module):
    """Strided conv front end + transformer over time tokens, mean-pooled."""

    def __init__(self, embed_dim=64, depth=2, n_heads=4, conv_width=32):
        super().__init__()
        self.embed_dim = embed_dim
        self.conv = nn.Sequential(
            nn.Conv1d(N_LEADS, conv_width, kernel_size=7, stride=4, padding=3),
            nn.GELU(),
            nn.Conv1d(conv_width, conv_width, kernel_size=5, stride=4, padding=2),
            nn.GELU(),
            nn.Conv1d(conv_width, embed_dim, kernel_size=3, stride=4, padding=1),
        )
        max_tokens = -(-MAX_SAMPLES // 64)  # three stride-4 stages
        self.pos_embed = nn.Parameter(torch.zeros(1, max_tokens, embed_dim))
        layer = nn.TransformerEncoderLayer(
            d_model=embed_dim, nhead=n_heads, dim_feedforward=2 * embed_dim,
            batch_first=True, norm_first=True)
        self.encoder = nn.TransformerEncoder(layer, num_layers=depth,
                                             enable_nested_tensor=False)
        self.norm = nn.LayerNorm(embed_dim)
        nn.init.trunc_normal_(self.pos_embed, std=0.02)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        tokens = self.conv(x).transpose(1, 2)
        tokens = tokens + self.pos_embed[:, :tokens.shape[1]]
        encoded = self.encoder(tokens)
        return self.norm(encoded.mean(dim=1))


def build_encoder(model_kind: str, arch: dict) -> nn.Module:
    if model_kind == "st_mem":
        return StMemEncoder(**{**ST_MEM_DEFAULT_ARCH, **arch})
    if model_kind == "ecg_fm":
        return EcgFmEncoder(**{**ECG_FM_DEFAULT_ARCH, **arch})
    raise CheckpointError("unknown model kind %r, expected one of %s"
                          % (model_kind, MODEL_KINDS))


def save_checkpoint(path: Path, model_kind: str, model: nn.Module, arch: dict) -> None:
    torch.save({"model_kind": model_kind, "arch": dict(arch),
                "state_dict": model.state_dict()}, path)


def load_checkpoint(path: Path, device: str = "cpu"):
    """Returns (model_kind, arch, model in eval mode)."""
    try:
        payload = torch.load(path, map_location=device, weights_only=True)
    except Exception as exc:
        raise CheckpointError("cannot load checkpoint %s: %s" % (path, exc)) from exc
    if not isinstance(payload, dict) or "model_kind" not in payload:
        raise CheckpointError("checkpoint %s has no model_kind field" % path)
    model_kind = payload["model_kind"]
    arch = payload.get("arch", {})
    model = build_encoder(model_kind, arch)
    try:
        model.load_state_dict(payload["state_dict"])
    except (KeyError, RuntimeError) as exc:
        raise CheckpointError(
            "checkpoint %s does not match the %s architecture: %s"
            % (path, model_kind, exc)) from exc
    model.to(device)
    model.eval()
    return model_kind, arch, model
