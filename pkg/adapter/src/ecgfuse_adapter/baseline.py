"""Raw-signal baseline: a 1-D ResNet-50 trained on the engine's splits.

Bottleneck residual blocks in the standard (3, 4, 6, 3) arrangement over
1-D convolutions, sigmoid head. Defaults follow the benchmark recipe:
learning rate 0.001, batch size 64, 100 epochs (Adam; the optimizer is an
adapter choice). Scores for the split's test ids are written as an
"id,score" CSV the engine's metrics can consume.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn

from .errors import RecordError
from .records import check_manifest_covers, discover_records, load_record, read_manifest
from .splits import load_split_plan


class Bottleneck1d(nn.Module):
    expansion = 4

    def __init__(self, in_planes, planes, stride=1):
        super().__init__()
        out_planes = planes * self.expansion
        self.conv1 = nn.Conv1d(in_planes, planes, 1, bias=False)
        self.bn1 = nn.BatchNorm1d(planes)
        self.conv2 = nn.Conv1d(planes, planes, 3, stride=stride, padding=1, bias=False)
        self.bn2 = nn.BatchNorm1d(planes)
        self.conv3 = nn.Conv1d(planes, out_planes, 1, bias=False)
        self.bn3 = nn.BatchNorm1d(out_planes)
        self.relu = nn.ReLU(inplace=True)
        self.downsample = None
        if stride != 1 or in_planes != out_planes:
            self.downsample = nn.Sequential(
                nn.Conv1d(in_planes, out_planes, 1, stride=stride, bias=False),
                nn.BatchNorm1d(out_planes),
            )

    def forward(self, x):
        identity = x if self.downsample is None else self.downsample(x)
        out = self.relu(self.bn1(self.conv1(x)))
        out = self.relu(self.bn2(self.conv2(out)))
        out = self.bn3(self.conv3(out))
        return self.relu(out + identity)


class ResNet1d(nn.Module):
    def __init__(self, layers=(3, 4, 6, 3), in_channels=12):
        super().__init__()
        self.in_planes = 64
        self.stem = nn.Sequential(
            nn.Conv1d(in_channels, 64, 7, stride=2, padding=3, bias=False),
            nn.BatchNorm1d(64),
            nn.ReLU(inplace=True),
            nn.MaxPool1d(3, stride=2, padding=1),
        )
        self.layer1 = self._stage(64, layers[0], stride=1)
        self.layer2 = self._stage(128, layers[1], stride=2)
        self.layer3 = self._stage(256, layers[2], stride=2)
        self.layer4 = self._stage(512, layers[3], stride=2)
        self.pool = nn.AdaptiveAvgPool1d(1)
        self.fc = nn.Linear(512 * Bottleneck1d.expansion, 1)

    def _stage(self, planes, blocks, stride):
        stage = [Bottleneck1d(self.in_planes, planes, stride)]
        self.in_planes = planes * Bottleneck1d.expansion
        for _ in range(blocks - 1):
            stage.append(Bottleneck1d(self.in_planes, planes))
        return nn.Sequential(*stage)

    def forward(self, x):
        out = self.stem(x)
        out = self.layer4(self.layer3(self.layer2(self.layer1(out))))
        return self.fc(self.pool(out).flatten(1)).squeeze(-1)


def resnet50_1d() -> ResNet1d:
    return ResNet1d((3, 4, 6, 3))


@dataclass
class BaselineConfig:
    learning_rate: float = 0.001
    batch_size: int = 64
    epochs: int = 100
    seed: int = 0
    device: str = "cpu"


def _batched(items, size):
    for lo in range(0, len(items), size):
        yield items[lo:lo + size]


def train_baseline(records_dir: Path, manifest: Path, split_plan: Path,
                   out_csv: Path, config: BaselineConfig = BaselineConfig()) -> Path:
    """Train on the split's train ids, score its test ids, write id,score CSV.

    The split plan must pass its digest check; every id in the plan must
    have a record file and a manifest label. epochs=0 scores with the
    randomly initialized network (sanity baseline).
    """
    labels = read_manifest(manifest)
    paths = discover_records(records_dir)
    check_manifest_covers(labels, paths.keys())
    split = load_split_plan(split_plan)
    missing = [r for r in (*split.train_ids, *split.test_ids) if r not in paths]
    if missing:
        raise RecordError("split references %d id(s) without record files, e.g. %s"
                          % (len(missing), missing[0]))

    torch.manual_seed(config.seed)
    model = resnet50_1d().to(config.device)

    if config.epochs > 0:
        optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
        loss_fn = nn.BCEWithLogitsLoss()
        order_rng = torch.Generator().manual_seed(config.seed)
        model.train()
        for _ in range(config.epochs):
            order = torch.randperm(len(split.train_ids), generator=order_rng).tolist()
            for batch_ids in _batched([split.train_ids[i] for i in order],
                                      config.batch_size):
                x = torch.from_numpy(np.stack([load_record(paths[r]) for r in batch_ids]))
                y = torch.tensor([float(labels[r]) for r in batch_ids])
                optimizer.zero_grad()
                loss = loss_fn(model(x.to(config.device)), y.to(config.device))
                loss.backward()
                optimizer.step()

    model.eval()
    scores: list[float] = []
    with torch.no_grad():
        for batch_ids in _batched(list(split.test_ids), config.batch_size):
            x = torch.from_numpy(np.stack([load_record(paths[r]) for r in batch_ids]))
            logits = model(x.to(config.device))
            scores.extend(torch.sigmoid(logits).cpu().double().tolist())

    lines = ["id,score"]
    lines.extend("%s,%r" % (rid, s) for rid, s in zip(split.test_ids, scores))
    out_csv = Path(out_csv)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    out_csv.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return out_csv


def read_scores_csv(path: Path) -> dict[str, float]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "id,score":
        raise RecordError('scores CSV %s must start with "id,score"' % path)
    out = {}
    for line in lines[1:]:
        if not line:
            continue
        rid, raw = line.split(",")
        out[rid] = float(raw)
    return out
