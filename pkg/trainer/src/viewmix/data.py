"""Reads forged-dataset output: a JSON-Lines manifest plus PNG planes.

This is the only coupling to the dataset builder. Each manifest row names
four images (gt, degraded, and two references) relative to the dataset
root; everything else in the row is carried along untouched.
"""

from __future__ import annotations

import json
import os

import numpy as np
import torch
from PIL import Image

PLANE_KEYS = ("degraded_path", "ref1_path", "ref2_path", "gt_path")


def read_manifest(path: str) -> list[dict]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(json.loads(line))
    if not rows:
        raise ValueError(f"manifest {path} has no rows")
    return rows


def _load_png(path: str) -> torch.Tensor:
    arr = np.asarray(Image.open(path).convert("RGB"), dtype=np.float32) / 255.0
    return torch.from_numpy(arr).permute(2, 0, 1).contiguous()


def load_entry(root: str, entry: dict) -> tuple[torch.Tensor, ...]:
    """One sample as (degraded, ref1, ref2, gt), each (3, H, W) in [0, 1]."""
    return tuple(_load_png(os.path.join(root, entry[k])) for k in PLANE_KEYS)


class PairSet:
    """All samples of a manifest slice, preloaded into four stacked tensors."""

    def __init__(self, root: str, entries: list[dict]):
        if not entries:
            raise ValueError("empty entry list")
        planes = [load_entry(root, e) for e in entries]
        self.degraded, self.ref1, self.ref2, self.gt = (
            torch.stack([p[i] for p in planes]) for i in range(4))
        self.entries = list(entries)

    def __len__(self) -> int:
        return self.degraded.shape[0]

    def batch(self, idx: torch.Tensor) -> tuple[torch.Tensor, ...]:
        return self.degraded[idx], self.ref1[idx], self.ref2[idx], self.gt[idx]


def split_train_holdout(entries: list[dict], holdout: int) -> tuple[list[dict], list[dict]]:
    """Deterministic tail split: last `holdout` rows are held out."""
    if not 0 < holdout < len(entries):
        raise ValueError(
            f"holdout must be in (0, {len(entries)}), got {holdout}")
    return entries[:-holdout], entries[-holdout:]
