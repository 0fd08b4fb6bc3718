"""Manifest reading and PNG plane loading."""

import json

import pytest
import torch

from viewmix import PairSet, read_manifest, split_train_holdout
from viewmix.data import load_entry


def test_read_manifest_rows(toy_manifest):
    root, manifest = toy_manifest
    rows = read_manifest(str(manifest))
    assert len(rows) == 6
    assert [r["sample_id"] for r in rows] == list(range(6))
    for r in rows:
        for key in ("gt_path", "degraded_path", "ref1_path", "ref2_path"):
            assert key in r


def test_empty_manifest_rejected(tmp_path):
    p = tmp_path / "empty.jsonl"
    p.write_text("\n\n")
    with pytest.raises(ValueError, match="no rows"):
        read_manifest(str(p))


def test_load_entry_planes(toy_manifest):
    root, manifest = toy_manifest
    row = read_manifest(str(manifest))[0]
    planes = load_entry(str(root), row)
    assert len(planes) == 4
    for t in planes:
        assert t.shape == (3, 16, 16)
        assert t.dtype == torch.float32
        assert 0.0 <= t.min() and t.max() <= 1.0


def test_load_entry_roundtrips_pixel_values(toy_manifest):
    # PNG stores 8-bit; loaded values must sit exactly on the k/255 grid
    root, manifest = toy_manifest
    row = read_manifest(str(manifest))[0]
    deg, _, _, _ = load_entry(str(root), row)
    grid = (deg * 255).round() / 255
    assert torch.allclose(deg, grid, atol=0, rtol=0)


def test_pairset_stacks_and_batches(toy_manifest):
    root, manifest = toy_manifest
    rows = read_manifest(str(manifest))
    ps = PairSet(str(root), rows)
    assert len(ps) == 6
    assert ps.gt.shape == (6, 3, 16, 16)
    d, r1, r2, g = ps.batch(torch.tensor([4, 0]))
    assert d.shape == (2, 3, 16, 16)
    assert torch.equal(g[1], ps.gt[0])


def test_pairset_refuses_empty(toy_manifest):
    root, _ = toy_manifest
    with pytest.raises(ValueError, match="empty"):
        PairSet(str(root), [])


def test_split_tail_holdout():
    rows = [{"sample_id": k} for k in range(10)]
    train, held = split_train_holdout(rows, 3)
    assert [r["sample_id"] for r in train] == list(range(7))
    assert [r["sample_id"] for r in held] == [7, 8, 9]


def test_split_bounds_checked():
    rows = [{"sample_id": k} for k in range(4)]
    with pytest.raises(ValueError):
        split_train_holdout(rows, 0)
    with pytest.raises(ValueError):
        split_train_holdout(rows, 4)
