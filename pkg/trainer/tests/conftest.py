import json
import subprocess
import sys

import numpy as np
import pytest
import torch
from PIL import Image

torch.set_num_threads(1)


def write_png(path, arr):
    """arr float in [0,1], shape (h, w, 3)."""
    Image.fromarray((np.clip(arr, 0, 1) * 255).round().astype(np.uint8)).save(path)


def smooth_noise(rng, h, w, sigma):
    from scipy.ndimage import gaussian_filter
    field = gaussian_filter(rng.standard_normal((h, w, 3)), sigma=(sigma, sigma, 0))
    lo, hi = field.min(), field.max()
    return (field - lo) / (hi - lo)


@pytest.fixture(scope="session")
def toy_manifest(tmp_path_factory):
    """Hand-written manifest plus PNG planes, no dataset builder involved.

    Ground truth is a smooth field; the degraded plane adds noise; the two
    references are small rolls of the ground truth. 6 samples at 16x16.
    """
    root = tmp_path_factory.mktemp("toyds")
    (root / "images").mkdir()
    rng = np.random.default_rng(5)
    rows = []
    for k in range(6):
        gt = smooth_noise(rng, 16, 16, 3.0)
        deg = np.clip(gt + 0.08 * rng.standard_normal(gt.shape), 0, 1)
        r1 = np.roll(gt, 1, axis=0)
        r2 = np.roll(gt, -1, axis=1)
        names = {}
        for tag, arr in (("gt", gt), ("in", deg), ("ref1", r1), ("ref2", r2)):
            rel = f"images/{k:03d}_{tag}.png"
            write_png(root / rel, arr)
            names[tag] = rel
        rows.append({
            "sample_id": k,
            "gt_path": names["gt"],
            "degraded_path": names["in"],
            "ref1_path": names["ref1"],
            "ref2_path": names["ref2"],
        })
    manifest = root / "manifest.jsonl"
    with open(manifest, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return root, manifest


def write_textured_clips(clips_dir):
    """Two 10-frame clips of drifting high-frequency texture.

    Each frame layers granular noise, diagonal stripes, and a checker of
    coarse blocks; the layers drift at different per-frame rates, so
    neighbouring frames show the same content from slightly shifted
    positions — which is what gives the reference views something to
    contribute during alignment.
    """
    from scipy.ndimage import gaussian_filter

    rng = np.random.default_rng(40)
    h, w = 160, 120
    yy, xx = np.mgrid[0:h, 0:w]
    for c in range(2):
        d = clips_dir / f"s{c + 1}"
        d.mkdir(parents=True)
        grain = gaussian_filter(rng.standard_normal((h, w, 3)), sigma=(0.8, 0.8, 0))
        grain = (grain - grain.min()) / (grain.max() - grain.min())
        stripes = 0.5 + 0.5 * np.sin(2 * np.pi * (xx * (0.11 + 0.03 * c) + yy * 0.07))
        blocks = ((yy // 12 + xx // 12) % 2).astype(float)
        for f in range(10):
            g = np.roll(np.roll(grain, f, axis=0), -f, axis=1)
            s = np.roll(stripes, 2 * f, axis=1)[..., None]
            b = np.roll(blocks, f, axis=0)[..., None]
            frame = np.clip(0.15 + 0.45 * g + 0.25 * s + 0.15 * b, 0, 1)
            frame = frame * np.array([1.0, 0.95, 0.9]) * (1 + 0.04 * np.sin(f))
            write_png(d / f"f{f:03d}.png", frame)


@pytest.fixture(scope="session")
def forged_dataset(tmp_path_factory):
    """A small dataset produced by the installed synthesis CLI.

    Textured clips are written as frame folders, then the `build-dataset`
    subcommand forges 16x16 training crops from them. Only the published
    surfaces are touched: the command line, the JSONL manifest, and the
    PNG planes it references.
    """
    work = tmp_path_factory.mktemp("forge")
    clips = work / "clips"
    write_textured_clips(clips)
    out = work / "ds"
    proc = subprocess.run(
        [sys.executable, "-m", "nerfsim.cli", "build-dataset",
         "--video", str(clips), "--out", str(out),
         "--count", "96", "--crop", "16", "--seed", "17"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    entries = []
    with open(out / "manifest.jsonl") as fh:
        for line in fh:
            line = line.strip()
            if line:
                entries.append(json.loads(line))
    return out, entries
