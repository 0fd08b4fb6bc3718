"""Shared fixtures: a deterministic textured test image and a ring camera rig."""

import math
import os

import numpy as np
import pytest
from scipy import ndimage

from nerfsim.geometry import CameraView
from nerfsim.imaging import save_image


def natural_image(height=160, width=160, seed=7):
    """Deterministic stand-in for a textured photograph.

    Organic regions (from a smoothed random field) carry different texture
    families: binary speckle, coarse blocks, and wavy stripes, over smooth
    shading. The high-frequency energy is deliberately strong so blur and
    re-positioning degradations have something to destroy.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    field = ndimage.gaussian_filter(rng.random((height, width)), 10.0)
    field = (field - field.min()) / (field.max() - field.min())
    ii = np.arange(height, dtype=np.float64)[:, None]
    jj = np.arange(width, dtype=np.float64)[None, :]
    shade = 0.52 + 0.22 * np.sin(2 * math.pi * ii / 123.0 + 1.1) * np.cos(2 * math.pi * jj / 97.0)
    grain = (rng.random((height, width)) > 0.5) - 0.5
    blocks = ndimage.zoom(
        rng.random((height // 3 + 1, width // 3 + 1)), 3, order=0
    )[:height, :width] - 0.5
    stripes = 0.5 * np.sign(np.sin(2 * math.pi * (ii + 4 * np.sin(jj / 11.0)) / 5.0))
    plane = shade
    plane = plane + np.where(field < 0.40, 0.46 * grain, 0.0)
    plane = plane + np.where((field >= 0.40) & (field < 0.72), 0.40 * blocks, 0.0)
    plane = plane + np.where(field >= 0.72, 0.42 * stripes, 0.0)
    img = np.stack(
        [plane, np.roll(plane, 7, axis=0) * 0.96 + 0.02, np.roll(plane, 4, axis=1) * 0.92 + 0.05],
        axis=2,
    )
    return np.clip(img, 0.01, 0.99)


@pytest.fixture
def photo():
    return natural_image()


def look_at_rotation(position, target, up=(0.0, 0.0, 1.0)):
    """Camera-to-world rotation with columns [right, down, forward]."""
    position = np.asarray(position, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    forward = target - position
    forward = forward / np.linalg.norm(forward)
    up = np.asarray(up, dtype=np.float64)
    right = np.cross(forward, up)
    if np.linalg.norm(right) < 1e-12:
        right = np.cross(forward, (0.0, 1.0, 0.0))
    right = right / np.linalg.norm(right)
    down = np.cross(forward, right)
    return np.stack([right, down, forward], axis=1)


def ring_views(n=8, ring_radius=4.0, near=1.0, far=5.0, width=160, height=160, focal=200.0):
    """n cameras on a circle in the xy-plane, all looking at the origin.

    Mid-depth is (near+far)/2 = 3 at ring radius 4, so each camera's mid-depth
    point sits on a unit circle around the origin and the estimated sphere is
    centered at the origin.
    """
    views = []
    for i in range(n):
        ang = 2.0 * math.pi * i / n
        pos = np.array([ring_radius * math.cos(ang), ring_radius * math.sin(ang), 0.0])
        views.append(
            CameraView(
                id=i,
                image_path=f"view_{i:03d}.png",
                width=width,
                height=height,
                fx=focal,
                fy=focal,
                cx=width / 2.0,
                cy=height / 2.0,
                rotation=look_at_rotation(pos, (0.0, 0.0, 0.0)),
                translation=pos,
                near=near,
                far=far,
            )
        )
    return views


@pytest.fixture
def ring_rig():
    return ring_views()


def write_clip(clip_dir, n_frames, height=160, width=192, seed=0):
    """Write n_frames related-but-distinct PNG frames into clip_dir."""
    os.makedirs(clip_dir, exist_ok=True)
    base = natural_image(height, width, seed=seed)
    for k in range(n_frames):
        frame = np.clip(np.roll(base, 3 * k, axis=1) * (1.0 - 0.02 * k) + 0.01 * k, 0.0, 1.0)
        save_image(os.path.join(clip_dir, f"frame_{k:02d}.png"), frame)


def write_video_tree(root, n_clips=4, n_frames=5, height=160, width=192):
    os.makedirs(root, exist_ok=True)
    for c in range(n_clips):
        write_clip(os.path.join(root, f"clip_{c:03d}"), n_frames, height, width, seed=100 + c)
    return root


def tree_bytes(root):
    """Map of relative path -> file bytes for an output tree, sorted order."""
    out = {}
    for dirpath, _, files in os.walk(root):
        for name in sorted(files):
            path = os.path.join(dirpath, name)
            rel = os.path.relpath(path, root)
            with open(path, "rb") as f:
                out[rel] = f.read()
    return out
