"""Converter from the forward-facing capture pose layout to scene JSON.

The source format packs one 3x5 matrix per camera (a camera-to-world
rotation-and-center block whose rotation columns are the camera's
down / right / backward axes, plus an [h, w, f] column) together with per-view
near/far depth bounds, all as 64-bit little-endian reals. Accepted containers:
a .npy array of shape (N, 17) or a raw binary file whose length is a multiple
of 17 doubles, row layout [15 pose values row-major, near, far].
"""

from __future__ import annotations

import os

import numpy as np

from .errors import ParameterError
from .geometry import CameraView


def read_pose_rows(path: str) -> np.ndarray:
    """Load the (N, 17) pose table from a .npy or raw little-endian file."""
    if path.endswith(".npy"):
        arr = np.load(path)
    else:
        flat = np.fromfile(path, dtype="<f8")
        if flat.size == 0 or flat.size % 17 != 0:
            raise ParameterError(
                f"{path}: raw pose file must hold a multiple of 17 doubles, got {flat.size}"
            )
        arr = flat.reshape(-1, 17)
    arr = np.asarray(arr, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 17:
        raise ParameterError(f"{path}: expected shape (N, 17), got {arr.shape}")
    return arr


def convert_poses(
    path: str, image_files: list[str] | None = None, name_pattern: str = "view_{:03d}.png"
) -> list[CameraView]:
    """Turn a pose table into CameraView objects.

    The stored rotation columns [down, right, backward] are reordered to this
    package's [right, down, forward] camera axes; the translation column is
    already the camera center. Principal point defaults to the image center
    and fx = fy = the stored focal length. image_files, when given, must have
    one path per pose row; otherwise names follow name_pattern.
    """
    rows = read_pose_rows(path)
    n = rows.shape[0]
    if image_files is not None and len(image_files) != n:
        raise ParameterError(
            f"{path}: {n} poses but {len(image_files)} image files"
        )
    views = []
    for i in range(n):
        pose = rows[i, :15].reshape(3, 5)
        down, right, back = pose[:, 0], pose[:, 1], pose[:, 2]
        rotation = np.stack([right, down, -back], axis=1)
        center = pose[:, 3]
        h, w, focal = pose[:, 4]
        near, far = rows[i, 15], rows[i, 16]
        file = image_files[i] if image_files is not None else name_pattern.format(i)
        views.append(
            CameraView(
                id=i,
                image_path=file,
                width=int(round(w)),
                height=int(round(h)),
                fx=float(focal),
                fy=float(focal),
                cx=float(w) / 2.0,
                cy=float(h) / 2.0,
                rotation=rotation,
                translation=center,
                near=float(near),
                far=float(far),
            )
        )
    return views


def list_image_files(image_dir: str) -> list[str]:
    """Sorted image paths under a directory (the usual capture layout)."""
    exts = (".png", ".jpg", ".jpeg", ".bmp")
    names = sorted(
        f for f in os.listdir(image_dir) if f.lower().endswith(exts)
    )
    return [os.path.join(image_dir, f) for f in names]
