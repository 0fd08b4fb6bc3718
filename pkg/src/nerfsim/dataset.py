"""Paired-dataset construction: raw triplets in, degraded training samples out.

A raw sequence is one clean target plus two clean reference views. The builder
degrades the full-resolution target with a freshly sampled recipe, applies
small global offsets to the references, cuts one shared crop, applies shared
flip/rotation augmentation, and writes the four patches as PNGs plus a
JSON-Lines manifest. Every stochastic choice is recorded, and every sample can
be replayed bit-exactly from its manifest line and the original source images.
"""

from __future__ import annotations

import json
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .degrade import (
    DegradationRecipe,
    StageToggles,
    apply_recipe,
    derive_seed,
    sample_recipe,
    _rng,
)
from .errors import ParameterError
from .geometry import load_scene, score_scene, select_references
from .imaging import load_image, save_image, to_uint8

REF_OFFSET_RANGE = 5
DEFAULT_CROP = 128
HOLDOUT_EVERY = 8

VIDEO_KIND = "video-triplet"
SCENE_KIND = "multi-view-scene"

_IMAGE_EXTS = (".png", ".jpg", ".jpeg", ".bmp")


@dataclass(frozen=True)
class RawSequence:
    """One clean target view with its two clean reference views."""

    target_path: str
    ref1_path: str
    ref2_path: str
    source_kind: str


@dataclass(frozen=True)
class BuildResult:
    manifest_path: str
    entries: list
    skipped: int


def _clip_hash(seed: int, name: str) -> int:
    # stable per-clip key: adding or removing sibling clips does not change it
    return derive_seed(seed, zlib.crc32(name.encode("utf-8")))


def ingest_video_triplets(
    video_dir: str, fraction: float = 1.0, seed: int = 0
) -> tuple[list[RawSequence], int]:
    """Turn a directory of frame-sequence clips into raw sequences.

    Each immediate subdirectory is one clip; three of its frames are chosen in
    random order (first becomes the target, the other two the references).
    A deterministic `fraction` of clips is retained: clips are ranked by a
    seed-keyed hash of their name and the lowest-ranked max(1, round(n *
    fraction)) survive, so the subsample is stable run to run. Returns the
    sequences plus the count of clips skipped for having fewer than 3 frames.
    """
    if not 0.0 < fraction <= 1.0:
        raise ParameterError(f"fraction must lie in (0, 1], got {fraction}")
    if not os.path.isdir(video_dir):
        raise ParameterError(f"not a directory: {video_dir}")
    clips = sorted(
        d for d in os.listdir(video_dir) if os.path.isdir(os.path.join(video_dir, d))
    )
    keep = max(1, int(round(len(clips) * fraction)))
    if keep < len(clips):
        ranked = sorted(clips, key=lambda name: (_clip_hash(seed, name), name))
        retained = set(ranked[:keep])
        clips = [c for c in clips if c in retained]

    sequences = []
    skipped = 0
    for clip in clips:
        clip_dir = os.path.join(video_dir, clip)
        frames = sorted(
            f for f in os.listdir(clip_dir) if f.lower().endswith(_IMAGE_EXTS)
        )
        if len(frames) < 3:
            skipped += 1
            continue
        rng = _rng(_clip_hash(seed, clip))
        picks = rng.choice(len(frames), size=3, replace=False)
        paths = [os.path.join(clip_dir, frames[int(i)]) for i in picks]
        sequences.append(RawSequence(paths[0], paths[1], paths[2], VIDEO_KIND))
    return sequences, skipped


def holdout_ids(view_ids: list[int], every: int = HOLDOUT_EVERY) -> list[int]:
    """Every `every`-th id in sorted order (positions every-1, 2*every-1, ...)."""
    ordered = sorted(view_ids)
    return [vid for pos, vid in enumerate(ordered) if (pos + 1) % every == 0]


def ingest_scene_views(
    scene_path: str, grid: int = 16, every: int = HOLDOUT_EVERY
) -> tuple[list[RawSequence], list[int]]:
    """Build raw sequences from a multi-view scene file.

    Every `every`-th view (in id order) is held out for evaluation and appears
    in no training sequence, neither as target nor as reference. Each retained
    view becomes a target once, with its two references picked by the mutual
    matching cost over the retained views. Image paths resolve relative to the
    scene file. Returns the sequences and the held-out view ids.
    """
    views = load_scene(scene_path)
    if len(views) < 3:
        raise ParameterError(f"{scene_path}: need at least 3 views, got {len(views)}")
    held = set(holdout_ids([v.id for v in views], every))
    retained = [v for v in views if v.id not in held]
    if len(retained) < 3:
        raise ParameterError(
            f"{scene_path}: only {len(retained)} views remain after holdout"
        )
    base = os.path.dirname(os.path.abspath(scene_path))

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    table = score_scene(retained, grid=grid)
    by_id = {v.id: v for v in retained}
    sequences = []
    for view in retained:
        r1, r2 = select_references(table, view.id, 2)
        sequences.append(
            RawSequence(
                resolve(view.image_path),
                resolve(by_id[r1].image_path),
                resolve(by_id[r2].image_path),
                SCENE_KIND,
            )
        )
    return sequences, sorted(held)


def shift_with_clamp(img: np.ndarray, dy: int, dx: int) -> np.ndarray:
    """Global integer translation; out(i,j) = img(i+dy, j+dx) clamped to edges."""
    h, w = img.shape[:2]
    rows = np.clip(np.arange(h) + dy, 0, h - 1)
    cols = np.clip(np.arange(w) + dx, 0, w - 1)
    return img[np.ix_(rows, cols)]


def apply_augment(
    img: np.ndarray, top: int, left: int, size: int, hflip: bool, vflip: bool, rot90: int
) -> np.ndarray:
    """Crop then flip then rotate, in that order (the recorded convention)."""
    if top < 0 or left < 0 or top + size > img.shape[0] or left + size > img.shape[1]:
        raise ParameterError(
            f"crop ({top},{left},{size}) exceeds image {img.shape[:2]}"
        )
    out = img[top : top + size, left : left + size]
    if hflip:
        out = out[:, ::-1]
    if vflip:
        out = out[::-1, :]
    out = np.rot90(out, rot90 % 4)
    return np.ascontiguousarray(out)


def invert_augment(img: np.ndarray, hflip: bool, vflip: bool, rot90: int) -> np.ndarray:
    """Undo the flip/rotation part of apply_augment (crop is not invertible)."""
    out = np.rot90(img, -(rot90 % 4))
    if vflip:
        out = out[::-1, :]
    if hflip:
        out = out[:, ::-1]
    return np.ascontiguousarray(out)


def _derive_sample(
    seq: RawSequence,
    images: dict,
    sample_id: int,
    seed: int,
    crop: int,
    toggles: StageToggles,
):
    """Degrade, offset, crop, and augment one sample. Returns (entry, planes)."""
    target = images[seq.target_path]
    ref1 = images[seq.ref1_path]
    ref2 = images[seq.ref2_path]
    h, w = target.shape[:2]

    recipe_seed = derive_seed(seed, sample_id, 0)
    recipe = sample_recipe(recipe_seed, (h, w), toggles)
    degraded = apply_recipe(target, recipe)

    rng = _rng(derive_seed(seed, sample_id, 1))
    off1 = (int(rng.integers(-REF_OFFSET_RANGE, REF_OFFSET_RANGE + 1)),
            int(rng.integers(-REF_OFFSET_RANGE, REF_OFFSET_RANGE + 1)))
    off2 = (int(rng.integers(-REF_OFFSET_RANGE, REF_OFFSET_RANGE + 1)),
            int(rng.integers(-REF_OFFSET_RANGE, REF_OFFSET_RANGE + 1)))
    top = int(rng.integers(0, h - crop + 1))
    left = int(rng.integers(0, w - crop + 1))
    hflip = bool(rng.integers(0, 2))
    vflip = bool(rng.integers(0, 2))
    rot = int(rng.integers(0, 4))

    def finish(img):
        return apply_augment(img, top, left, crop, hflip, vflip, rot)

    planes = {
        "gt": finish(target),
        "degraded": finish(degraded),
        "ref1": finish(shift_with_clamp(ref1, *off1)),
        "ref2": finish(shift_with_clamp(ref2, *off2)),
    }
    entry = {
        "sample_id": sample_id,
        "gt_path": f"images/{sample_id:05d}_gt.png",
        "degraded_path": f"images/{sample_id:05d}_in.png",
        "ref1_path": f"images/{sample_id:05d}_ref1.png",
        "ref2_path": f"images/{sample_id:05d}_ref2.png",
        "recipe": recipe.to_dict(),
        "ref_offsets": [list(off1), list(off2)],
        "crop": [top, left, crop],
        "aug": {"hflip": hflip, "vflip": vflip, "rot90": rot},
        "source": {
            "target": seq.target_path,
            "ref1": seq.ref1_path,
            "ref2": seq.ref2_path,
            "kind": seq.source_kind,
        },
    }
    return entry, planes


def build_dataset(
    sequences: list[RawSequence],
    out_dir: str,
    seed: int = 0,
    crop: int = DEFAULT_CROP,
    count: int | None = None,
    toggles: StageToggles = StageToggles(),
    jobs: int = 1,
) -> BuildResult:
    """Emit `count` training samples (default: one per sequence) plus a manifest.

    Sample i draws everything from seeds derived from (seed, i), so serial and
    parallel builds are byte-identical. Sequences whose images are smaller
    than the crop, or whose three images disagree in size, are skipped and
    counted. Written paths in the manifest are relative to out_dir; source
    paths are absolute.
    """
    if not sequences:
        raise ParameterError("no sequences to build from")
    if crop < 8:
        raise ParameterError(f"crop must be at least 8, got {crop}")
    if count is None:
        count = len(sequences)
    if count < 1:
        raise ParameterError(f"count must be at least 1, got {count}")
    if jobs < 1:
        raise ParameterError(f"jobs must be at least 1, got {jobs}")

    os.makedirs(os.path.join(out_dir, "images"), exist_ok=True)

    sequences = [
        RawSequence(
            os.path.abspath(s.target_path),
            os.path.abspath(s.ref1_path),
            os.path.abspath(s.ref2_path),
            s.source_kind,
        )
        for s in sequences
    ]
    paths = sorted({p for s in sequences for p in (s.target_path, s.ref1_path, s.ref2_path)})
    images = {p: load_image(p) for p in paths}

    def usable(seq):
        shapes = {images[p].shape for p in (seq.target_path, seq.ref1_path, seq.ref2_path)}
        if len(shapes) != 1:
            return False
        h, w = next(iter(shapes))[:2]
        return h >= crop and w >= crop

    jobs_list = []
    skipped = 0
    for sample_id in range(count):
        seq = sequences[sample_id % len(sequences)]
        if not usable(seq):
            skipped += 1
            continue
        jobs_list.append((sample_id, seq))

    def build_one(item):
        sample_id, seq = item
        entry, planes = _derive_sample(seq, images, sample_id, seed, crop, toggles)
        for key, rel in (
            ("gt", entry["gt_path"]),
            ("degraded", entry["degraded_path"]),
            ("ref1", entry["ref1_path"]),
            ("ref2", entry["ref2_path"]),
        ):
            save_image(os.path.join(out_dir, rel), planes[key])
        return entry

    if jobs == 1:
        entries = [build_one(item) for item in jobs_list]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(build_one, jobs_list))

    manifest_path = os.path.join(out_dir, "manifest.jsonl")
    with open(manifest_path, "w") as f:
        for entry in entries:
            f.write(json.dumps(entry) + "\n")
    return BuildResult(manifest_path, entries, skipped)


def read_manifest(manifest_path: str) -> list[dict]:
    entries = []
    with open(manifest_path) as f:
        for line in f:
            line = line.strip()
            if line:
                entries.append(json.loads(line))
    return entries


def replay_entry(entry: dict) -> dict:
    """Recompute a sample's four 8-bit planes from its sources and records."""
    recipe = DegradationRecipe.from_dict(entry["recipe"])
    target = load_image(entry["source"]["target"])
    ref1 = load_image(entry["source"]["ref1"])
    ref2 = load_image(entry["source"]["ref2"])
    top, left, size = entry["crop"]
    aug = entry["aug"]
    (o1y, o1x), (o2y, o2x) = entry["ref_offsets"]

    def finish(img):
        return to_uint8(
            apply_augment(img, top, left, size, aug["hflip"], aug["vflip"], aug["rot90"])
        )

    return {
        "gt": finish(target),
        "degraded": finish(apply_recipe(target, recipe)),
        "ref1": finish(shift_with_clamp(ref1, o1y, o1x)),
        "ref2": finish(shift_with_clamp(ref2, o2y, o2x)),
    }


def verify_entry(entry: dict, out_dir: str) -> bool:
    """True when the stored PNGs match a fresh replay bit-for-bit."""
    replayed = replay_entry(entry)
    for key, path_key in (
        ("gt", "gt_path"),
        ("degraded", "degraded_path"),
        ("ref1", "ref1_path"),
        ("ref2", "ref2_path"),
    ):
        with Image.open(os.path.join(out_dir, entry[path_key])) as im:
            stored = np.asarray(im.convert("RGB"))
        if not np.array_equal(stored, replayed[key]):
            return False
    return True
