"""Command-line front end.

Subcommands: degrade, select-views, build-dataset, metrics, convert-poses.
Exit codes: 0 success, 1 parameter error (message on stderr), 2 I/O failure.
Randomized commands echo their effective configuration, seed included, as the
first stdout line, so any artifact can be regenerated from the printed line
alone. The seed always defaults to DEFAULT_SEED; wall-clock time is never
consulted. A JSON --config file supplies defaults for the subcommand's flags
(keys are flag names with dashes as underscores); explicit flags win and
unknown keys are rejected.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import llff
from .dataset import build_dataset, ingest_scene_views, ingest_video_triplets
from .degrade import StageToggles, apply_recipe, derive_seed, sample_recipe
from .errors import ParameterError
from .geometry import (
    estimate_scene_sphere,
    load_scene,
    save_scene,
    score_scene,
    select_references,
)
from .imaging import load_image, save_image
from .metrics import compare

DEFAULT_SEED = 0


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; bad flags are parameter errors here
    def error(self, message):
        raise ParameterError(message)


def _add_toggles(p):
    p.add_argument("--no-sgn", action="store_true", help="disable splatted noise")
    p.add_argument("--no-repos", action="store_true", help="disable re-positioning")
    p.add_argument("--no-ablur", action="store_true", help="disable anisotropic blur")
    p.add_argument("--no-ra", action="store_true", help="disable region-adaptive masking")


def _add_common(p):
    p.add_argument("--config", help="JSON file of defaults for this subcommand")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED,
                   help=f"base seed (default {DEFAULT_SEED}, never wall-clock)")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel workers; output is byte-identical for any value")


def build_parser() -> tuple[_Parser, dict]:
    parser = _Parser(prog="nerfsim", description=__doc__)
    subs = parser.add_subparsers(dest="command", parser_class=_Parser)
    table = {}

    p = subs.add_parser("degrade", help="apply a sampled degradation to images")
    p.add_argument("--input", nargs="+", help="input PNG path(s)")
    p.add_argument("--output", help="output PNG path, or a directory for multiple inputs")
    p.add_argument("--preview", action="store_true",
                   help="also write a side-by-side before/after PNG")
    _add_toggles(p)
    _add_common(p)
    table["degrade"] = p

    p = subs.add_parser("select-views", help="rank reference views by mutual matching cost")
    p.add_argument("--cameras", help="scene JSON file")
    p.add_argument("--target", default="all", help="view id, or 'all'")
    p.add_argument("--k", type=int, default=2, help="references per target")
    p.add_argument("--grid", type=int, default=16, help="rays per image side")
    p.add_argument("--sphere-center", help="override estimated center as x,y,z")
    p.add_argument("--sphere-radius", type=float, help="override estimated radius")
    p.add_argument("--config", help="JSON file of defaults for this subcommand")
    table["select-views"] = p

    p = subs.add_parser("build-dataset", help="forge paired training samples")
    p.add_argument("--scenes", help="directory of scene JSON files")
    p.add_argument("--video", help="directory of frame-sequence clips")
    p.add_argument("--out", help="output dataset directory")
    p.add_argument("--count", type=int, help="samples to emit (default: one per sequence)")
    p.add_argument("--fraction", type=float, default=1.0,
                   help="fraction of video clips to retain, in (0,1]")
    p.add_argument("--crop", type=int, default=128, help="square patch size")
    p.add_argument("--grid", type=int, default=16, help="rays per side for view selection")
    _add_toggles(p)
    _add_common(p)
    table["build-dataset"] = p

    p = subs.add_parser("metrics", help="PSNR/SSIM between two images")
    p.add_argument("--ref", help="reference PNG")
    p.add_argument("--test", help="test PNG")
    p.add_argument("--config", help="JSON file of defaults for this subcommand")
    table["metrics"] = p

    p = subs.add_parser("convert-poses", help="pose table to scene JSON")
    p.add_argument("--input", help="pose file (.npy or raw doubles)")
    p.add_argument("--output", help="scene JSON to write")
    p.add_argument("--image-dir", help="directory of per-view images, sorted order")
    p.add_argument("--pattern", default="view_{:03d}.png",
                   help="file-name pattern when no --image-dir is given")
    p.add_argument("--config", help="JSON file of defaults for this subcommand")
    table["convert-poses"] = p

    return parser, table


def _merge_config(parser, sub, args, argv):
    """Re-parse with config values as defaults; explicit flags stay on top."""
    if not getattr(args, "config", None):
        return args
    path = args.config
    if not os.path.isfile(path):
        raise FileNotFoundError(f"config file not found: {path}")
    with open(path) as f:
        try:
            cfg = json.load(f)
        except json.JSONDecodeError as e:
            raise ParameterError(f"config {path} is not valid JSON: {e}") from None
    if not isinstance(cfg, dict):
        raise ParameterError(f"config {path} must hold a JSON object")
    dests = {a.dest for a in sub._actions}
    unknown = sorted(set(cfg) - dests)
    if unknown:
        raise ParameterError(f"config {path} has unknown keys: {', '.join(unknown)}")
    sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def _require(args, *names):
    for name in names:
        if getattr(args, name.replace("-", "_"), None) in (None, []):
            raise ParameterError(f"--{name} is required")


def _echo(obj):
    print(json.dumps(obj))


def _toggles(args) -> StageToggles:
    return StageToggles(
        sgn=not args.no_sgn,
        repos=not args.no_repos,
        ablur=not args.no_ablur,
        region_adaptive=not args.no_ra,
    )


def cmd_degrade(args) -> int:
    _require(args, "input", "output")
    if args.jobs < 1:
        raise ParameterError(f"--jobs must be at least 1, got {args.jobs}")
    for path in args.input:
        if not os.path.isfile(path):
            raise FileNotFoundError(f"input not found: {path}")

    multi = len(args.input) > 1
    out_is_dir = args.output.endswith(os.sep) or os.path.isdir(args.output)
    if multi and not out_is_dir:
        raise ParameterError("--output must be a directory when degrading multiple inputs")

    _echo({
        "command": "degrade",
        "seed": args.seed,
        "input": list(args.input),
        "output": args.output,
        "preview": bool(args.preview),
        "no_sgn": args.no_sgn, "no_repos": args.no_repos,
        "no_ablur": args.no_ablur, "no_ra": args.no_ra,
        "jobs": args.jobs,
    })

    if out_is_dir:
        os.makedirs(args.output, exist_ok=True)

    toggles = _toggles(args)

    def one(item):
        index, in_path = item
        img = load_image(in_path)
        recipe = sample_recipe(derive_seed(args.seed, index), img.shape[:2], toggles)
        out = apply_recipe(img, recipe)
        if out_is_dir:
            out_path = os.path.join(args.output, os.path.basename(in_path))
        else:
            out_path = args.output
        save_image(out_path, out)
        stem = os.path.splitext(out_path)[0]
        with open(stem + ".recipe.json", "w") as f:
            f.write(recipe.to_json(indent=2) + "\n")
        if args.preview:
            gap = np.ones((img.shape[0], 8, 3))
            save_image(stem + ".preview.png", np.concatenate([img, gap, out], axis=1))
        return out_path

    items = list(enumerate(args.input))
    if args.jobs == 1 or len(items) == 1:
        for item in items:
            one(item)
    else:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            list(pool.map(one, items))
    return 0


def cmd_select_views(args) -> int:
    _require(args, "cameras")
    if not os.path.isfile(args.cameras):
        raise FileNotFoundError(f"scene file not found: {args.cameras}")
    views = load_scene(args.cameras)

    center = None
    if args.sphere_center:
        parts = args.sphere_center.split(",")
        if len(parts) != 3:
            raise ParameterError(f"--sphere-center must be x,y,z, got {args.sphere_center!r}")
        center = tuple(float(p) for p in parts)
    sphere = estimate_scene_sphere(views, center, args.sphere_radius)

    _echo({
        "command": "select-views",
        "cameras": args.cameras,
        "target": args.target,
        "k": args.k,
        "grid": args.grid,
        "sphere_center": list(sphere.center),
        "sphere_radius": sphere.radius,
    })

    table = score_scene(views, grid=args.grid, sphere=sphere)
    if args.target == "all":
        targets = sorted(v.id for v in views)
    else:
        try:
            targets = [int(args.target)]
        except ValueError:
            raise ParameterError(f"--target must be a view id or 'all', got {args.target!r}")
    for t in targets:
        refs = select_references(table, t, args.k)
        _echo({
            "target": t,
            "references": refs,
            "mutual_costs": [table.mutual_cost(t, r) for r in refs],
        })
    return 0


def cmd_build_dataset(args) -> int:
    _require(args, "out")
    if not args.scenes and not args.video:
        raise ParameterError("need --scenes and/or --video")
    if args.jobs < 1:
        raise ParameterError(f"--jobs must be at least 1, got {args.jobs}")
    for d in (args.scenes, args.video):
        if d and not os.path.isdir(d):
            raise FileNotFoundError(f"input directory not found: {d}")

    _echo({
        "command": "build-dataset",
        "seed": args.seed,
        "scenes": args.scenes, "video": args.video, "out": args.out,
        "count": args.count, "fraction": args.fraction, "crop": args.crop,
        "grid": args.grid,
        "no_sgn": args.no_sgn, "no_repos": args.no_repos,
        "no_ablur": args.no_ablur, "no_ra": args.no_ra,
        "jobs": args.jobs,
    })

    sequences = []
    skipped_clips = 0
    holdouts = {}
    if args.scenes:
        scene_files = sorted(
            os.path.join(args.scenes, f)
            for f in os.listdir(args.scenes)
            if f.endswith(".json")
        )
        if not scene_files:
            raise ParameterError(f"no scene JSON files in {args.scenes}")
        for sf in scene_files:
            seqs, held = ingest_scene_views(sf, grid=args.grid)
            sequences.extend(seqs)
            holdouts[os.path.basename(sf)] = held
    if args.video:
        seqs, skipped_clips = ingest_video_triplets(args.video, args.fraction, args.seed)
        sequences.extend(seqs)

    result = build_dataset(
        sequences, args.out,
        seed=args.seed, crop=args.crop, count=args.count,
        toggles=_toggles(args), jobs=args.jobs,
    )
    _echo({
        "samples": len(result.entries),
        "skipped_sequences": result.skipped,
        "skipped_clips": skipped_clips,
        "holdout": holdouts,
        "manifest": os.path.relpath(result.manifest_path),
    })
    return 0


def cmd_metrics(args) -> int:
    _require(args, "ref", "test")
    for path in (args.ref, args.test):
        if not os.path.isfile(path):
            raise FileNotFoundError(f"image not found: {path}")
    report = compare(load_image(args.ref), load_image(args.test))
    _echo(report.to_dict())
    return 0


def cmd_convert_poses(args) -> int:
    _require(args, "input", "output")
    if not os.path.isfile(args.input):
        raise FileNotFoundError(f"pose file not found: {args.input}")
    image_files = None
    if args.image_dir:
        if not os.path.isdir(args.image_dir):
            raise FileNotFoundError(f"image directory not found: {args.image_dir}")
        image_files = llff.list_image_files(args.image_dir)
    views = llff.convert_poses(args.input, image_files, args.pattern)
    save_scene(views, args.output)
    _echo({"command": "convert-poses", "input": args.input,
           "output": args.output, "views": len(views)})
    return 0


_HANDLERS = {
    "degrade": cmd_degrade,
    "select-views": cmd_select_views,
    "build-dataset": cmd_build_dataset,
    "metrics": cmd_metrics,
    "convert-poses": cmd_convert_poses,
}


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser, table = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as e:  # --help
            return int(e.code or 0)
        if not args.command:
            parser.print_usage(sys.stderr)
            return 1
        args = _merge_config(parser, table[args.command], args, argv)
        return _HANDLERS[args.command](args)
    except ParameterError as e:
        print(f"nerfsim: error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"nerfsim: i/o error: {e}", file=sys.stderr)
        return 2


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
