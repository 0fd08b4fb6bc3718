"""Simulate render-style degradations, select overlapping views, forge paired data."""

from .errors import ParameterError
from .imaging import (
    OrientedMaskParams,
    convolve,
    from_uint8,
    load_image,
    make_anisotropic_gaussian,
    make_isotropic_gaussian,
    oriented_mask,
    save_image,
    to_uint8,
    validate_image,
)
from .degrade import (
    AblurParams,
    DegradationRecipe,
    ReposParams,
    SgnParams,
    StageToggles,
    apply_aniso_blur,
    apply_recipe,
    apply_repositioning,
    apply_splatted_noise,
    blend_region_adaptive,
    derive_seed,
    sample_recipe,
)
from .geometry import (
    CameraView,
    IntersectionSet,
    SceneSphere,
    ViewMatchTable,
    directed_cost,
    estimate_scene_sphere,
    load_scene,
    mutual_cost_table,
    save_scene,
    score_scene,
    select_references,
    shoot_intersections,
)
from .dataset import (
    BuildResult,
    RawSequence,
    build_dataset,
    ingest_scene_views,
    ingest_video_triplets,
    read_manifest,
    replay_entry,
    verify_entry,
)
from .metrics import MetricReport, compare, psnr, ssim
from .llff import convert_poses

__version__ = "0.1.0"

__all__ = [
    "AblurParams",
    "BuildResult",
    "CameraView",
    "DegradationRecipe",
    "IntersectionSet",
    "MetricReport",
    "OrientedMaskParams",
    "ParameterError",
    "RawSequence",
    "ReposParams",
    "SceneSphere",
    "SgnParams",
    "StageToggles",
    "ViewMatchTable",
    "apply_aniso_blur",
    "apply_recipe",
    "apply_repositioning",
    "apply_splatted_noise",
    "blend_region_adaptive",
    "build_dataset",
    "compare",
    "convert_poses",
    "convolve",
    "derive_seed",
    "directed_cost",
    "estimate_scene_sphere",
    "from_uint8",
    "ingest_scene_views",
    "ingest_video_triplets",
    "load_image",
    "load_scene",
    "make_anisotropic_gaussian",
    "make_isotropic_gaussian",
    "mutual_cost_table",
    "oriented_mask",
    "psnr",
    "read_manifest",
    "replay_entry",
    "save_image",
    "save_scene",
    "sample_recipe",
    "score_scene",
    "select_references",
    "shoot_intersections",
    "ssim",
    "to_uint8",
    "validate_image",
    "verify_entry",
]
