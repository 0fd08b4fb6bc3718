"""Render-degradation simulator: splatted noise, re-positioning, anisotropic blur.

A recipe captures every stochastic choice for one target view. Stages run in a
fixed order (splatted Gaussian noise, then re-positioning, then anisotropic
blur), each optionally blended with its stage input through its own oriented
Gaussian mask so degradations stay spatially variant. Replaying a recipe on
the same input is bit-identical: all randomness comes from counter-based
Philox streams keyed by explicit 64-bit seeds, drawn as whole planes in one
vectorized pass.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace

import numpy as np

from .errors import ParameterError
from .imaging import (
    OrientedMaskParams,
    convolve_raw,
    make_anisotropic_gaussian,
    make_isotropic_gaussian,
    oriented_mask,
    validate_image,
)

# Sampling ranges. Mask ranges are expressed in a 128-px working frame and
# scaled linearly to the actual image dimensions when a recipe is drawn.
NOISE_SIGMA_RANGE = (0.01, 0.05)
SGN_KERNEL_SIZE = 5
SGN_BLUR_SIGMA_RANGE = (0.3, 1.0)
REPOS_PROBABILITY = 0.1
REPOS_OFFSET_RANGE = 2
ABLUR_SIZES = (3, 5, 7)
ABLUR_SIGMA_RANGE = (0.2, 1.2)
MASK_FRAME = 128.0
MASK_CENTER_RANGE = (-16.0, 144.0)
MASK_SIGMA_I_RANGE = (13.0, 25.0)
MASK_SIGMA_J_MAX = 24.0

_SEED_MAX = 2 ** 64


def derive_seed(*parts: int) -> int:
    """Fold integer parts into one 64-bit seed, stable across runs and platforms."""
    state = np.random.SeedSequence([int(p) & (_SEED_MAX - 1) for p in parts])
    return int(state.generate_state(1, np.uint64)[0])


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed & (_SEED_MAX - 1)))


@dataclass(frozen=True)
class SgnParams:
    noise_sigma: float
    blur_sigma: float
    noise_plane_seed: int
    mask: OrientedMaskParams
    enabled: bool = True

    def __post_init__(self):
        if self.noise_sigma < 0.0:
            raise ParameterError(f"noise sigma must be >= 0, got {self.noise_sigma}")
        if not self.blur_sigma > 0.0:
            raise ParameterError(f"blur sigma must be positive, got {self.blur_sigma}")


@dataclass(frozen=True)
class ReposParams:
    probability: float
    offset_range: int
    pixel_seed: int
    mask: OrientedMaskParams
    enabled: bool = True

    def __post_init__(self):
        if not 0.0 <= self.probability <= 1.0:
            raise ParameterError(f"probability must lie in [0, 1], got {self.probability}")
        if self.offset_range < 0:
            raise ParameterError(f"offset range must be >= 0, got {self.offset_range}")


@dataclass(frozen=True)
class AblurParams:
    size: int
    sigma_major: float
    sigma_minor: float
    angle_deg: float
    mask: OrientedMaskParams
    enabled: bool = True

    def __post_init__(self):
        if self.size not in ABLUR_SIZES:
            raise ParameterError(f"blur size must be one of {ABLUR_SIZES}, got {self.size}")
        if not (self.sigma_major > 0.0 and self.sigma_minor > 0.0):
            raise ParameterError("blur sigmas must be positive")


@dataclass(frozen=True)
class StageToggles:
    """Which degradations a sampled recipe enables (the ablation grid knobs)."""

    sgn: bool = True
    repos: bool = True
    ablur: bool = True
    region_adaptive: bool = True


@dataclass(frozen=True)
class DegradationRecipe:
    """Complete, serializable parameter set for degrading one target view."""

    seed: int
    sgn: SgnParams
    repos: ReposParams
    ablur: AblurParams
    region_adaptive: bool = True

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, d: dict) -> "DegradationRecipe":
        def mask(m):
            return OrientedMaskParams(**m)

        sgn = dict(d["sgn"])
        sgn["mask"] = mask(sgn["mask"])
        repos = dict(d["repos"])
        repos["mask"] = mask(repos["mask"])
        ablur = dict(d["ablur"])
        ablur["mask"] = mask(ablur["mask"])
        return cls(
            seed=d["seed"],
            sgn=SgnParams(**sgn),
            repos=ReposParams(**repos),
            ablur=AblurParams(**ablur),
            region_adaptive=d["region_adaptive"],
        )

    @classmethod
    def from_json(cls, text: str) -> "DegradationRecipe":
        return cls.from_dict(json.loads(text))

    def with_toggles(self, toggles: StageToggles) -> "DegradationRecipe":
        return replace(
            self,
            sgn=replace(self.sgn, enabled=toggles.sgn),
            repos=replace(self.repos, enabled=toggles.repos),
            ablur=replace(self.ablur, enabled=toggles.ablur),
            region_adaptive=toggles.region_adaptive,
        )


def _uniform_open_low(rng: np.random.Generator, low: float, high: float) -> float:
    # uniform() includes its lower bound; redraw the (measure-zero) exact hit
    # so open-interval ranges stay open.
    val = float(rng.uniform(low, high))
    while val == low:
        val = float(rng.uniform(low, high))
    return val


def _sample_mask(rng: np.random.Generator, height: int, width: int) -> OrientedMaskParams:
    """Draw mask parameters in the 128-frame ranges, scaled to the actual dims."""
    scale_i = height / MASK_FRAME
    scale_j = width / MASK_FRAME
    lo, hi = MASK_CENTER_RANGE
    center_i = _uniform_open_low(rng, lo, hi) * scale_i
    center_j = _uniform_open_low(rng, lo, hi) * scale_j
    sigma_i = _uniform_open_low(rng, *MASK_SIGMA_I_RANGE) * scale_i
    # sigma_j lies in (0, 24]; flip a half-open draw so the closed end is the top.
    sigma_j = (MASK_SIGMA_J_MAX - float(rng.uniform(0.0, MASK_SIGMA_J_MAX))) * scale_j
    angle = _uniform_open_low(rng, 0.0, 180.0)
    return OrientedMaskParams(center_i, center_j, sigma_i, sigma_j, angle)


def sample_recipe(
    rng_seed: int, img_dims: tuple[int, int], toggles: StageToggles = StageToggles()
) -> DegradationRecipe:
    """Draw a full recipe for an image of (height, width), deterministic in the seed.

    The draw order is fixed; recipes from the same seed are identical field for
    field regardless of toggles (toggles only set the enabled flags).
    """
    height, width = img_dims
    if height < 8 or width < 8:
        raise ParameterError(f"image dims must be at least 8x8, got {img_dims}")
    rng = _rng(rng_seed)
    noise_sigma = float(rng.uniform(*NOISE_SIGMA_RANGE))
    blur_sigma = float(rng.uniform(*SGN_BLUR_SIGMA_RANGE))
    noise_plane_seed = int(rng.integers(0, _SEED_MAX, dtype=np.uint64))
    sgn_mask = _sample_mask(rng, height, width)

    pixel_seed = int(rng.integers(0, _SEED_MAX, dtype=np.uint64))
    repos_mask = _sample_mask(rng, height, width)

    ablur_size = int(rng.choice(ABLUR_SIZES))
    s1 = float(rng.uniform(*ABLUR_SIGMA_RANGE))
    s2 = float(rng.uniform(*ABLUR_SIGMA_RANGE))
    ablur_angle = float(rng.uniform(0.0, 180.0))
    ablur_mask = _sample_mask(rng, height, width)

    return DegradationRecipe(
        seed=int(rng_seed),
        sgn=SgnParams(noise_sigma, blur_sigma, noise_plane_seed, sgn_mask, toggles.sgn),
        repos=ReposParams(
            REPOS_PROBABILITY, REPOS_OFFSET_RANGE, pixel_seed, repos_mask, toggles.repos
        ),
        ablur=AblurParams(
            ablur_size, max(s1, s2), min(s1, s2), ablur_angle, ablur_mask, toggles.ablur
        ),
        region_adaptive=toggles.region_adaptive,
    )


def apply_splatted_noise(
    img: np.ndarray, noise_sigma: float, kernel: np.ndarray, noise_seed: int
) -> np.ndarray:
    """Add per-pixel-per-channel Gaussian noise, then blur it across a 2D area.

    Models rays re-projected into a neighborhood: the additive noise plane is
    splatted by an isotropic blur kernel. Output is clamped to [0, 1]; the
    intermediate noisy image is not.
    """
    validate_image(img)
    if noise_sigma < 0.0:
        raise ParameterError(f"noise sigma must be >= 0, got {noise_sigma}")
    noisy = img
    if noise_sigma > 0.0:
        noise = _rng(noise_seed).standard_normal(img.shape, dtype=np.float64)
        noisy = img + noise_sigma * noise
    return np.clip(convolve_raw(noisy, kernel, "replicate"), 0.0, 1.0)


def reposition_with_offsets(
    img: np.ndarray, move: np.ndarray, d_i: np.ndarray, d_j: np.ndarray
) -> np.ndarray:
    """Gather pixels from (i + d_i, j + d_j) where move is set, clamped at edges.

    Deterministic core of the re-positioning stage; offsets apply to whole
    pixels (all three channels move together).
    """
    h, w = img.shape[:2]
    ii, jj = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    src_i = np.clip(np.where(move, ii + d_i, ii), 0, h - 1)
    src_j = np.clip(np.where(move, jj + d_j, jj), 0, w - 1)
    return img[src_i, src_j]


def apply_repositioning(
    img: np.ndarray, probability: float, offset_range: int, pixel_seed: int
) -> np.ndarray:
    """Jitter each pixel independently to a nearby integer source location.

    With the given probability a pixel samples from (i + di, j + dj), with di,
    dj uniform over [-offset_range, offset_range]; otherwise it is copied.
    """
    validate_image(img)
    if not 0.0 <= probability <= 1.0:
        raise ParameterError(f"probability must lie in [0, 1], got {probability}")
    if offset_range < 0:
        raise ParameterError(f"offset range must be >= 0, got {offset_range}")
    h, w = img.shape[:2]
    rng = _rng(pixel_seed)
    u = rng.random((h, w))
    d_i = rng.integers(-offset_range, offset_range + 1, size=(h, w))
    d_j = rng.integers(-offset_range, offset_range + 1, size=(h, w))
    return reposition_with_offsets(img, u < probability, d_i, d_j)


def apply_aniso_blur(img: np.ndarray, params: AblurParams) -> np.ndarray:
    """Blur with an oriented anisotropic Gaussian kernel, replicate border."""
    validate_image(img)
    kernel = make_anisotropic_gaussian(
        params.size, params.sigma_major, params.sigma_minor, params.angle_deg
    )
    return np.clip(convolve_raw(img, kernel, "replicate"), 0.0, 1.0)


def blend_region_adaptive(
    inp: np.ndarray, degraded: np.ndarray, mask: np.ndarray
) -> np.ndarray:
    """Per-pixel linear blend: mask * degraded + (1 - mask) * input."""
    if inp.shape != degraded.shape:
        raise ParameterError(f"shape mismatch: {inp.shape} vs {degraded.shape}")
    if mask.shape != inp.shape[:2]:
        raise ParameterError(f"mask shape {mask.shape} does not match image {inp.shape[:2]}")
    m = mask[:, :, None]
    return m * degraded + (1.0 - m) * inp


def apply_recipe(img: np.ndarray, recipe: DegradationRecipe) -> np.ndarray:
    """Run the enabled stages in order, each region-adaptively blended.

    Stage order is fixed: splatted noise, re-positioning, anisotropic blur.
    With region_adaptive set, every stage's output is blended with that
    stage's input through the stage's own mask. Bit-deterministic in the
    recipe; with everything disabled the input is returned unchanged.
    """
    validate_image(img)
    h, w = img.shape[:2]
    out = img.copy()

    if recipe.sgn.enabled:
        kernel = make_isotropic_gaussian(SGN_KERNEL_SIZE, recipe.sgn.blur_sigma)
        stage = apply_splatted_noise(
            out, recipe.sgn.noise_sigma, kernel, recipe.sgn.noise_plane_seed
        )
        if recipe.region_adaptive:
            stage = blend_region_adaptive(out, stage, oriented_mask(h, w, recipe.sgn.mask))
        out = stage

    if recipe.repos.enabled:
        stage = apply_repositioning(
            out, recipe.repos.probability, recipe.repos.offset_range, recipe.repos.pixel_seed
        )
        if recipe.region_adaptive:
            stage = blend_region_adaptive(out, stage, oriented_mask(h, w, recipe.repos.mask))
        out = stage

    if recipe.ablur.enabled:
        stage = apply_aniso_blur(out, recipe.ablur)
        if recipe.region_adaptive:
            stage = blend_region_adaptive(out, stage, oriented_mask(h, w, recipe.ablur.mask))
        out = stage

    return np.clip(out, 0.0, 1.0)
