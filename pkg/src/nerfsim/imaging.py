"""Image container conventions, Gaussian kernels, convolution, and oriented masks.

Images are float64 numpy arrays of shape (H, W, 3) with intensities in [0, 1],
row-major. 8-bit quantization happens only at PNG I/O, with round-half-away-
from-zero, so chained operations never compound quantization error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import ParameterError

MIN_IMAGE_DIM = 8
KERNEL_SIZES = (3, 5, 7, 9, 11)

# scipy.ndimage names for our border modes; "replicate" is the pipeline default.
_BORDER_MODES = {"replicate": "nearest", "reflect": "reflect", "constant": "constant"}


def validate_image(img: np.ndarray, min_dim: int = MIN_IMAGE_DIM) -> None:
    """Raise ParameterError unless img is a finite (H, W, 3) array in [0, 1]."""
    if not isinstance(img, np.ndarray) or img.ndim != 3 or img.shape[2] != 3:
        raise ParameterError(f"expected (H, W, 3) array, got {getattr(img, 'shape', type(img))}")
    if img.shape[0] < min_dim or img.shape[1] < min_dim:
        raise ParameterError(f"image must be at least {min_dim}x{min_dim}, got {img.shape[:2]}")
    if not np.all(np.isfinite(img)):
        raise ParameterError("image contains non-finite values")
    if img.min() < 0.0 or img.max() > 1.0:
        raise ParameterError("image intensities must lie in [0, 1]")


def to_uint8(img: np.ndarray) -> np.ndarray:
    """Quantize [0, 1] intensities to 8-bit, rounding half away from zero."""
    return np.floor(np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def from_uint8(img: np.ndarray) -> np.ndarray:
    return img.astype(np.float64) / 255.0


def load_image(path) -> np.ndarray:
    """Read an 8-bit RGB PNG (or any PIL-readable file) into a [0, 1] float image."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return from_uint8(arr)


def save_image(path, img: np.ndarray) -> None:
    """Write a [0, 1] float image as an 8-bit RGB PNG."""
    validate_image(img, min_dim=1)
    Image.fromarray(to_uint8(img), mode="RGB").save(path, format="PNG")


def _check_kernel_size(size: int, allowed=KERNEL_SIZES) -> None:
    if size not in allowed:
        raise ParameterError(f"kernel size must be one of {allowed}, got {size}")


def make_isotropic_gaussian(size: int, sigma: float) -> np.ndarray:
    """Normalized isotropic Gaussian kernel on a size x size integer grid.

    sigma -> 0 degenerates to the delta kernel (center weight 1).
    """
    _check_kernel_size(size)
    if not sigma > 0.0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    half = size // 2
    d = np.arange(-half, half + 1, dtype=np.float64)
    di, dj = np.meshgrid(d, d, indexing="ij")
    w = np.exp(-(di ** 2 + dj ** 2) / (2.0 * sigma ** 2))
    return w / w.sum()


def make_anisotropic_gaussian(
    size: int, sigma_major: float, sigma_minor: float, angle_deg: float
) -> np.ndarray:
    """Normalized oriented anisotropic Gaussian kernel.

    At angle 0 the major axis lies along the columns (spread within a row);
    increasing the angle rotates it toward the row axis. 180-degree periodic.
    """
    _check_kernel_size(size, allowed=(3, 5, 7))
    if not (0.2 <= sigma_minor <= 1.2 and 0.2 <= sigma_major <= 1.2):
        raise ParameterError(
            f"sigmas must lie in [0.2, 1.2], got ({sigma_major}, {sigma_minor})"
        )
    if not (0.0 <= angle_deg < 180.0):
        raise ParameterError(f"angle must lie in [0, 180), got {angle_deg}")
    theta = math.radians(angle_deg)
    half = size // 2
    d = np.arange(-half, half + 1, dtype=np.float64)
    di, dj = np.meshgrid(d, d, indexing="ij")
    # Coordinates along the rotated major/minor axes.
    u = math.cos(theta) * dj + math.sin(theta) * di
    v = -math.sin(theta) * dj + math.cos(theta) * di
    w = np.exp(-0.5 * ((u / sigma_major) ** 2 + (v / sigma_minor) ** 2))
    return w / w.sum()


def validate_kernel(kernel: np.ndarray) -> None:
    if kernel.ndim != 2 or kernel.shape[0] != kernel.shape[1]:
        raise ParameterError(f"kernel must be square 2D, got shape {kernel.shape}")
    if kernel.shape[0] % 2 == 0:
        raise ParameterError("kernel size must be odd")
    if kernel.min() < 0.0:
        raise ParameterError("kernel weights must be non-negative")
    if abs(float(kernel.sum()) - 1.0) > 1e-6:
        raise ParameterError("kernel must be normalized to sum 1")


def convolve_raw(img: np.ndarray, kernel: np.ndarray, border: str = "replicate") -> np.ndarray:
    """Per-channel 2D convolution without the [0, 1] clamp (internal stages only)."""
    validate_kernel(kernel)
    if border not in _BORDER_MODES:
        raise ParameterError(f"border must be one of {sorted(_BORDER_MODES)}, got {border!r}")
    if kernel.shape[0] > min(img.shape[0], img.shape[1]):
        raise ParameterError(
            f"kernel {kernel.shape[0]} larger than image {img.shape[:2]}"
        )
    mode = _BORDER_MODES[border]
    out = np.empty_like(img, dtype=np.float64)
    for c in range(img.shape[2]):
        ndimage.convolve(img[:, :, c].astype(np.float64), kernel, output=out[:, :, c], mode=mode)
    return out


def convolve(img: np.ndarray, kernel: np.ndarray, border: str = "replicate") -> np.ndarray:
    """Per-channel 2D convolution with replicate-edge border, clamped to [0, 1]."""
    validate_image(img)
    return np.clip(convolve_raw(img, kernel, border), 0.0, 1.0)


@dataclass(frozen=True)
class OrientedMaskParams:
    """Center, axis standard deviations, and orientation of a blending mask.

    Units are pixels; centers may lie outside the image. At angle 0, sigma_i
    acts along rows and sigma_j along columns; the angle rotates both axes.
    """

    center_i: float
    center_j: float
    sigma_i: float
    sigma_j: float
    angle_deg: float

    def __post_init__(self):
        if not (self.sigma_i > 0.0 and self.sigma_j > 0.0):
            raise ParameterError(
                f"mask sigmas must be positive, got ({self.sigma_i}, {self.sigma_j})"
            )
        if not (0.0 <= self.angle_deg < 180.0):
            raise ParameterError(f"mask angle must lie in [0, 180), got {self.angle_deg}")


def oriented_mask(height: int, width: int, params: OrientedMaskParams) -> np.ndarray:
    """(H, W) oriented anisotropic Gaussian blending weights in [0, 1].

    Peak-normalized: when the center falls inside the image, the largest grid
    value is rescaled to exactly 1.0 (the mask is a blending weight, not a
    density). Decays monotonically along both principal axes.
    """
    if height < 1 or width < 1:
        raise ParameterError(f"mask dims must be positive, got {(height, width)}")
    theta = math.radians(params.angle_deg)
    di = np.arange(height, dtype=np.float64)[:, None] - params.center_i
    dj = np.arange(width, dtype=np.float64)[None, :] - params.center_j
    p = math.cos(theta) * di + math.sin(theta) * dj
    q = -math.sin(theta) * di + math.cos(theta) * dj
    m = np.exp(-0.5 * ((p / params.sigma_i) ** 2 + (q / params.sigma_j) ** 2))
    inside = 0.0 <= params.center_i <= height - 1 and 0.0 <= params.center_j <= width - 1
    peak = m.max()
    # a very thin mask can underflow to all zeros; leave it unnormalized then
    if inside and peak > 0.0:
        m /= peak
    return m
