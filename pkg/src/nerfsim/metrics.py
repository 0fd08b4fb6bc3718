"""PSNR and SSIM on [0,1] images.

PSNR is computed over all channels and capped at 99 dB so identical images
report a finite number. SSIM follows the reference formulation: luma only
(Rec. 601 weights), 11x11 Gaussian window with sigma 1.5, K1=0.01, K2=0.03,
dynamic range 1.0, and window statistics restricted to fully-covered pixels.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.signal import convolve2d

from .errors import ParameterError
from .imaging import make_isotropic_gaussian, validate_image

PSNR_CAP_DB = 99.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class MetricReport:
    psnr_db: float
    ssim: float

    def to_dict(self) -> dict:
        return asdict(self)


def _check_pair(a: np.ndarray, b: np.ndarray, min_dim: int = 8) -> None:
    validate_image(a, min_dim=min_dim)
    validate_image(b, min_dim=min_dim)
    if a.shape != b.shape:
        raise ParameterError(f"image shapes differ: {a.shape} vs {b.shape}")


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB; 99.0 for identical inputs."""
    _check_pair(a, b, min_dim=1)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * np.log10(1.0 / mse), PSNR_CAP_DB)


def luma(img: np.ndarray) -> np.ndarray:
    r, g, b = LUMA_WEIGHTS
    return r * img[:, :, 0] + g * img[:, :, 1] + b * img[:, :, 2]


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean structural similarity over luma; 1.0 exactly when inputs match."""
    _check_pair(a, b, min_dim=SSIM_WINDOW)
    win = make_isotropic_gaussian(SSIM_WINDOW, SSIM_SIGMA)
    x = luma(a)
    y = luma(b)

    def filt(z):
        return convolve2d(z, win, mode="valid")

    mu_x = filt(x)
    mu_y = filt(y)
    var_x = filt(x * x) - mu_x * mu_x
    var_y = filt(y * y) - mu_y * mu_y
    cov = filt(x * y) - mu_x * mu_y
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def compare(a: np.ndarray, b: np.ndarray) -> MetricReport:
    return MetricReport(psnr_db=psnr(a, b), ssim=ssim(a, b))
