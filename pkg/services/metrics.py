"""
Image quality metrics
PSNR, SSIM and the effective ADC resolution an image demands.
"""
from dataclasses import asdict, dataclass
import logging
from typing import Optional
import numpy as np
from skimage.metrics import structural_similarity

from config import Config
from services.errors import ShapeMismatch, TooSmall
from services.forward import ideal_samples

logger = logging.getLogger(__name__)

PIXEL_QUANTUM = 1.0 / 255.0


@dataclass(frozen=True)
class QualityReport:
    psnr_db: float
    ssim: float
    n_unique_levels: Optional[int] = None
    effective_bits: Optional[float] = None

    def as_dict(self):
        return asdict(self)


def _pair(a, b):
    if a.shape != b.shape:
        raise ShapeMismatch(f'images differ in shape: {a.shape} vs {b.shape}')
    return a.pixels, b.pixels


def psnr(a, b, peak=1.0, cap=Config.PSNR_CAP_DB):
    """
    Peak signal-to-noise ratio in dB

    Identical images report `cap` instead of infinity; no result exceeds it.
    """
    x, y = _pair(a, b)
    mse = float(np.mean((x - y) ** 2))
    if mse == 0:
        return float(cap)
    return float(min(10.0 * np.log10(peak ** 2 / mse), cap))


def ssim(a, b, window=Config.SSIM_WINDOW, sigma=Config.SSIM_SIGMA,
         k1=Config.SSIM_K1, k2=Config.SSIM_K2, data_range=1.0):
    """
    Mean structural similarity over every fully-contained Gaussian window

    Args:
        a, b (GrayImage): images of equal shape, both sides >= window
        window (int): odd window side in pixels
        sigma (float): Gaussian window standard deviation

    Returns:
        float: mean local SSIM in [-1, 1]
    """
    x, y = _pair(a, b)
    if min(x.shape) < window:
        raise TooSmall(f'SSIM needs images of at least {window}x{window}, got {x.shape}')
    return float(structural_similarity(
        x, y,
        win_size=window,
        data_range=data_range,
        gaussian_weights=True,
        sigma=sigma,
        use_sample_covariance=False,
        K1=k1,
        K2=k2,
    ))


def effective_bits(m, img, quantum=PIXEL_QUANTUM):
    """
    Distinct noiseless measurement levels for a scene

    Every ideal sample is rounded to the `quantum` grid before counting, which
    makes the count exact for 8-bit source images.

    Returns:
        tuple[int, float]: unique level count and log2 of it
    """
    levels = np.rint(ideal_samples(m, img) / quantum).astype(np.int64)
    count = int(np.unique(levels).size)
    bits = float(np.log2(count))
    logger.debug('N = %d: %d unique levels (%.2f bits)', m.n, count, bits)
    return count, bits


def quality_report(a, b, m=None):
    """PSNR and SSIM of b against reference a; effective bits of a when m is given"""
    n_unique = bits = None
    if m is not None:
        n_unique, bits = effective_bits(m, a)
    return QualityReport(psnr(a, b), ssim(a, b), n_unique, bits)
