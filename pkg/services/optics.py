"""
Detector aperture optics
The detector sits in the Fourier plane of the collection lens, so its finite
active area passes only the spatial frequencies whose Fourier-plane position
x = lambda f nu falls on it. Models the resulting resolution loss.
"""
from dataclasses import dataclass, replace
import logging
from typing import Optional
import numpy as np
from scipy import fft

from config import Config
from services.domain import GrayImage
from services.errors import InvalidParameter
from services.fixtures import UsafTarget

logger = logging.getLogger(__name__)

SHAPES = ('square', 'circular')


@dataclass(frozen=True)
class ApertureModel:
    """
    Fourier-plane detector geometry

    detector_side_um is the side of a square detector or the diameter of a
    circular one; na_diameter_um optionally adds the NA-limited outer circle.
    """

    detector_side_um: float = Config.DEFAULT_OPTICS['detector_side_um']
    wavelength_um: float = Config.DEFAULT_OPTICS['wavelength_um']
    focal_mm: float = Config.DEFAULT_OPTICS['focal_mm']
    object_extent_mm: float = Config.DEFAULT_OPTICS['object_extent_mm']
    shape: str = 'square'
    na_diameter_um: Optional[float] = None

    def __post_init__(self):
        for name in ('detector_side_um', 'wavelength_um', 'focal_mm', 'object_extent_mm'):
            if not getattr(self, name) > 0:
                raise InvalidParameter(f'{name} must be positive, got {getattr(self, name)}')
        if self.shape not in SHAPES:
            raise InvalidParameter(f'shape must be one of {SHAPES}, got {self.shape!r}')
        if self.na_diameter_um is not None and not self.na_diameter_um > 0:
            raise InvalidParameter(f'na_diameter_um must be positive, got {self.na_diameter_um}')

    @property
    def lambda_f_um2(self):
        """lambda * f in um^2; Fourier-plane position per unit spatial frequency"""
        return self.wavelength_um * self.focal_mm * 1000.0

    def as_dict(self):
        return {
            'detector_side_um': self.detector_side_um,
            'wavelength_um': self.wavelength_um,
            'focal_mm': self.focal_mm,
            'object_extent_mm': self.object_extent_mm,
            'shape': self.shape,
            'na_diameter_um': self.na_diameter_um,
        }


@dataclass(frozen=True, eq=False)
class FourierPlane:
    """Centered Fourier-plane intensity with calibrated axes in micrometres"""

    intensity: np.ndarray
    x_um: np.ndarray
    y_um: np.ndarray
    pitch_um: float

    @property
    def extent_um(self):
        return self.pitch_um * self.intensity.shape[1]


def _object_pitch_um(img, model):
    return model.object_extent_mm * 1000.0 / img.width


def _plane_coordinates(n, pitch_um, model):
    return fft.fftfreq(n, d=pitch_um) * model.lambda_f_um2


def fourier_plane_intensity(img, model):
    """
    |F(x / lambda f, y / lambda f)|^2 of the scene, DC at the center

    Uses the unitary DFT, so the summed intensity equals the image energy.
    """
    dx = _object_pitch_um(img, model)
    spectrum = fft.fftshift(fft.fft2(img.pixels, norm='ortho'))
    x_um = fft.fftshift(_plane_coordinates(img.width, dx, model))
    y_um = fft.fftshift(_plane_coordinates(img.height, dx, model))
    pitch_um = model.lambda_f_um2 / (dx * img.width)
    return FourierPlane(np.abs(spectrum) ** 2, x_um, y_um, pitch_um)


def aperture_mask(shape, pitch_um, model):
    """Boolean pass mask in unshifted DFT order for an image of `shape`"""
    h, w = shape
    x = _plane_coordinates(w, pitch_um, model)[None, :]
    y = _plane_coordinates(h, pitch_um, model)[:, None]
    half = model.detector_side_um / 2.0
    if model.shape == 'square':
        mask = (np.abs(x) <= half) & (np.abs(y) <= half)
    else:
        mask = x ** 2 + y ** 2 <= half ** 2
    if model.na_diameter_um is not None:
        mask &= x ** 2 + y ** 2 <= (model.na_diameter_um / 2.0) ** 2
    return mask


def aperture_filter(img, model, clip=True):
    """
    Image reconstructed from the light that reaches the detector

    Args:
        img (GrayImage): scene
        model (ApertureModel): detector geometry
        clip (bool): clamp the real part to [0, 1]

    Returns:
        GrayImage: spatially low-passed scene
    """
    mask = aperture_mask(img.shape, _object_pitch_um(img, model), model)
    filtered = fft.ifft2(fft.fft2(img.pixels) * mask).real
    if clip:
        filtered = np.clip(filtered, 0.0, 1.0)
    return GrayImage(filtered)


def cutoff_frequency(model):
    """Highest passed spatial frequency along an axis, lp/mm"""
    return (model.detector_side_um / 2.0) / model.lambda_f_um2 * 1000.0


def three_bar_contrast(model, lp_per_mm, pixels_per_bar=8, field_px=256):
    """
    Michelson contrast of a filtered vertical 3-bar element

    The darkest bar center is compared with the brightest gap center, so
    a value above zero means every bar stands out from both gaps.
    """
    bar_um = 1000.0 / (2.0 * lp_per_mm)
    pitch_um = bar_um / pixels_per_bar
    c = field_px // 2
    half_len = 5 * pixels_per_bar // 2
    field = np.zeros((field_px, field_px))
    for k in (-1, 0, 1):
        left = c + 2 * k * pixels_per_bar - pixels_per_bar // 2
        field[c - half_len:c + half_len, left:left + pixels_per_bar] = 1.0

    local = replace(model, object_extent_mm=field_px * pitch_um / 1000.0)
    profile = aperture_filter(GrayImage(field), local, clip=False).pixels[c]

    columns = np.arange(field_px)
    bars = [c + 2 * k * pixels_per_bar - 0.5 for k in (-1, 0, 1)]
    gaps = [c + (2 * k + 1) * pixels_per_bar - 0.5 for k in (-1, 0)]
    peak = np.interp(bars, columns, profile).min()
    valley = np.interp(gaps, columns, profile).max()
    if peak + valley <= 0:
        return 0.0
    return float((peak - valley) / (peak + valley))


def resolvable_frequency(model, target=None, criterion=Config.CONTRAST_CRITERION):
    """
    Finest USAF element still resolved through the detector aperture

    Elements are checked from coarse to fine; the scan stops at the first
    element whose 3-bar contrast does not exceed the criterion.

    Returns:
        UsafElement or None: the finest resolved element
    """
    target = target or UsafTarget()
    resolved = None
    for element in target.elements:
        contrast = three_bar_contrast(model, element.lp_per_mm)
        if contrast <= criterion:
            break
        resolved = element
    if resolved is None:
        logger.info('⚠ No element resolved for a %.0f um detector', model.detector_side_um)
    else:
        logger.info('✓ %.0f um detector resolves group %d element %d (%.2f lp/mm)',
                    model.detector_side_um, resolved.group, resolved.element, resolved.lp_per_mm)
    return resolved
