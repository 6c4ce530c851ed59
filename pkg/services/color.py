"""
Multispectral colour fusion
Maps three single-wavelength reconstructions to a display RGB image through
the CIE 1931 colour matching functions, the linear sRGB primaries and a
gamma curve.
"""
from dataclasses import dataclass
import logging
import os
import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from scipy.interpolate import PchipInterpolator

from config import Config
from services.domain import GrayImage
from services.errors import (
    BadGamma, CorruptFile, GridMismatch, InvalidParameter, IoError, ShapeMismatch,
)

logger = logging.getLogger(__name__)

CMF_PATH = os.path.join(os.path.dirname(__file__), 'data', 'cie1931_2deg_5nm.csv')


def xyz_from_xy(x, y):
    """Return the vector (x, y, 1 - x - y)"""
    return np.array((x, y, 1.0 - x - y))


def _rgb_matrix(red, green, blue, white):
    # Columns of M are the primaries; scale them so the white point maps to (1, 1, 1)
    m = np.vstack((red, green, blue)).T
    mi = np.linalg.inv(m)
    wscale = mi.dot(white / white[1])
    return mi / wscale[:, np.newaxis]


ILLUMINANT_D65 = xyz_from_xy(0.3127, 0.3290)

# CIE XYZ (white Y = 1) -> linear sRGB
XYZ_TO_LINEAR_SRGB = _rgb_matrix(
    red=xyz_from_xy(0.64, 0.33),
    green=xyz_from_xy(0.30, 0.60),
    blue=xyz_from_xy(0.15, 0.06),
    white=ILLUMINANT_D65,
)


def default_grid():
    """380-780 nm at 5 nm, the grid of the bundled CMF table"""
    return np.arange(380.0, 781.0, 5.0)


@dataclass(frozen=True, eq=False)
class CmfTable:
    """CIE 1931 2-degree observer sampled on a wavelength grid"""

    wavelength_nm: np.ndarray
    xbar: np.ndarray
    ybar: np.ndarray
    zbar: np.ndarray

    def __post_init__(self):
        for name in ('wavelength_nm', 'xbar', 'ybar', 'zbar'):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.xbar.shape == self.ybar.shape == self.zbar.shape == self.wavelength_nm.shape):
            raise ShapeMismatch('CMF columns must share the wavelength grid')
        if min(self.xbar.min(), self.ybar.min(), self.zbar.min()) < 0:
            raise InvalidParameter('colour matching functions must be non-negative')

    @classmethod
    def load(cls, path=CMF_PATH):
        """Read a CSV with columns wavelength_nm, xbar, ybar, zbar"""
        try:
            df = pd.read_csv(path, comment='#')
        except FileNotFoundError as e:
            raise IoError(f'CMF table not found: {path}') from e
        missing = {'wavelength_nm', 'xbar', 'ybar', 'zbar'} - set(df.columns)
        if missing:
            raise CorruptFile(f'CMF table {path} lacks columns {sorted(missing)}')
        df = df.sort_values('wavelength_nm')
        return cls(df['wavelength_nm'].to_numpy(), df['xbar'].to_numpy(),
                   df['ybar'].to_numpy(), df['zbar'].to_numpy())

    @property
    def grid(self):
        return self.wavelength_nm

    def stacked(self):
        """(len(grid), 3) array of xbar, ybar, zbar"""
        return np.column_stack((self.xbar, self.ybar, self.zbar))

    def ybar_integral(self):
        return float(trapezoid(self.ybar, self.wavelength_nm))


def _normalized(spectrum, grid):
    spectrum = np.clip(np.asarray(spectrum, dtype=np.float64), 0.0, None)
    area = trapezoid(spectrum, grid)
    if not area > 0:
        raise InvalidParameter('spectrum has zero integral over the wavelength grid')
    return spectrum / area


@dataclass(frozen=True, eq=False)
class SpectralChannel:
    """
    One illumination wavelength and its reconstructed image

    spectrum is the source power density sampled on `grid`, normalized to
    unit integral; gain scales the channel's colour contribution.
    """

    center_nm: float
    spectrum: np.ndarray
    image: GrayImage
    grid: np.ndarray = None
    gain: float = 1.0

    def __post_init__(self):
        grid = default_grid() if self.grid is None else np.array(self.grid, dtype=np.float64)
        spectrum = np.asarray(self.spectrum, dtype=np.float64)
        if spectrum.shape != grid.shape:
            raise GridMismatch(f'spectrum has {spectrum.size} samples, grid has {grid.size}')
        if np.any(spectrum < 0):
            raise InvalidParameter('spectrum must be non-negative')
        spectrum = _normalized(spectrum, grid)
        spectrum.setflags(write=False)
        grid.setflags(write=False)
        object.__setattr__(self, 'grid', grid)
        object.__setattr__(self, 'spectrum', spectrum)

    def scaled(self, alpha):
        return SpectralChannel(self.center_nm, self.spectrum, self.image.scaled(alpha),
                               self.grid, self.gain)


def gaussian_spectrum(center_nm, fwhm_nm=Config.LED_FWHM_NM, grid=None):
    """Gaussian LED spectrum of the given FWHM, unit integral on `grid`"""
    if not fwhm_nm > 0:
        raise InvalidParameter(f'FWHM must be positive, got {fwhm_nm}')
    grid = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    sigma = fwhm_nm / (2.0 * np.sqrt(2.0 * np.log(2.0)))
    return _normalized(np.exp(-0.5 * ((grid - center_nm) / sigma) ** 2), grid)


def load_spectrum_csv(path, grid=None):
    """
    Measured spectrum resampled onto `grid`

    The first two CSV columns are wavelength (nm) and power. Resampling is
    monotone (PCHIP); outside the measured range the power is zero.
    """
    grid = default_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    try:
        df = pd.read_csv(path, comment='#')
    except FileNotFoundError as e:
        raise IoError(f'spectrum file not found: {path}') from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise CorruptFile(f'cannot parse spectrum {path}: {e}') from e
    if df.shape[1] < 2 or len(df) < 2:
        raise CorruptFile(f'spectrum {path} needs two columns and at least two rows')

    df = df.iloc[:, :2].apply(pd.to_numeric, errors='coerce').dropna()
    df = df.groupby(df.columns[0], as_index=False).mean().sort_values(df.columns[0])
    if len(df) < 2:
        raise CorruptFile(f'spectrum {path} has fewer than two numeric rows')
    wl = df.iloc[:, 0].to_numpy()
    power = df.iloc[:, 1].to_numpy()
    resampled = PchipInterpolator(wl, power, extrapolate=False)(grid)
    return _normalized(np.nan_to_num(resampled, nan=0.0), grid)


def make_channel(center_nm, image, fwhm_nm=Config.LED_FWHM_NM, gain=1.0, spectrum=None, grid=None):
    """Channel with a Gaussian spectrum unless a sampled one is given"""
    grid = default_grid() if grid is None else grid
    if spectrum is None:
        spectrum = gaussian_spectrum(center_nm, fwhm_nm, grid)
    return SpectralChannel(float(center_nm), spectrum, image, grid, float(gain))


def channel_to_xyz(ch, cmf):
    """
    Tristimulus values of the channel's source spectrum

    Returns:
        numpy.ndarray: (X, Y, Z) by trapezoidal integration of P times the CMFs
    """
    if ch.grid.shape != cmf.grid.shape or not np.allclose(ch.grid, cmf.grid):
        raise GridMismatch('spectrum and colour matching functions use different grids')
    return trapezoid(ch.spectrum[:, None] * cmf.stacked(), cmf.grid, axis=0)


def chromaticity(xyz):
    """CIE xy of a tristimulus triple"""
    xyz = np.asarray(xyz, dtype=np.float64)
    total = xyz.sum()
    if not total > 0:
        raise InvalidParameter('chromaticity of a zero tristimulus is undefined')
    return float(xyz[0] / total), float(xyz[1] / total)


def channel_rgb(ch, cmf):
    """Linear sRGB colour carried by one unit of channel intensity"""
    return ch.gain * XYZ_TO_LINEAR_SRGB.dot(channel_to_xyz(ch, cmf))


def _check_channels(channels):
    if len(channels) != 3:
        raise InvalidParameter(f'colour fusion needs 3 channels, got {len(channels)}')
    shape = channels[0].image.shape
    for ch in channels[1:]:
        if ch.image.shape != shape:
            raise ShapeMismatch(f'channel images differ in shape: {shape} vs {ch.image.shape}')


def linear_rgb(channels, cmf):
    """
    Per-pixel sum of each channel image times its linear sRGB colour

    Returns:
        numpy.ndarray: (height, width, 3), unclipped and unnormalized
    """
    _check_channels(channels)
    out = np.zeros(channels[0].image.shape + (3,))
    for ch in channels:
        out += ch.image.pixels[..., None] * channel_rgb(ch, cmf)
    return out


def gamma_encode(v, gamma=Config.GAMMA):
    if not gamma > 0:
        raise BadGamma(f'gamma must be > 0, got {gamma}')
    return np.power(np.asarray(v, dtype=np.float64), 1.0 / gamma)


def gamma_decode(v, gamma=Config.GAMMA):
    if not gamma > 0:
        raise BadGamma(f'gamma must be > 0, got {gamma}')
    return np.power(np.asarray(v, dtype=np.float64), gamma)


def fuse_rgb(channels, cmf, gamma=Config.GAMMA):
    """
    Display RGB image from three spectral channels

    Out-of-gamut negatives are clipped to zero, the result is scaled so its
    largest component is 1, then gamma-encoded.

    Args:
        channels (list[SpectralChannel]): three co-registered channels
        cmf (CmfTable): colour matching functions on the channels' grid
        gamma (float): display gamma, > 0

    Returns:
        numpy.ndarray: (height, width, 3) in [0, 1]
    """
    if not gamma > 0:
        raise BadGamma(f'gamma must be > 0, got {gamma}')
    rgb = np.clip(linear_rgb(channels, cmf), 0.0, None)
    peak = rgb.max()
    if peak > 0:
        rgb = rgb / peak
    else:
        logger.info('⚠ All channels are dark; fused image is black')
    return gamma_encode(rgb, gamma)
