"""
Edge extraction by temporal high-pass filtering
Filters the voltage sequence before reconstruction and binarizes the
resulting gradient image with a scaled Otsu threshold.

A filter H(f) on the time series lands on the image spectrum at the pixel
frequency k = f T N. The detector sees the vectorized image index-reversed
(each sample correlates c1 with the image), so the spatial response is
H evaluated at the mirrored bin, H_X(k) = H(-k / (T N)) = conj(H(k / (T N))).
"""
from dataclasses import dataclass
import logging
import numpy as np
from scipy import fft, signal

from config import Config
from services.domain import GrayImage
from services.errors import CutoffOutOfRange, IncompleteTrace, InvalidParameter, ShapeMismatch
from services.recon import interpolate_trace, reconstruct

logger = logging.getLogger(__name__)

REALIZATIONS = ('dft-multiply', 'time-domain')


@dataclass(frozen=True)
class FilterSpec:
    """First-order high-pass, cascaded `order` times"""

    cutoff_hz: float
    order: int = 1
    realization: str = 'dft-multiply'

    def __post_init__(self):
        if not self.cutoff_hz > 0:
            raise CutoffOutOfRange(f'cutoff must be > 0 Hz, got {self.cutoff_hz}')
        if int(self.order) < 1:
            raise InvalidParameter(f'filter order must be >= 1, got {self.order}')
        if self.realization not in REALIZATIONS:
            raise InvalidParameter(
                f'realization must be one of {REALIZATIONS}, got {self.realization!r}')

    def k_c(self, T, N):
        """Pixel-domain cutoff k_c = f_c T N"""
        return self.cutoff_hz * T * N

    def check(self, T, N):
        k_c = self.k_c(T, N)
        if not (k_c >= 1.0 - 1e-9 and k_c < N / 2):
            raise CutoffOutOfRange(
                f'k_c = {k_c:.3f} for f_c = {self.cutoff_hz} Hz must satisfy 1 <= k_c < {N / 2}')
        return k_c

    @classmethod
    def for_pixel_cutoff(cls, k_c, T, N, **kwargs):
        return cls(cutoff_hz=k_c / (T * N), **kwargs)

    def as_dict(self):
        return {'cutoff_hz': self.cutoff_hz, 'order': self.order, 'realization': self.realization}


def transfer(freqs, spec):
    """H(f) = (j f / f_c) / (1 + j f / f_c), raised to the filter order"""
    s = 1j * np.asarray(freqs, dtype=np.float64) / spec.cutoff_hz
    return (s / (1.0 + s)) ** int(spec.order)


def spatial_transfer(spec, T, N):
    """H_X over the full pixel DFT bins, as realized through the measurement chain"""
    return transfer(-fft.fftfreq(N, d=T), spec)


def _window_averaged_stage(v, cutoff_hz, T):
    # Analog first-order high-pass driven by the piecewise-constant voltage,
    # averaged over each dwell window, in periodic steady state.
    # The low-pass state z obeys z[n+1] = b z[n] + (1 - b) v[n], b = exp(-w T).
    wT = 2.0 * np.pi * cutoff_hz * T
    b = np.exp(-wT)
    coeffs = ([1.0 - b], [1.0, -b])
    z_end = signal.lfilter(*coeffs, v)[-1]
    z0 = z_end / (1.0 - b ** v.size)
    after = signal.lfilter(*coeffs, v, zi=[b * z0])[0]
    z = np.concatenate([[z0], after[:-1]])
    return (v - z) * (1.0 - b) / wT


def hpf_trace(t, spec):
    """
    High-pass filter a complete voltage trace

    Args:
        t (VoltageTrace): complete trace
        spec (FilterSpec): filter definition

    Returns:
        VoltageTrace: filtered trace; DC is removed exactly
    """
    if not t.complete:
        raise IncompleteTrace('interpolate the trace before filtering')
    T, N = t.dwell_T, t.n
    k_c = spec.check(T, N)
    logger.debug('High-pass %s at f_c = %.1f Hz (k_c = %.2f)', spec.realization, spec.cutoff_hz, k_c)

    v = t.samples
    if spec.realization == 'dft-multiply':
        h = transfer(fft.rfftfreq(N, d=T), spec)
        filtered = fft.irfft(h * fft.rfft(v), n=N)
    else:
        filtered = v - v.mean()
        for _ in range(int(spec.order)):
            filtered = _window_averaged_stage(filtered, spec.cutoff_hz, T)
    return t.with_samples(filtered)


def spatial_hpf(img, spec, T, N):
    """
    Apply H_X to the 1-D DFT of the vectorized image

    This is a filter along the vectorization order, not a 2-D image filter.
    """
    x = img.vector()
    if x.size != N:
        raise ShapeMismatch(f'image has {x.size} pixels, expected N = {N}')
    spec.check(T, N)
    h = np.conj(transfer(fft.rfftfreq(N, d=T), spec))
    return GrayImage.from_vector(fft.irfft(h * fft.rfft(x), n=N), img.height, img.width)


def gradient_from_trace(t, m, spec):
    """Interpolate, high-pass and reconstruct: the pre-threshold gradient image"""
    return reconstruct(hpf_trace(interpolate_trace(t), spec), m)


def between_class_variance(hist):
    """Otsu between-class variance for every split 'bins 0..t vs the rest'"""
    hist = np.asarray(hist, dtype=np.float64)
    total = hist.sum()
    if total <= 0:
        return np.zeros(hist.size)
    # cumulative counts stay exact, so omega reaches exactly 1 at the last bin
    omega = np.cumsum(hist) / total
    mu = np.cumsum(hist * np.arange(hist.size)) / total
    mu_t = mu[-1]
    denom = omega * (1.0 - omega)
    with np.errstate(divide='ignore', invalid='ignore'):
        sigma_b = (mu_t * omega - mu) ** 2 / denom
    return np.where(denom > 0, sigma_b, 0.0)


def otsu_bin(hist):
    return int(np.argmax(between_class_variance(hist)))


def otsu_threshold(values, bins=Config.OTSU_BINS):
    """Otsu level in [0, 1] for values already normalized to [0, 1]"""
    hist, _ = np.histogram(np.asarray(values).ravel(), bins=bins, range=(0.0, 1.0))
    return otsu_bin(hist) / (bins - 1)


def threshold_edges(grad, scale=Config.OTSU_SCALE, bins=Config.OTSU_BINS):
    """
    Binary edge map from a gradient image

    Each polarity of the gradient, normalized by the global magnitude
    maximum, is binarized at scale x its Otsu level; the two maps are ORed.

    Args:
        grad (GrayImage): high-pass reconstruction
        scale (float): fraction of the Otsu level used as threshold

    Returns:
        numpy.ndarray: boolean map of grad's shape
    """
    g = grad.pixels
    edges = np.zeros(g.shape, dtype=bool)
    peak = np.max(np.abs(g))
    if peak == 0:
        return edges
    for polarity in (g, -g):
        v = np.clip(polarity, 0.0, None) / peak
        if v.max() == v.min():
            continue
        hist, _ = np.histogram(v, bins=bins, range=(0.0, 1.0))
        if not np.any(between_class_variance(hist) > 0):
            continue
        level = otsu_bin(hist) / (bins - 1)
        edges |= v > scale * level
    return edges


def edge_fraction(edges):
    return float(np.mean(edges))
