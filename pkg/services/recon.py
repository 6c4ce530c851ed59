"""
Reconstruction
Fills skipped samples of compressed traces and inverts the cyclic
measurement by division in the DFT domain.
"""
import logging
import numpy as np
from scipy import fft

from services.domain import GrayImage
from services.errors import (
    BadCrop, IncompleteTrace, InvalidParameter, KernelZero, LengthMismatch,
    ShapeMismatch, TooFewSamples,
)
from services.forward import kernel_spectrum

logger = logging.getLogger(__name__)

ANCHORS = ('top-left', 'center')

# |DFT(c1)(k)|^2 = (N + 1) / 4 off DC for a true MLS row; anything near zero is corruption.
_KERNEL_FLOOR = 1e-6


def interpolate_trace(t):
    """
    Fill missing samples over the cyclic index axis

    Args:
        t (VoltageTrace): trace with some samples flagged missing

    Returns:
        VoltageTrace: complete trace, measured samples unchanged
    """
    if t.complete:
        return t
    measured = np.flatnonzero(~t.missing)
    if measured.size < 2:
        raise TooFewSamples(f'need at least 2 measured samples, got {measured.size}')

    n = t.n
    values = t.samples[measured]
    index = np.arange(n)

    if t.plan.interpolation == 'linear':
        filled = np.interp(index, measured, values, period=n)
    else:
        ext_pos = np.concatenate([measured - n, measured, measured + n])
        ext_val = np.tile(values, 3)
        right = np.searchsorted(ext_pos, index)
        left = right - 1
        take_left = (index - ext_pos[left]) <= (ext_pos[right] - index)
        filled = np.where(take_left, ext_val[left], ext_val[right])

    filled = np.where(t.missing, filled, t.samples)
    return t.with_samples(filled)


def reconstruct(t, m):
    """
    Invert V = gain * (row_i . X) for the whole image at once

    Args:
        t (VoltageTrace): complete trace of length N
        m (CyclicSMatrix): matrix the trace was measured with

    Returns:
        GrayImage: raw p x q field, not clamped
    """
    if t.n != m.n:
        raise LengthMismatch(f'trace has {t.n} samples, matrix has N = {m.n}')
    if not t.complete:
        raise IncompleteTrace('interpolate the trace before reconstruction')

    kernel = kernel_spectrum(m)
    if np.min(np.abs(kernel)) < _KERNEL_FLOOR:
        raise KernelZero('first-row spectrum vanishes; the matrix is not an MLS S-matrix')

    # DFT(V) = gain * C * conj(DFT(X))  =>  DFT(X) = conj(DFT(V) / (gain * C))
    spectrum = np.conj(fft.rfft(t.samples) / (t.model.gain * kernel))
    x = fft.irfft(spectrum, n=m.n)
    return GrayImage.from_vector(x, m.p, m.q)


def crop_active(img, active_w, active_h, anchor='top-left'):
    """
    Cut the displayable region out of the reconstructed pattern field

    Args:
        img (GrayImage): reconstruction of shape (p, q)
        active_w (int): columns to keep
        active_h (int): rows to keep
        anchor (str): 'top-left' or 'center'

    Returns:
        GrayImage: image of shape (active_h, active_w)
    """
    if anchor not in ANCHORS:
        raise InvalidParameter(f'anchor must be one of {ANCHORS}, got {anchor!r}')
    if not (0 < active_w <= img.width and 0 < active_h <= img.height):
        raise BadCrop(f'cannot crop {active_w}x{active_h} from {img.width}x{img.height}')
    top, left = 0, 0
    if anchor == 'center':
        top = (img.height - active_h) // 2
        left = (img.width - active_w) // 2
    return GrayImage(img.pixels[top:top + active_h, left:left + active_w])


def place_on_field(img, p, q):
    """Pad a scene into the top-left of a dark p x q pattern field"""
    if img.height > p or img.width > q:
        raise ShapeMismatch(f'image {img.shape} does not fit the {p}x{q} field')
    if img.shape == (p, q):
        return img
    field = np.zeros((p, q))
    field[:img.height, :img.width] = img.pixels
    return GrayImage(field)
