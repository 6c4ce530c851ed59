"""
Image files
8- and 16-bit grayscale PNG and PGM through Pillow. Colour inputs are reduced
to luma with the ITU-R BT.601 weights (Pillow's 'L' conversion).
"""
import logging
import os
import numpy as np
from PIL import Image, UnidentifiedImageError

from services.domain import GrayImage
from services.errors import CorruptFile, InvalidParameter, IoError, UnsupportedFormat

logger = logging.getLogger(__name__)

FORMATS = {'.png': 'PNG', '.pgm': 'PPM'}
DEPTHS = (8, 16)

_SIXTEEN_BIT = ('I;16', 'I;16B', 'I;16L', 'I')


def _format_for(path):
    ext = os.path.splitext(path)[1].lower()
    if ext not in FORMATS:
        raise UnsupportedFormat(f'{path}: expected one of {sorted(FORMATS)}')
    return FORMATS[ext]


def _open(path):
    _format_for(path)
    try:
        pil = Image.open(path)
        pil.load()
    except FileNotFoundError as e:
        raise IoError(f'image not found: {path}') from e
    except (UnidentifiedImageError, SyntaxError, ValueError, OSError) as e:
        raise CorruptFile(f'cannot decode {path}: {e}') from e
    return pil


def load_image(path):
    """
    Read a grayscale or colour image into [0, 1]

    Returns:
        GrayImage: 8-bit files scale by 1/255, 16-bit files by 1/65535
    """
    pil = _open(path)
    if pil.mode in _SIXTEEN_BIT:
        pixels = np.asarray(pil, dtype=np.float64) / 65535.0
    else:
        if pil.mode != 'L':
            logger.debug('Converting %s image %s to luma', pil.mode, path)
            pil = pil.convert('L')
        pixels = np.asarray(pil, dtype=np.float64) / 255.0
    return GrayImage(pixels)


def image_size(path):
    """(height, width) of an image file without decoding its pixels"""
    _format_for(path)
    try:
        with Image.open(path) as pil:
            width, height = pil.size
    except FileNotFoundError as e:
        raise IoError(f'image not found: {path}') from e
    except (UnidentifiedImageError, SyntaxError, ValueError, OSError) as e:
        raise CorruptFile(f'cannot decode {path}: {e}') from e
    return height, width


def _save(pil, path, fmt):
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        pil.save(path, format=fmt)
    except OSError as e:
        raise IoError(f'cannot write {path}: {e}') from e
    return path


def save_image(img, path, depth=8):
    """
    Write a GrayImage clamped to [0, 1] at 8 or 16 bits

    Args:
        img (GrayImage): image to store
        path (str): .png or .pgm destination
        depth (int): 8 or 16
    """
    fmt = _format_for(path)
    if depth not in DEPTHS:
        raise InvalidParameter(f'depth must be one of {DEPTHS}, got {depth}')
    scale = 255.0 if depth == 8 else 65535.0
    dtype = np.uint8 if depth == 8 else np.uint16
    values = np.rint(img.clipped().pixels * scale).astype(dtype)
    return _save(Image.fromarray(values), path, fmt)


def save_mask(mask, path):
    """Binary map as black/white 8-bit image"""
    return save_image(GrayImage(np.asarray(mask, dtype=np.float64)), path)


def save_rgb(rgb, path):
    """(height, width, 3) array in [0, 1] as an 8-bit RGB PNG"""
    ext = os.path.splitext(path)[1].lower()
    if ext != '.png':
        raise UnsupportedFormat(f'{path}: colour images are written as .png')
    values = np.rint(np.clip(rgb, 0.0, 1.0) * 255.0).astype(np.uint8)
    return _save(Image.fromarray(values), path, 'PNG')
