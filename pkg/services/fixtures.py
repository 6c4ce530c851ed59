"""
Test scenes
Deterministic USAF-style bar target, kangaroo-style silhouette and a seeded
speckle field, rendered in code so the repository carries no image assets.
"""
from dataclasses import dataclass
import json
import logging
import os
import numpy as np
from PIL import Image
from scipy import ndimage

from config import Config
from services.domain import GrayImage, rng_for
from services.errors import InvalidParameter
from storage.images import save_image

logger = logging.getLogger(__name__)

FIXTURE_NAMES = ('usaf', 'kangaroo', 'speckle')


@dataclass(frozen=True)
class UsafElement:
    """One 3-bar element of a USAF 1951 target"""

    group: int
    element: int

    @property
    def lp_per_mm(self):
        return 2.0 ** (self.group + (self.element - 1) / 6.0)

    @property
    def bar_width_um(self):
        return 1000.0 / (2.0 * self.lp_per_mm)

    def as_dict(self):
        return {'group': self.group, 'element': self.element, 'lp_per_mm': self.lp_per_mm}


class UsafTarget:
    """Ordered USAF elements, coarse to fine"""

    def __init__(self, groups=range(-2, 8)):
        self.groups = tuple(groups)
        self.elements = [UsafElement(g, e) for g in self.groups for e in range(1, 7)]

    def index_of(self, group, element):
        return self.elements.index(UsafElement(group, element))


class _Canvas:
    """Supersampled drawing surface addressed in micrometres"""

    def __init__(self, shape, pitch_um, supersample):
        self.supersample = supersample
        self.sub_um = pitch_um / supersample
        self.data = np.zeros((shape[0] * supersample, shape[1] * supersample))

    def rect(self, x_um, y_um, w_um, h_um):
        c0, c1 = (int(round(v / self.sub_um)) for v in (x_um, x_um + w_um))
        r0, r1 = (int(round(v / self.sub_um)) for v in (y_um, y_um + h_um))
        self.data[max(r0, 0):max(r1, 0), max(c0, 0):max(c1, 0)] = 1.0

    def image(self):
        s = self.supersample
        h, w = self.data.shape[0] // s, self.data.shape[1] // s
        return GrayImage(self.data.reshape(h, s, w, s).mean(axis=(1, 3)))


def render_usaf(shape=(Config.FIXTURE_SIZE, Config.FIXTURE_SIZE), extent_mm=4.8,
                groups=range(2, 7), supersample=4):
    """
    Bright USAF-style bars on a dark field

    Each group is a column; each element a row holding a horizontal-bar and
    a vertical-bar triplet. Bar widths follow 2^(group + (element - 1) / 6) lp/mm
    at a pixel pitch of extent_mm / width.
    """
    pitch_um = extent_mm * 1000.0 / shape[1]
    canvas = _Canvas(shape, pitch_um, supersample)
    margin = 0.04 * extent_mm * 1000.0
    x = margin
    for g in groups:
        y = margin
        column_bar = UsafElement(g, 1).bar_width_um
        for e in range(1, 7):
            w = UsafElement(g, e).bar_width_um
            for k in range(3):
                canvas.rect(x, y + 2 * k * w, 5 * w, w)
                canvas.rect(x + 6 * w + 2 * k * w, y, w, 5 * w)
            y += 7 * w
        x += 13 * column_bar
    return canvas.image()


# (center u, center v, radius u, radius v, rotation degrees) in unit coordinates
_SILHOUETTE = (
    (0.50, 0.55, 0.17, 0.23, -30.0),   # body
    (0.68, 0.26, 0.075, 0.05, 15.0),   # head
    (0.645, 0.17, 0.016, 0.055, -10.0),  # ear
    (0.30, 0.78, 0.26, 0.035, 35.0),   # tail
    (0.56, 0.88, 0.15, 0.03, 0.0),     # feet
    (0.67, 0.46, 0.075, 0.02, 40.0),   # arms
    (0.60, 0.36, 0.06, 0.09, -20.0),   # neck
)


def render_silhouette(shape=(Config.FIXTURE_SIZE, Config.FIXTURE_SIZE), supersample=4):
    """Binary kangaroo-like silhouette built from rotated ellipses"""
    h, w = shape[0] * supersample, shape[1] * supersample
    v, u = np.mgrid[0:h, 0:w]
    u = (u + 0.5) / w
    v = (v + 0.5) / h
    inside = np.zeros((h, w), dtype=bool)
    for cu, cv, ru, rv, deg in _SILHOUETTE:
        a = np.deg2rad(deg)
        du, dv = u - cu, v - cv
        pu = du * np.cos(a) + dv * np.sin(a)
        pv = -du * np.sin(a) + dv * np.cos(a)
        inside |= (pu / ru) ** 2 + (pv / rv) ** 2 <= 1.0
    coverage = inside.reshape(shape[0], supersample, shape[1], supersample).mean(axis=(1, 3))
    return GrayImage((coverage >= 0.5).astype(np.float64))


def render_speckle(shape=(Config.FIXTURE_SIZE, Config.FIXTURE_SIZE), seed=Config.SEED, sigma=2.0):
    """Smoothed random field from the 'fixtures' stream, stretched to [0, 1]"""
    field = ndimage.gaussian_filter(rng_for(seed, 'fixtures').random(shape), sigma, mode='wrap')
    field -= field.min()
    peak = field.max()
    return GrayImage(field / peak if peak > 0 else field)


def resize(img, shape):
    """Area-average resample to shape (height, width)"""
    if img.shape == tuple(shape):
        return img
    pil = Image.fromarray(img.pixels.astype(np.float32))
    out = pil.resize((shape[1], shape[0]), resample=Image.Resampling.BOX)
    return GrayImage(np.clip(np.asarray(out, dtype=np.float64), 0.0, 1.0))


def fixture_image(name, shape=None, seed=Config.SEED):
    """Named fixture rendered at full size, then resampled to `shape`"""
    if name == 'usaf':
        img = render_usaf()
    elif name == 'kangaroo':
        img = render_silhouette()
    elif name == 'speckle':
        img = render_speckle(seed=seed)
    else:
        raise InvalidParameter(f'unknown fixture {name!r}; choose from {FIXTURE_NAMES}')
    return img if shape is None else resize(img, shape)


def make_fixtures(outdir, seed=Config.SEED):
    """
    Write every fixture as an 8-bit PNG plus fixtures.json metadata

    Returns:
        dict: fixture name -> written path, plus the metadata path
    """
    os.makedirs(outdir, exist_ok=True)
    paths = {}
    metadata = {'seed': int(seed), 'fixtures': {}}
    for name in FIXTURE_NAMES:
        img = fixture_image(name, seed=seed)
        path = os.path.join(outdir, f'{name}.png')
        save_image(img, path)
        paths[name] = path
        metadata['fixtures'][name] = {'file': f'{name}.png', 'height': img.height, 'width': img.width}

    metadata['fixtures']['kangaroo']['area_fraction'] = float(render_silhouette().pixels.mean())
    metadata['fixtures']['usaf']['extent_mm'] = 4.8
    metadata['fixtures']['usaf']['elements'] = [
        UsafElement(g, e).as_dict() for g in range(2, 7) for e in range(1, 7)]

    meta_path = os.path.join(outdir, 'fixtures.json')
    with open(meta_path, 'w') as f:
        json.dump(metadata, f, indent=2, sort_keys=True)
    paths['metadata'] = meta_path
    logger.info('✓ Wrote %d fixtures to %s', len(FIXTURE_NAMES), outdir)
    return paths
