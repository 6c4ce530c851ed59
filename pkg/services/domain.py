"""
Shared domain types
Images, measurement models, sampling plans and voltage traces used across the
forward model, reconstruction and edge pipeline.

Vectorization contract: an image of shape (p, q) maps to the pattern index
space row-major, index i = r * q + c.
"""
from dataclasses import dataclass, field, replace
from typing import Optional
import math
import numpy as np

from config import Config
from services.errors import InvalidParameter, NonFiniteInput, ShapeMismatch


@dataclass(frozen=True, eq=False)
class GrayImage:
    """2-D scalar field; pixel values nominally in [0, 1]"""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.array(self.pixels, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeMismatch(f'GrayImage needs a 2-D array, got shape {arr.shape}')
        if not np.all(np.isfinite(arr)):
            raise NonFiniteInput('image contains NaN or infinite pixels')
        arr.setflags(write=False)
        object.__setattr__(self, 'pixels', arr)

    @classmethod
    def from_vector(cls, vec, p, q):
        """Inverse of `vector()` under the row-major contract"""
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != p * q:
            raise ShapeMismatch(f'vector of length {vec.size} cannot fill {p}x{q}')
        return cls(vec.reshape(p, q))

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def shape(self):
        return self.pixels.shape

    def vector(self):
        return self.pixels.reshape(-1)

    def clipped(self):
        """Copy clamped to [0, 1], used only at export"""
        return GrayImage(np.clip(self.pixels, 0.0, 1.0))

    def scaled(self, alpha):
        return GrayImage(self.pixels * float(alpha))

    def in_unit_range(self):
        """True when every pixel is a valid scene transmittance in [0, 1]"""
        return bool(self.pixels.min() >= 0.0 and self.pixels.max() <= 1.0)

    def block_downsample(self, factor, reduce='mean'):
        """
        Merge factor x factor blocks of the field into single pixels

        Args:
            factor (int): block side in pixels
            reduce (str): 'mean' keeps the [0, 1] range, 'sum' keeps collected light

        Returns:
            GrayImage: image of shape (height // factor, width // factor)
        """
        factor = int(factor)
        if factor < 1:
            raise InvalidParameter(f'downsample factor must be >= 1, got {factor}')
        p, q = self.height // factor, self.width // factor
        if p == 0 or q == 0:
            raise ShapeMismatch(f'factor {factor} exceeds image shape {self.shape}')
        blocks = self.pixels[:p * factor, :q * factor].reshape(p, factor, q, factor)
        merged = blocks.sum(axis=(1, 3))
        if reduce == 'mean':
            merged = merged / (factor * factor)
        return GrayImage(merged)


@dataclass(frozen=True)
class MeasurementModel:
    """
    Detector chain parameters

    gain is volts per unit signal; noise_sigma is the additive Gaussian noise
    per sample in volts; adc_full_scale of None means 1.05x the largest ideal
    sample of each measurement; intensity multiplies the scene light.
    """

    gain: float = 1.0
    noise_sigma: float = 0.0
    adc_bits: int = Config.ADC_BITS
    adc_full_scale: Optional[float] = None
    adc_enabled: bool = True
    dwell_T: float = 1.0 / Config.DMD_FRAME_RATE_HZ
    rng_seed: int = Config.SEED
    intensity: float = 1.0

    def __post_init__(self):
        if not self.noise_sigma >= 0:
            raise InvalidParameter(f'noise_sigma must be >= 0, got {self.noise_sigma}')
        if not 1 <= int(self.adc_bits) <= 24:
            raise InvalidParameter(f'adc_bits must lie in [1, 24], got {self.adc_bits}')
        if not self.dwell_T > 0:
            raise InvalidParameter(f'dwell_T must be > 0, got {self.dwell_T}')
        if self.adc_full_scale is not None and not self.adc_full_scale > 0:
            raise InvalidParameter(f'adc_full_scale must be > 0, got {self.adc_full_scale}')
        if not (math.isfinite(self.gain) and self.gain > 0):
            raise InvalidParameter(f'gain must be finite and > 0, got {self.gain}')
        if not self.intensity >= 0:
            raise InvalidParameter(f'intensity must be >= 0, got {self.intensity}')

    def with_(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        return {
            'gain': self.gain,
            'noise_sigma': self.noise_sigma,
            'adc_bits': self.adc_bits,
            'adc_full_scale': self.adc_full_scale,
            'adc_enabled': self.adc_enabled,
            'dwell_T': self.dwell_T,
            'rng_seed': self.rng_seed,
            'intensity': self.intensity,
        }


INTERPOLATIONS = ('linear', 'nearest')


@dataclass(frozen=True)
class SamplingPlan:
    """
    Compressed sampling plan over a cyclic pattern sequence of `length` patterns

    Indices i with i = 1 (mod stride), 1-based, are measured; the rest are
    interpolated before reconstruction.
    """

    length: int
    stride: int = 1
    interpolation: str = 'linear'

    def __post_init__(self):
        if int(self.stride) < 1:
            raise InvalidParameter(f'stride must be >= 1, got {self.stride}')
        if int(self.length) < 1:
            raise InvalidParameter(f'plan length must be >= 1, got {self.length}')
        if self.interpolation not in INTERPOLATIONS:
            raise InvalidParameter(
                f'interpolation must be one of {INTERPOLATIONS}, got {self.interpolation!r}')

    @property
    def measured_count(self):
        return -(-self.length // self.stride)

    @property
    def declared_rate(self):
        return self.measured_count / self.length

    def measured_mask(self):
        mask = np.zeros(self.length, dtype=bool)
        mask[::self.stride] = True
        return mask

    def as_dict(self):
        return {
            'length': self.length,
            'stride': self.stride,
            'interpolation': self.interpolation,
            'declared_rate': self.declared_rate,
        }


@dataclass(frozen=True, eq=False)
class VoltageTrace:
    """
    Ordered voltage samples, one per displayed pattern

    `missing` flags the samples that were skipped by the sampling plan; their
    stored values carry no meaning.
    """

    samples: np.ndarray
    missing: np.ndarray
    dwell_T: float
    plan: SamplingPlan
    model: MeasurementModel = field(default_factory=MeasurementModel)

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        missing = np.array(self.missing, dtype=bool)
        if samples.ndim != 1 or missing.shape != samples.shape:
            raise ShapeMismatch(
                f'samples {samples.shape} and missing flags {missing.shape} must be equal 1-D')
        if samples.size != self.plan.length:
            raise ShapeMismatch(
                f'trace has {samples.size} samples but plan covers {self.plan.length}')
        samples.setflags(write=False)
        missing.setflags(write=False)
        object.__setattr__(self, 'samples', samples)
        object.__setattr__(self, 'missing', missing)

    @property
    def n(self):
        return self.samples.size

    @property
    def complete(self):
        return not self.missing.any()

    def with_samples(self, samples, missing=None):
        if missing is None:
            missing = np.zeros(len(samples), dtype=bool)
        return replace(self, samples=samples, missing=missing)


def rng_for(seed, stream):
    """Independent generator for one named sub-stream of a run seed"""
    key = Config.RNG_STREAMS[stream]
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(key,)))
