"""
Forward measurement model
Simulates the detector output for every displayed pattern: ideal inner
products (one circular correlation over the whole sequence), additive
Gaussian noise and ADC quantization.
"""
from dataclasses import dataclass
import logging
import numpy as np
from scipy import fft

from config import Config
from services.domain import SamplingPlan, VoltageTrace, rng_for
from services.errors import InvalidParameter, LengthMismatch, ShapeMismatch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AcquisitionTime:
    """Pattern display time and the overhead-scaled total, in seconds"""

    patterns: int
    pattern_s: float
    total_s: float


def kernel_spectrum(m):
    """Half spectrum (rfft) of the first row c1"""
    return fft.rfft(m.first_row.bits.astype(np.float64))


def ideal_samples(m, img):
    """
    Noiseless inner products row_i . vec(X) for i = 1..N

    Sample i correlates c1 with the image, which is the circular convolution
    of c1 with the index-reversed image vector; in the DFT domain
    DFT(V)(k) = DFT(c1)(k) * conj(DFT(X)(k)).
    """
    if img.shape != (m.p, m.q):
        raise ShapeMismatch(f'image {img.shape} does not match pattern field {(m.p, m.q)}')
    x = img.vector()
    return fft.irfft(kernel_spectrum(m) * np.conj(fft.rfft(x)), n=m.n)


def quantize(samples, bits, full_scale):
    """Round to the ADC grid, LSB = full_scale / 2^bits, and clip to [0, full_scale]"""
    lsb = full_scale / float(1 << int(bits))
    return np.clip(np.round(samples / lsb) * lsb, 0.0, full_scale)


def resolve_full_scale(model, ideal):
    if model.adc_full_scale is not None:
        return float(model.adc_full_scale)
    peak = float(np.max(ideal)) if ideal.size else 0.0
    return Config.ADC_HEADROOM * peak if peak > 0 else 1.0


def measure_full(m, img, model):
    """
    Measure every pattern of the cyclic sequence

    Args:
        m (CyclicSMatrix): sampling matrix
        img (GrayImage): scene of shape (p, q)
        model (MeasurementModel): detector chain

    Returns:
        VoltageTrace: complete trace of N samples
    """
    if not img.in_unit_range():
        raise InvalidParameter(
            f'scene pixels must lie in [0, 1], got [{img.pixels.min():.3g}, {img.pixels.max():.3g}]; '
            'scale the light with model.intensity instead')
    ideal = model.gain * model.intensity * ideal_samples(m, img)

    samples = ideal
    if model.noise_sigma > 0:
        noise = rng_for(model.rng_seed, 'noise').normal(0.0, model.noise_sigma, size=m.n)
        samples = samples + noise

    snapshot = model
    if model.adc_enabled:
        full_scale = resolve_full_scale(model, ideal)
        samples = quantize(samples, model.adc_bits, full_scale)
        snapshot = model.with_(adc_full_scale=full_scale)

    return VoltageTrace(
        samples=samples,
        missing=np.zeros(m.n, dtype=bool),
        dwell_T=model.dwell_T,
        plan=SamplingPlan(length=m.n),
        model=snapshot,
    )


def measure_planned(m, img, model, plan):
    """
    Measure only the patterns selected by the sampling plan

    Skipped samples are flagged missing. Measured samples equal those of
    `measure_full` under the same seed.
    """
    if plan.length != m.n:
        raise LengthMismatch(f'plan covers {plan.length} patterns, matrix has {m.n}')
    full = measure_full(m, img, model)
    mask = plan.measured_mask()
    samples = np.where(mask, full.samples, 0.0)
    logger.debug('Measured %d of %d patterns (stride %d)', plan.measured_count, m.n, plan.stride)
    return VoltageTrace(samples, ~mask, full.dwell_T, plan, full.model)


def acquisition_time(plan, frame_rate_hz=Config.DMD_FRAME_RATE_HZ,
                     overhead_factor=Config.ACQUISITION_OVERHEAD):
    """Time to display the measured patterns at the given frame rate"""
    if not frame_rate_hz > 0:
        raise InvalidParameter(f'frame rate must be > 0, got {frame_rate_hz}')
    if not overhead_factor >= 1:
        raise InvalidParameter(f'overhead factor must be >= 1, got {overhead_factor}')
    pattern_s = plan.measured_count / float(frame_rate_hz)
    return AcquisitionTime(plan.measured_count, pattern_s, pattern_s * overhead_factor)


def noise_sigma_from_density(current_density, bandwidth_hz, transimpedance):
    """
    Voltage noise sigma from a current noise density

    Args:
        current_density (float): A / sqrt(Hz)
        bandwidth_hz (float): measurement bandwidth
        transimpedance (float): preamplifier gain, V / A

    Returns:
        float: noise standard deviation in volts
    """
    if current_density < 0 or bandwidth_hz < 0 or transimpedance < 0:
        raise InvalidParameter('noise density, bandwidth and gain must be non-negative')
    return float(current_density) * np.sqrt(bandwidth_hz) * float(transimpedance)
