"""
Parameter studies
Compressed-sampling and light-intensity sweeps; every point is an
independent simulation, run through joblib and collected into a DataFrame.
"""
import logging
import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from services.domain import GrayImage, SamplingPlan
from services.errors import InvalidParameter
from services.forward import acquisition_time, measure_full, measure_planned
from services.metrics import psnr, ssim
from services.mls import fitting_geometry, smatrix
from services.recon import crop_active, interpolate_trace, place_on_field, reconstruct

logger = logging.getLogger(__name__)


def _light_normalized(img, scale):
    return img.scaled(1.0 / scale) if scale > 0 else img


def _compressed_point(m, img, model, stride, interpolation, reference):
    plan = SamplingPlan(m.n, stride, interpolation)
    trace = measure_planned(m, img, model, plan)
    recon = _light_normalized(reconstruct(interpolate_trace(trace), m), model.intensity)
    return {
        'stride': stride,
        'declared_rate': plan.declared_rate,
        'measured': plan.measured_count,
        'acquisition_s': acquisition_time(plan).total_s,
        'psnr_db': psnr(reference, recon),
        'ssim': ssim(reference, recon),
    }


def compressed_sampling_study(img, m, model, strides=(2, 4, 10), interpolation='linear', n_jobs=None):
    """
    Quality of compressed acquisitions against the full acquisition

    Every stride reuses the same noise realization as the stride-1
    reference, so only the skipped samples differ.

    Args:
        img (GrayImage): scene on the p x q field
        m (CyclicSMatrix): sampling matrix
        model (MeasurementModel): detector chain
        strides (tuple[int]): sampling strides to compare
        n_jobs (int): joblib workers, None for sequential

    Returns:
        pandas.DataFrame: one row per stride
    """
    reference = _light_normalized(reconstruct(measure_full(m, img, model), m), model.intensity)
    rows = Parallel(n_jobs=n_jobs)(
        delayed(_compressed_point)(m, img, model, int(s), interpolation, reference) for s in strides)
    df = pd.DataFrame(rows)
    for row in rows:
        logger.info('✓ stride %d (%.0f%%): PSNR %.2f dB, SSIM %.3f',
                    row['stride'], 100 * row['declared_rate'], row['psnr_db'], row['ssim'])
    return df


def _intensity_point(base, factor, intensity, model):
    truth = base.block_downsample(factor, reduce='mean')
    degree, p, q = fitting_geometry(truth.height, truth.width)
    m = smatrix(degree, p, q)
    # a merged block collects factor^2 times the light of one micromirror
    collected = factor * factor * intensity
    trace = measure_full(m, place_on_field(truth, p, q), model.with_(intensity=collected))
    recon = reconstruct(trace, m).scaled(1.0 / collected)
    recon = crop_active(recon, truth.width, truth.height)
    return {
        'block': factor,
        'height': truth.height,
        'width': truth.width,
        'n': m.n,
        'intensity': intensity,
        'psnr_db': psnr(truth, recon),
        'ssim': ssim(truth, recon),
    }


def intensity_sweep(base, model, blocks=(1, 2, 4), intensities=(1, 2, 4, 8, 16), n_jobs=None):
    """
    PSNR and SSIM against light intensity at several resolutions

    Coarser resolutions merge factor x factor micromirror blocks into one
    pixel, so each pixel collects factor^2 times the light while the
    detector noise stays fixed.

    Args:
        base (GrayImage): finest-resolution scene in [0, 1]
        model (MeasurementModel): detector chain; its noise_sigma is held fixed
        blocks (tuple[int]): block sides, 1 for the native resolution
        intensities (tuple[float]): light multipliers

    Returns:
        pandas.DataFrame: one row per (block, intensity)
    """
    if not isinstance(base, GrayImage):
        raise InvalidParameter('intensity sweep needs a GrayImage scene')
    if any(a <= 0 for a in intensities):
        raise InvalidParameter('intensities must be positive')
    rows = Parallel(n_jobs=n_jobs)(
        delayed(_intensity_point)(base, int(b), float(a), model)
        for b in blocks for a in intensities)
    df = pd.DataFrame(rows).sort_values(['block', 'intensity'], ignore_index=True)
    logger.info('✓ Intensity sweep: %d points, PSNR %.1f..%.1f dB',
                len(df), df['psnr_db'].min(), df['psnr_db'].max())
    return df


def monotone_non_decreasing(values, tol=1e-12):
    values = np.asarray(values, dtype=np.float64)
    return bool(np.all(np.diff(values) >= -tol))
