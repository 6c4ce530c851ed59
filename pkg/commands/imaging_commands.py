"""
Imaging Commands Module
Simulates acquisitions, reconstructs traces and extracts edge maps
"""
import logging
import time

from commands import command, parse_size
from config import Config
from services.domain import INTERPOLATIONS, GrayImage, MeasurementModel, SamplingPlan
from services.forward import acquisition_time, measure_planned
from services.hpf_edges import (
    REALIZATIONS, FilterSpec, edge_fraction, gradient_from_trace, threshold_edges,
)
from services.metrics import psnr
from services.recon import ANCHORS, crop_active, interpolate_trace, place_on_field, reconstruct
from storage.formats import read_matrix, read_trace, write_trace
from storage.images import load_image, save_image, save_mask
from storage.reports import write_sidecar

logger = logging.getLogger(__name__)


def _cropped(img, args):
    if args.crop is None:
        return img
    width, height = args.crop
    return crop_active(img, width, height, args.anchor)


@command
def simulate(args):
    """Measure an image with a stored matrix and write the voltage trace"""
    m = read_matrix(args.matrix)
    scene = place_on_field(load_image(args.image), m.p, m.q)
    model = MeasurementModel(
        gain=args.gain,
        noise_sigma=args.noise_sigma,
        adc_bits=args.adc_bits,
        adc_full_scale=args.full_scale,
        adc_enabled=not args.no_adc,
        dwell_T=1.0 / args.frame_rate,
        rng_seed=args.seed,
        intensity=args.intensity,
    )
    plan = SamplingPlan(m.n, args.stride, args.interpolation)
    trace = measure_planned(m, scene, model, plan)
    write_trace(trace, args.out)
    acq = acquisition_time(plan, frame_rate_hz=args.frame_rate)
    logger.info('✓ Simulated %d of %d patterns -> %s', plan.measured_count, m.n, args.out)
    return {
        'success': True,
        'path': args.out,
        'n': m.n,
        'measured': plan.measured_count,
        'declared_rate': plan.declared_rate,
        'acquisition_s': acq.total_s,
        'model': trace.model.as_dict(),
    }, 0


@command
def reconstruct_trace(args):
    """Interpolate and invert a stored trace; writes the image and a JSON sidecar"""
    m = read_matrix(args.matrix)
    trace = read_trace(args.trace, gain=args.gain, interpolation=args.interpolation)
    start = time.perf_counter()
    recon = reconstruct(interpolate_trace(trace), m)
    runtime_ms = (time.perf_counter() - start) * 1000.0
    recon = _cropped(recon, args)

    psnr_vs = None
    if args.reference:
        reference = load_image(args.reference)
        view = recon
        if reference.shape != recon.shape:
            view = crop_active(recon, reference.width, reference.height, args.anchor)
        psnr_vs = psnr(reference, view)
    save_image(recon, args.out, depth=args.depth)
    sidecar = {'psnr_vs': psnr_vs, 'runtime_ms': runtime_ms, 'n': m.n, 'stride': trace.plan.stride}
    sidecar_path = write_sidecar(args.out, sidecar)
    logger.info('✓ Reconstructed N = %d in %.1f ms -> %s', m.n, runtime_ms, args.out)
    return {'success': True, 'path': args.out, 'sidecar': sidecar_path, **sidecar}, 0


@command
def edges(args):
    """High-pass the trace, reconstruct the gradient and binarize it"""
    m = read_matrix(args.matrix)
    trace = read_trace(args.trace, gain=args.gain, interpolation=args.interpolation)
    spec = FilterSpec(args.cutoff_hz, args.order, args.realization)
    gradient = _cropped(gradient_from_trace(trace, m, spec), args)
    edge_map = threshold_edges(gradient, scale=args.scale)
    save_mask(edge_map, args.out)

    payload = {
        'success': True,
        'path': args.out,
        'filter': spec.as_dict(),
        'k_c': spec.k_c(trace.dwell_T, trace.n),
        'edge_fraction': edge_fraction(edge_map),
    }
    if args.emit_gradient:
        # Signed gradient mapped to [0, 1] with zero at mid-gray
        peak = float(abs(gradient.pixels).max()) or 1.0
        save_image(GrayImage(gradient.pixels * (0.5 / peak) + 0.5), args.emit_gradient, depth=16)
        payload['gradient'] = args.emit_gradient
    return payload, 0


def _trace_arguments(p):
    p.add_argument('--matrix', required=True, help='matrix file')
    p.add_argument('--trace', required=True, help='trace file')
    p.add_argument('--gain', type=float, default=1.0, help='detector gain, V per unit signal')
    p.add_argument('--interpolation', choices=INTERPOLATIONS, default='linear')
    p.add_argument('--crop', type=parse_size, help='active area WIDTHxHEIGHT')
    p.add_argument('--anchor', choices=ANCHORS, default='top-left')


def register(subparsers):
    p = subparsers.add_parser('simulate', help='simulate the detector trace for an image')
    p.add_argument('--matrix', required=True, help='matrix file')
    p.add_argument('--image', required=True, help='scene image (.png/.pgm)')
    p.add_argument('--out', required=True, help='trace file to write')
    p.add_argument('--gain', type=float, default=1.0)
    p.add_argument('--noise-sigma', type=float, default=0.0, help='additive noise per sample, V')
    p.add_argument('--adc-bits', type=int, default=Config.ADC_BITS)
    p.add_argument('--full-scale', type=float, help='ADC full scale, V (default: 1.05 x peak)')
    p.add_argument('--no-adc', action='store_true', help='skip quantization')
    p.add_argument('--intensity', type=float, default=1.0, help='light intensity multiplier')
    p.add_argument('--frame-rate', type=float, default=Config.DMD_FRAME_RATE_HZ, help='patterns per second')
    p.add_argument('--stride', type=int, default=1, help='measure every k-th pattern')
    p.add_argument('--interpolation', choices=INTERPOLATIONS, default='linear')
    p.add_argument('--seed', type=int, default=Config.SEED)
    p.set_defaults(handler=simulate)

    p = subparsers.add_parser('reconstruct', help='reconstruct an image from a trace')
    _trace_arguments(p)
    p.add_argument('--out', required=True, help='image to write')
    p.add_argument('--depth', type=int, choices=(8, 16), default=16)
    p.add_argument('--reference', help='ground-truth image for the PSNR in the sidecar')
    p.set_defaults(handler=reconstruct_trace)

    p = subparsers.add_parser('edges', help='edge map by temporal high-pass filtering')
    _trace_arguments(p)
    p.add_argument('--cutoff-hz', type=float, required=True)
    p.add_argument('--order', type=int, default=1)
    p.add_argument('--realization', choices=REALIZATIONS, default='dft-multiply')
    p.add_argument('--scale', type=float, default=Config.OTSU_SCALE, help='fraction of the Otsu level')
    p.add_argument('--out', required=True, help='binary edge map to write')
    p.add_argument('--emit-gradient', help='also write the signed gradient image here')
    p.set_defaults(handler=edges)
