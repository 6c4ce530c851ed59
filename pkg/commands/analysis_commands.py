"""
Analysis Commands Module
Detector-aperture filtering, colour fusion, quality metrics and effective bits
"""
import logging

import numpy as np

from commands import command, parse_floats
from config import Config
from services.color import CmfTable, fuse_rgb, load_spectrum_csv, make_channel
from services.domain import GrayImage
from services.errors import InvalidParameter
from services.metrics import effective_bits, psnr, ssim
from services.optics import (
    SHAPES, ApertureModel, aperture_filter, cutoff_frequency, fourier_plane_intensity,
    resolvable_frequency,
)
from services.recon import place_on_field
from storage.formats import read_matrix
from storage.images import load_image, save_image, save_rgb
from storage.reports import write_report

logger = logging.getLogger(__name__)


@command
def aperture(args):
    """Low-pass an image through the Fourier-plane detector and report its resolution"""
    model = ApertureModel(
        detector_side_um=args.side_um,
        wavelength_um=args.wavelength_um,
        focal_mm=args.focal_mm,
        object_extent_mm=args.extent_mm,
        shape=args.shape,
        na_diameter_um=args.na_um,
    )
    img = load_image(args.image)
    filtered = aperture_filter(img, model)
    save_image(filtered, args.out)
    plane = fourier_plane_intensity(img, model)

    payload = {
        'success': True,
        'path': args.out,
        'aperture': model.as_dict(),
        'cutoff_lp_per_mm': cutoff_frequency(model),
        'fourier_extent_um': plane.extent_um,
    }
    if args.fourier_out:
        log_plane = np.log1p(plane.intensity)
        save_image(GrayImage(log_plane / (log_plane.max() or 1.0)), args.fourier_out, depth=16)
        payload['fourier'] = args.fourier_out
    element = resolvable_frequency(model)
    payload['resolved'] = element.as_dict() if element else None
    if args.report:
        write_report({k: v for k, v in payload.items() if k != 'success'}, args.report)
    return payload, 0


@command
def fuse(args):
    """Fuse three wavelength channels into an RGB image"""
    paths = (args.r, args.g, args.b)
    wavelengths = args.wavelengths
    gains = args.gains or [1.0, 1.0, 1.0]
    spectra = args.spectrum_csv.split(',') if args.spectrum_csv else [None, None, None]
    for name, values in (('wavelengths', wavelengths), ('gains', gains), ('spectrum-csv', spectra)):
        if len(values) != 3:
            raise InvalidParameter(f'--{name} needs 3 values, got {len(values)}')

    cmf = CmfTable.load()
    channels = []
    for path, center, gain, spectrum_path in zip(paths, wavelengths, gains, spectra):
        spectrum = load_spectrum_csv(spectrum_path, cmf.grid) if spectrum_path else None
        channels.append(make_channel(center, load_image(path), args.fwhm, gain, spectrum, cmf.grid))
    rgb = fuse_rgb(channels, cmf, gamma=args.gamma)
    save_rgb(rgb, args.out)
    logger.info('✓ Fused %s nm channels -> %s', '/'.join(f'{w:g}' for w in wavelengths), args.out)
    return {
        'success': True,
        'path': args.out,
        'wavelengths_nm': wavelengths,
        'gains': gains,
        'gamma': args.gamma,
    }, 0


@command
def metrics(args):
    """PSNR and SSIM of image b against reference a"""
    a, b = load_image(args.a), load_image(args.b)
    report = {'psnr_db': psnr(a, b, peak=args.peak)}
    report['ssim'] = ssim(a, b) if min(a.shape) >= Config.SSIM_WINDOW else None
    if args.report:
        write_report(report, args.report)
    return {'success': True, **report}, 0


@command
def bits(args):
    """Distinct ideal measurement levels of an image under a stored matrix"""
    m = read_matrix(args.matrix)
    img = place_on_field(load_image(args.image), m.p, m.q)
    count, n_bits = effective_bits(m, img)
    report = {'n': m.n, 'n_unique_levels': count, 'effective_bits': n_bits}
    if args.report:
        write_report(report, args.report)
    return {'success': True, **report}, 0


def register(subparsers):
    optics = Config.DEFAULT_OPTICS
    p = subparsers.add_parser('aperture', help='filter an image through the detector aperture')
    p.add_argument('--image', required=True)
    p.add_argument('--out', required=True)
    p.add_argument('--detector-um', '--side-um', dest='side_um', type=float,
                   default=optics['detector_side_um'])
    p.add_argument('--wavelength-um', type=float, default=optics['wavelength_um'])
    p.add_argument('--focal-mm', type=float, default=optics['focal_mm'])
    p.add_argument('--extent-mm', type=float, default=optics['object_extent_mm'])
    p.add_argument('--shape', choices=SHAPES, default='square')
    p.add_argument('--na-um', type=float, help='diameter of the NA-limited circle')
    p.add_argument('--fourier-out', help='also write the log Fourier-plane intensity')
    p.add_argument('--report', help='JSON report to write')
    p.set_defaults(handler=aperture)

    p = subparsers.add_parser('fuse', help='fuse three wavelength channels into RGB')
    p.add_argument('--r', required=True)
    p.add_argument('--g', required=True)
    p.add_argument('--b', required=True)
    p.add_argument('--wavelengths', type=parse_floats, default=list(Config.LED_WAVELENGTHS_NM))
    p.add_argument('--gains', type=parse_floats, help='per-channel gains, e.g. 40,1,1')
    p.add_argument('--fwhm', type=float, default=Config.LED_FWHM_NM, help='Gaussian LED FWHM, nm')
    p.add_argument('--spectrum-csv', help='three comma-separated spectrum CSVs, r,g,b')
    p.add_argument('--gamma', type=float, default=Config.GAMMA)
    p.add_argument('--out', required=True)
    p.set_defaults(handler=fuse)

    p = subparsers.add_parser('metrics', help='PSNR and SSIM between two images')
    p.add_argument('--a', required=True, help='reference image')
    p.add_argument('--b', required=True, help='test image')
    p.add_argument('--peak', type=float, default=1.0)
    p.add_argument('--report', help='JSON report to write')
    p.set_defaults(handler=metrics)

    p = subparsers.add_parser('bits', help='effective ADC bits an image demands')
    p.add_argument('--matrix', required=True)
    p.add_argument('--image', required=True)
    p.add_argument('--report', help='JSON report to write')
    p.set_defaults(handler=bits)
