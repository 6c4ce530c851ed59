"""
End-to-end pipeline
Validates a run configuration, then generates the matrix, measures the
scene, reconstructs, optionally extracts edges, scores the result and writes
every artifact plus a JSON run report.
"""
from dataclasses import asdict, dataclass, field, fields
import copy
import json
import logging
import os
import time
from typing import Optional, get_args

from config import Config
from services.domain import INTERPOLATIONS, MeasurementModel, SamplingPlan
from services.errors import ConfigInvalid, IoError
from services.fixtures import FIXTURE_NAMES, fixture_image, resize
from services.forward import acquisition_time, measure_planned
from services.hpf_edges import REALIZATIONS, FilterSpec, edge_fraction, hpf_trace, threshold_edges
from services.metrics import effective_bits, psnr, ssim
from services.mls import MAX_DEGREE, MIN_DEGREE, primitive_polynomial, smatrix
from services.optics import SHAPES, ApertureModel, aperture_filter
from services.recon import ANCHORS, crop_active, interpolate_trace, place_on_field, reconstruct
from storage.formats import write_matrix, write_trace
from storage.images import image_size, load_image, save_image, save_mask
from storage.reports import write_report

logger = logging.getLogger(__name__)

ARTIFACTS = {
    'scene': 'scene.png',
    'reconstruction': 'reconstruction.png',
    'edges': 'edges.png',
    'trace': 'trace.spiv',
    'matrix': 'matrix.spi1',
    'report': 'report.json',
}


@dataclass
class MatrixSection:
    degree: int = 8
    p: int = 15
    q: int = 17


@dataclass
class ImageSection:
    """A fixture name or an image path, rendered or loaded at height x width; USAF when neither"""

    fixture: Optional[str] = None
    path: Optional[str] = None
    height: Optional[int] = None
    width: Optional[int] = None


@dataclass
class MeasurementSection:
    gain: float = 1.0
    noise_sigma: float = 0.0
    adc_bits: int = Config.ADC_BITS
    adc_full_scale: Optional[float] = None
    adc_enabled: bool = True
    dwell_T: float = 1.0 / Config.DMD_FRAME_RATE_HZ
    intensity: float = 1.0


@dataclass
class SamplingSection:
    stride: int = 1
    interpolation: str = 'linear'


@dataclass
class FilterSection:
    cutoff_hz: float = 1000.0
    order: int = 1
    realization: str = 'dft-multiply'


@dataclass
class ApertureSection:
    detector_side_um: float = Config.DEFAULT_OPTICS['detector_side_um']
    wavelength_um: float = Config.DEFAULT_OPTICS['wavelength_um']
    focal_mm: float = Config.DEFAULT_OPTICS['focal_mm']
    object_extent_mm: float = Config.DEFAULT_OPTICS['object_extent_mm']
    shape: str = 'square'
    na_diameter_um: Optional[float] = None


@dataclass
class CropSection:
    width: int
    height: int
    anchor: str = 'top-left'


@dataclass
class OutputSection:
    dir: str = Config.OUTPUT_DIR
    depth: int = 16


_SECTIONS = {
    'matrix': MatrixSection,
    'image': ImageSection,
    'measurement': MeasurementSection,
    'sampling': SamplingSection,
    'filter': FilterSection,
    'aperture': ApertureSection,
    'crop': CropSection,
    'output': OutputSection,
}
_OPTIONAL = ('filter', 'aperture', 'crop')

_KINDS = {
    int: 'an integer',
    float: 'a number',
    bool: 'true or false',
    str: 'a string',
}


def _expected_type(annotation):
    """Base type of a section field and whether it may be null"""
    args = [a for a in get_args(annotation) if a is not type(None)]
    return (args[0], True) if args else (annotation, False)


def _accepts(kind, value):
    if kind is bool:
        return isinstance(value, bool)
    if isinstance(value, bool):
        return False
    if kind is float:
        return isinstance(value, (int, float))
    return isinstance(value, kind)


def _type_problems(key, section, values):
    problems = []
    for f in fields(section):
        if f.name not in values:
            continue
        kind, nullable = _expected_type(f.type)
        value = values[f.name]
        if value is None and nullable:
            continue
        if not _accepts(kind, value):
            problems.append(f'{key}.{f.name}: expected {_KINDS[kind]}, got {value!r}')
    return problems


@dataclass
class PipelineConfig:
    """
    One pipeline run

    `filter`, `aperture` and `crop` are optional stages; None skips them.
    """

    matrix: MatrixSection = field(default_factory=MatrixSection)
    image: ImageSection = field(default_factory=ImageSection)
    measurement: MeasurementSection = field(default_factory=MeasurementSection)
    sampling: SamplingSection = field(default_factory=SamplingSection)
    filter: Optional[FilterSection] = None
    aperture: Optional[ApertureSection] = None
    crop: Optional[CropSection] = None
    output: OutputSection = field(default_factory=OutputSection)
    seed: int = Config.SEED

    @classmethod
    def from_dict(cls, raw):
        """
        Build a config from nested dicts

        Unknown sections or keys and values of the wrong type are reported
        together as ConfigInvalid.
        """
        problems = []
        kwargs = {}
        for key, value in raw.items():
            if key == 'seed':
                if not _accepts(int, value):
                    problems.append(f'seed: expected an integer, got {value!r}')
                kwargs['seed'] = value
                continue
            if key not in _SECTIONS:
                problems.append(f'{key}: unknown section')
                continue
            if value is None:
                if key not in _OPTIONAL:
                    problems.append(f'{key}: section is required')
                kwargs[key] = None
                continue
            if not isinstance(value, dict):
                problems.append(f'{key}: expected an object')
                continue
            section = _SECTIONS[key]
            known = {f.name for f in fields(section)}
            unknown = sorted(set(value) - known)
            problems.extend(f'{key}.{name}: unknown key' for name in unknown)
            problems.extend(_type_problems(key, section, value))
            try:
                kwargs[key] = section(**{k: v for k, v in value.items() if k in known})
            except TypeError as e:
                problems.append(f'{key}: {e}')
        if problems:
            raise ConfigInvalid(problems)
        return cls(**kwargs)

    @classmethod
    def from_json(cls, path, overrides=None):
        """
        Load a JSON config and apply dotted-key overrides; overrides win

        Args:
            path (str): config file
            overrides (dict): e.g. {'seed': 3, 'sampling.stride': 4}
        """
        try:
            with open(path) as f:
                raw = json.load(f)
        except OSError as e:
            raise IoError(f'cannot read config {path}: {e}') from e
        except json.JSONDecodeError as e:
            raise ConfigInvalid([f'{path}: invalid JSON ({e})'])
        return cls.from_dict(apply_overrides(raw, overrides or {}))

    def as_dict(self):
        return asdict(self)

    def field_shape(self):
        return self.matrix.p, self.matrix.q

    def image_shape(self):
        """Scene size: explicit height/width, the file's own size, or the whole field"""
        height, width = self.image.height, self.image.width
        if (height is None or width is None) and self.image.path:
            file_h, file_w = image_size(self.image.path)
            height = file_h if height is None else height
            width = file_w if width is None else width
        return (height or self.matrix.p), (width or self.matrix.q)

    def validate(self):
        """
        Check every cross-field constraint before any compute starts

        Raises:
            ConfigInvalid: one diagnostic per violated constraint
        """
        problems = []
        mat = self.matrix
        if not MIN_DEGREE <= mat.degree <= MAX_DEGREE:
            problems.append(f'matrix.degree: {mat.degree} outside [{MIN_DEGREE}, {MAX_DEGREE}]')
        elif mat.p * mat.q != (1 << mat.degree) - 1:
            problems.append(
                f'matrix: p * q = {mat.p * mat.q} must equal 2^degree - 1 = {(1 << mat.degree) - 1}')

        img = self.image
        if img.fixture is not None and img.path is not None:
            problems.append('image: give either fixture or path, not both')
        elif img.fixture is not None and img.fixture not in FIXTURE_NAMES:
            problems.append(f'image.fixture: {img.fixture!r} not one of {FIXTURE_NAMES}')
        for name in ('height', 'width'):
            value = getattr(img, name)
            if value is not None and value < 1:
                problems.append(f'image.{name}: must be >= 1, got {value}')
        if not problems:
            h, w = self.image_shape()
            if h > mat.p or w > mat.q:
                problems.append(f'image: {h}x{w} does not fit the {mat.p}x{mat.q} pattern field')

        meas = self.measurement
        if meas.noise_sigma < 0:
            problems.append(f'measurement.noise_sigma: must be >= 0, got {meas.noise_sigma}')
        if not 1 <= meas.adc_bits <= 24:
            problems.append(f'measurement.adc_bits: must lie in [1, 24], got {meas.adc_bits}')
        if meas.adc_full_scale is not None and meas.adc_full_scale <= 0:
            problems.append(f'measurement.adc_full_scale: must be > 0, got {meas.adc_full_scale}')
        if meas.dwell_T <= 0:
            problems.append(f'measurement.dwell_T: must be > 0, got {meas.dwell_T}')
        if not meas.gain > 0:
            problems.append(f'measurement.gain: must be > 0, got {meas.gain}')
        if meas.intensity < 0:
            problems.append(f'measurement.intensity: must be >= 0, got {meas.intensity}')

        if self.sampling.stride < 1:
            problems.append(f'sampling.stride: must be >= 1, got {self.sampling.stride}')
        if self.sampling.interpolation not in INTERPOLATIONS:
            problems.append(f'sampling.interpolation: not one of {INTERPOLATIONS}')

        if self.filter is not None:
            flt = self.filter
            if flt.order < 1:
                problems.append(f'filter.order: must be >= 1, got {flt.order}')
            if flt.realization not in REALIZATIONS:
                problems.append(f'filter.realization: not one of {REALIZATIONS}')
            n = mat.p * mat.q
            k_c = flt.cutoff_hz * meas.dwell_T * n
            if not 1 <= k_c < n / 2:
                problems.append(
                    f'filter.cutoff_hz: k_c = f_c T N = {k_c:.3f} must satisfy 1 <= k_c < {n / 2}')

        if self.aperture is not None:
            ap = self.aperture
            for name in ('detector_side_um', 'wavelength_um', 'focal_mm', 'object_extent_mm'):
                if not getattr(ap, name) > 0:
                    problems.append(f'aperture.{name}: must be > 0')
            if ap.shape not in SHAPES:
                problems.append(f'aperture.shape: not one of {SHAPES}')
            if ap.na_diameter_um is not None and not ap.na_diameter_um > 0:
                problems.append('aperture.na_diameter_um: must be > 0')

        if self.crop is not None:
            crop = self.crop
            if crop.anchor not in ANCHORS:
                problems.append(f'crop.anchor: not one of {ANCHORS}')
            if not (0 < crop.width <= mat.q and 0 < crop.height <= mat.p):
                problems.append(f'crop: {crop.width}x{crop.height} does not fit the {mat.p}x{mat.q} field')

        if self.output.depth not in (8, 16):
            problems.append(f'output.depth: must be 8 or 16, got {self.output.depth}')

        if problems:
            raise ConfigInvalid(problems)
        return self

    def measurement_model(self):
        return MeasurementModel(rng_seed=int(self.seed), **asdict(self.measurement))

    def sampling_plan(self):
        n = (1 << self.matrix.degree) - 1
        return SamplingPlan(n, self.sampling.stride, self.sampling.interpolation)


def apply_overrides(raw, overrides):
    """Set dotted keys ('section.key' or top-level 'seed') on a copy of raw"""
    merged = copy.deepcopy(raw)
    for dotted, value in overrides.items():
        if value is None:
            continue
        parts = dotted.split('.')
        node = merged
        for part in parts[:-1]:
            if node.get(part) is None:
                node[part] = {}
            node = node[part]
        node[parts[-1]] = value
    return merged


class _Stopwatch:
    """Collects wall-clock seconds per named stage"""

    def __init__(self):
        self.timings = {}

    def stage(self, name):
        return _Stage(self, name)


class _Stage:
    def __init__(self, watch, name):
        self.watch, self.name = watch, name

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.watch.timings[self.name] = time.perf_counter() - self.start
        return False


def _load_scene(cfg):
    h, w = cfg.image_shape()
    if cfg.image.path:
        return resize(load_image(cfg.image.path), (h, w))
    return fixture_image(cfg.image.fixture or 'usaf', (h, w), seed=cfg.seed)


def run_pipeline(cfg, outdir=None):
    """
    Execute a validated pipeline run and write its artifacts

    Args:
        cfg (PipelineConfig): run configuration
        outdir (str): destination, defaults to cfg.output.dir

    Returns:
        dict: the run report, also written to report.json
    """
    cfg.validate()
    outdir = outdir or cfg.output.dir
    paths = {name: os.path.join(outdir, fname) for name, fname in ARTIFACTS.items()}
    watch = _Stopwatch()
    model = cfg.measurement_model()
    plan = cfg.sampling_plan()

    with watch.stage('generate'):
        m = smatrix(cfg.matrix.degree, cfg.matrix.p, cfg.matrix.q)

    with watch.stage('scene'):
        scene = _load_scene(cfg)
        truth_field = place_on_field(scene, m.p, m.q)
        field_img = truth_field
        if cfg.aperture is not None:
            seen = aperture_filter(scene, ApertureModel(**asdict(cfg.aperture)))
            field_img = place_on_field(seen, m.p, m.q)

    with watch.stage('measure'):
        trace = measure_planned(m, field_img, model, plan)

    with watch.stage('interpolate'):
        complete = interpolate_trace(trace)

    with watch.stage('reconstruct'):
        recon = reconstruct(complete, m)
        if model.intensity > 0:
            recon = recon.scaled(1.0 / model.intensity)

    crop = cfg.crop or CropSection(width=scene.width, height=scene.height)
    recon_view = crop_active(recon, crop.width, crop.height, crop.anchor)
    truth_view = crop_active(truth_field, crop.width, crop.height, crop.anchor)

    edges_report = None
    if cfg.filter is not None:
        spec = FilterSpec(**asdict(cfg.filter))
        with watch.stage('edges'):
            gradient = reconstruct(hpf_trace(complete, spec), m)
            edges = threshold_edges(crop_active(gradient, crop.width, crop.height, crop.anchor))
        save_mask(edges, paths['edges'])
        edges_report = {
            'filter': spec.as_dict(),
            'k_c': spec.k_c(model.dwell_T, m.n),
            'edge_fraction': edge_fraction(edges),
        }

    with watch.stage('metrics'):
        n_unique, bits = effective_bits(m, field_img)
        quality = {
            'psnr_db': psnr(truth_view, recon_view),
            'ssim': ssim(truth_view, recon_view) if min(truth_view.shape) >= Config.SSIM_WINDOW else None,
            'n_unique_levels': n_unique,
            'effective_bits': bits,
        }

    depth = cfg.output.depth
    save_image(truth_view, paths['scene'], depth=depth)
    save_image(recon_view, paths['reconstruction'], depth=depth)
    write_trace(trace, paths['trace'])
    write_matrix(m, paths['matrix'])

    acq = acquisition_time(plan)
    artifacts = sorted(os.path.basename(p) for name, p in paths.items()
                       if name != 'edges' or edges_report is not None)
    report = {
        'schema': Config.REPORT_SCHEMA,
        'seed': int(cfg.seed),
        'config': cfg.as_dict(),
        'matrix': {
            'degree': m.degree,
            'polynomial': str(primitive_polynomial(m.degree)),
            'n': m.n,
            'p': m.p,
            'q': m.q,
        },
        'measurement': trace.model.as_dict(),
        'sampling': plan.as_dict(),
        'acquisition': {'patterns': acq.patterns, 'pattern_s': acq.pattern_s, 'total_s': acq.total_s},
        'crop': asdict(crop),
        'edges': edges_report,
        'quality': quality,
        'artifacts': artifacts,
        'timings': watch.timings,
    }
    write_report(report, paths['report'])
    logger.info('✓ Pipeline finished: N = %d, PSNR %.2f dB, artifacts in %s', m.n, quality['psnr_db'], outdir)
    return report
