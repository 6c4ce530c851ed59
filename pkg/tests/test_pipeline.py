"""Unit tests for services.pipeline

Config validation and overrides, the demo run and run determinism.
"""
import json
import os

import pytest

from services.errors import ConfigInvalid, IoError
from services.pipeline import ARTIFACTS, PipelineConfig, apply_overrides, run_pipeline
from storage.images import load_image

DEMO = os.path.join(os.path.dirname(__file__), '..', 'configs', 'demo_255.json')


def _config(**sections):
    raw = {
        'seed': 0,
        'matrix': {'degree': 8, 'p': 15, 'q': 17},
        'measurement': {'noise_sigma': 0.0, 'adc_enabled': False},
        'output': {'depth': 8},
    }
    raw.update(sections)
    return PipelineConfig.from_dict(raw)


def test_demo_run_is_exact(tmp_path):
    cfg = PipelineConfig.from_json(DEMO, {'output.dir': str(tmp_path)})
    report = run_pipeline(cfg)

    assert report['schema'] == 'spi-kit-report/1'
    assert report['matrix']['n'] == 255
    assert report['quality']['psnr_db'] == 99.0
    assert report['quality']['ssim'] is not None
    assert report['edges']['k_c'] == pytest.approx(1000.0 * 255 / 22727)
    assert sorted(report['artifacts']) == sorted(ARTIFACTS.values())
    for name in ARTIFACTS.values():
        assert os.path.exists(tmp_path / name)
    assert load_image(str(tmp_path / 'reconstruction.png')).shape == (15, 17)

    stored = json.load(open(tmp_path / 'report.json'))
    assert stored['quality'] == report['quality']


def test_run_without_filter_skips_edges(tmp_path):
    report = run_pipeline(_config(), outdir=str(tmp_path))
    assert report['edges'] is None
    assert 'edges.png' not in report['artifacts']
    assert not os.path.exists(tmp_path / 'edges.png')


def test_crop_and_aperture_stages(tmp_path):
    cfg = _config(
        image={'fixture': 'speckle', 'height': 12, 'width': 16},
        crop={'width': 16, 'height': 12},
        aperture={'detector_side_um': 2000.0},
    )
    report = run_pipeline(cfg, outdir=str(tmp_path))
    assert report['crop'] == {'width': 16, 'height': 12, 'anchor': 'top-left'}
    assert load_image(str(tmp_path / 'reconstruction.png')).shape == (12, 16)
    assert report['quality']['ssim'] is not None


def test_bad_factorization_is_rejected():
    cfg = _config(matrix={'degree': 8, 'p': 16, 'q': 16})
    with pytest.raises(ConfigInvalid) as info:
        cfg.validate()
    assert any('p * q = 256' in problem for problem in info.value.problems)


def test_all_problems_reported_together():
    cfg = _config(
        matrix={'degree': 8, 'p': 15, 'q': 17},
        sampling={'stride': 0},
        filter={'cutoff_hz': 1.0},
        output={'depth': 12},
    )
    with pytest.raises(ConfigInvalid) as info:
        cfg.validate()
    problems = ' '.join(info.value.problems)
    assert 'sampling.stride' in problems
    assert 'filter.cutoff_hz' in problems
    assert 'output.depth' in problems


def test_unknown_keys_are_rejected():
    with pytest.raises(ConfigInvalid):
        PipelineConfig.from_dict({'matrix': {'degree': 8, 'rows': 15}})
    with pytest.raises(ConfigInvalid):
        PipelineConfig.from_dict({'detector': {}})


def test_image_larger_than_field():
    cfg = _config(image={'fixture': 'usaf', 'height': 20, 'width': 17})
    with pytest.raises(ConfigInvalid):
        cfg.validate()


def test_overrides_win():
    raw = {'seed': 0, 'sampling': {'stride': 1}}
    merged = apply_overrides(raw, {'seed': 5, 'sampling.stride': 4, 'crop.width': 10, 'output.dir': None})
    assert merged['seed'] == 5
    assert merged['sampling']['stride'] == 4
    assert merged['crop'] == {'width': 10}
    assert 'output' not in merged
    assert raw['sampling']['stride'] == 1


def test_missing_and_malformed_config(tmp_path):
    with pytest.raises(IoError):
        PipelineConfig.from_json(str(tmp_path / 'absent.json'))
    bad = tmp_path / 'bad.json'
    bad.write_text('{"matrix": ')
    with pytest.raises(ConfigInvalid):
        PipelineConfig.from_json(str(bad))


def test_runs_are_deterministic(tmp_path):
    overrides = {'measurement.noise_sigma': 0.5, 'measurement.adc_enabled': True,
                 'sampling.stride': 2, 'seed': 3}
    reports = []
    for name in ('first', 'second'):
        cfg = PipelineConfig.from_json(DEMO, {**overrides, 'output.dir': str(tmp_path / name)})
        reports.append(run_pipeline(cfg))

    for artifact in ('scene.png', 'reconstruction.png', 'edges.png', 'trace.spiv', 'matrix.spi1'):
        assert (tmp_path / 'first' / artifact).read_bytes() == (tmp_path / 'second' / artifact).read_bytes()

    first, second = ({k: v for k, v in r.items() if k not in ('timings', 'config')} for r in reports)
    assert first == second
    assert reports[0]['quality']['psnr_db'] < 99.0


def test_wrong_value_types_are_reported():
    with pytest.raises(ConfigInvalid) as info:
        PipelineConfig.from_dict({
            'seed': 1.5,
            'matrix': {'degree': '8', 'p': 15, 'q': 17},
            'sampling': {'stride': True},
            'measurement': {'adc_enabled': 1, 'noise_sigma': 'loud'},
            'image': {'fixture': 7},
        })
    problems = ' '.join(info.value.problems)
    for key in ('seed', 'matrix.degree', 'sampling.stride', 'measurement.adc_enabled',
                'measurement.noise_sigma', 'image.fixture'):
        assert key in problems
    assert 'matrix.p' not in problems


def test_integers_are_accepted_for_numbers():
    cfg = PipelineConfig.from_dict({'filter': {'cutoff_hz': 1000}, 'image': {'height': None}})
    assert cfg.filter.cutoff_hz == 1000
    assert cfg.image.height is None


@pytest.mark.parametrize('gain', [-1.0, 0.0])
def test_gain_must_be_positive(gain):
    cfg = _config(measurement={'gain': gain, 'noise_sigma': 0.0})
    with pytest.raises(ConfigInvalid) as info:
        cfg.validate()
    assert any('measurement.gain' in problem for problem in info.value.problems)
