"""Integration tests for the spi-kit command line

Each subcommand is driven through app.main with argument lists; the JSON
payload printed on stdout and the exit code are checked.
"""
import json
import os

import numpy as np
import pytest
from PIL import Image

from app import main
from services.domain import GrayImage
from services.fixtures import fixture_image
from storage.images import load_image, save_image

DEMO = os.path.join(os.path.dirname(__file__), '..', 'configs', 'demo_255.json')


def _run(capsys, *argv):
    status = main(list(argv))
    out = capsys.readouterr().out
    return status, json.loads(out) if out.strip() else None


@pytest.fixture
def workspace(tmp_path, capsys):
    matrix = str(tmp_path / 'm.spi1')
    status, _ = _run(capsys, 'gen-matrix', '--degree', '10', '--out', matrix)
    assert status == 0
    scene = str(tmp_path / 'scene.png')
    save_image(fixture_image('kangaroo', (31, 33)), scene)
    return tmp_path, matrix, scene


def test_gen_matrix(tmp_path, capsys):
    status, payload = _run(capsys, 'gen-matrix', '--degree', '8', '--rows', '15', '--cols', '17',
                           '--out', str(tmp_path / 'm.spi1'))
    assert status == 0
    assert payload['n'] == 255
    assert payload['ones'] == 128
    assert os.path.exists(tmp_path / 'm.spi1')


def test_polynomial_table(capsys):
    status, payload = _run(capsys, 'gen-matrix', '--table')
    assert status == 0
    assert len(payload['polynomials']) == 19


def test_simulate_and_reconstruct(workspace, capsys):
    tmp_path, matrix, scene = workspace
    trace = str(tmp_path / 'trace.spiv')
    status, payload = _run(capsys, 'simulate', '--matrix', matrix, '--image', scene,
                           '--out', trace, '--no-adc')
    assert status == 0
    assert payload['measured'] == 1023

    recon = str(tmp_path / 'recon.png')
    status, payload = _run(capsys, 'reconstruct', '--matrix', matrix, '--trace', trace,
                           '--out', recon, '--reference', scene)
    assert status == 0
    assert payload['psnr_vs'] >= 60.0
    sidecar = json.load(open(tmp_path / 'recon.json'))
    assert set(sidecar) >= {'psnr_vs', 'runtime_ms', 'n', 'stride'}
    assert sidecar['n'] == 1023


def test_compressed_simulation_records_stride(workspace, capsys):
    tmp_path, matrix, scene = workspace
    trace = str(tmp_path / 'trace.spiv')
    status, payload = _run(capsys, 'simulate', '--matrix', matrix, '--image', scene,
                           '--out', trace, '--stride', '4')
    assert status == 0
    assert payload['measured'] == 256
    status, payload = _run(capsys, 'reconstruct', '--matrix', matrix, '--trace', trace,
                           '--out', str(tmp_path / 'r.png'), '--crop', '33x31')
    assert status == 0
    assert payload['stride'] == 4


def test_edges(workspace, capsys):
    tmp_path, matrix, scene = workspace
    trace = str(tmp_path / 'trace.spiv')
    _run(capsys, 'simulate', '--matrix', matrix, '--image', scene, '--out', trace, '--no-adc')
    status, payload = _run(capsys, 'edges', '--matrix', matrix, '--trace', trace,
                           '--cutoff-hz', '2000', '--out', str(tmp_path / 'edges.png'),
                           '--emit-gradient', str(tmp_path / 'grad.png'))
    assert status == 0
    assert 0.0 < payload['edge_fraction'] < 0.5
    assert load_image(str(tmp_path / 'grad.png')).shape == (31, 33)


def test_edges_cutoff_out_of_range(workspace, capsys):
    tmp_path, matrix, scene = workspace
    trace = str(tmp_path / 'trace.spiv')
    _run(capsys, 'simulate', '--matrix', matrix, '--image', scene, '--out', trace)
    status, payload = _run(capsys, 'edges', '--matrix', matrix, '--trace', trace,
                           '--cutoff-hz', '1', '--out', str(tmp_path / 'edges.png'))
    assert status == 2
    assert payload['error'] == 'Cutoff out of range'


def test_metrics_and_bits(workspace, capsys):
    tmp_path, matrix, scene = workspace
    status, payload = _run(capsys, 'metrics', '--a', scene, '--b', scene,
                           '--report', str(tmp_path / 'q.json'))
    assert status == 0
    assert payload['psnr_db'] == 99.0
    assert payload['ssim'] == 1.0

    status, payload = _run(capsys, 'bits', '--matrix', matrix, '--image', scene)
    assert status == 0
    assert payload['n_unique_levels'] > 1


def test_fuse(tmp_path, capsys):
    paths = []
    for name, seed in (('r', 1), ('g', 2), ('b', 3)):
        path = str(tmp_path / f'{name}.png')
        save_image(GrayImage(np.random.default_rng(seed).random((8, 8))), path)
        paths.append(path)
    out = str(tmp_path / 'rgb.png')
    status, payload = _run(capsys, 'fuse', '--r', paths[0], '--g', paths[1], '--b', paths[2],
                           '--gains', '40,1,1', '--out', out)
    assert status == 0
    assert payload['wavelengths_nm'] == [780.0, 565.0, 450.0]
    assert Image.open(out).mode == 'RGB'


def test_fuse_bad_gamma(tmp_path, capsys):
    path = str(tmp_path / 'c.png')
    save_image(GrayImage(np.ones((4, 4))), path)
    status, payload = _run(capsys, 'fuse', '--r', path, '--g', path, '--b', path,
                           '--gamma', '0', '--out', str(tmp_path / 'rgb.png'))
    assert status == 2
    assert payload['error'] == 'Bad gamma'


def test_aperture(tmp_path, capsys):
    scene = str(tmp_path / 'usaf.png')
    save_image(fixture_image('usaf', (256, 256)), scene)
    status, payload = _run(capsys, 'aperture', '--image', scene, '--out', str(tmp_path / 'f.png'),
                           '--detector-um', '170', '--report', str(tmp_path / 'ap.json'))
    assert status == 0
    assert payload['resolved']['group'] in (5, 6)
    assert os.path.exists(tmp_path / 'ap.json')


def test_fixtures_and_run(tmp_path, capsys):
    status, payload = _run(capsys, 'fixtures', '--outdir', str(tmp_path / 'fx'))
    assert status == 0
    assert os.path.exists(payload['files']['usaf'])

    status, payload = _run(capsys, 'run', '--config', DEMO, '--outdir', str(tmp_path / 'run'),
                           '--set', 'sampling.stride=2')
    assert status == 0
    assert payload['report']['sampling']['stride'] == 2
    assert os.path.exists(tmp_path / 'run' / 'report.json')


def test_run_with_invalid_config(tmp_path, capsys):
    status, payload = _run(capsys, 'run', '--config', DEMO, '--outdir', str(tmp_path),
                           '--set', 'matrix.p=16')
    assert status == 2
    assert payload['error'] == 'Invalid configuration'


def test_io_error_exit_code(tmp_path, capsys):
    status, payload = _run(capsys, 'bits', '--matrix', str(tmp_path / 'absent.spi1'),
                           '--image', str(tmp_path / 'absent.png'))
    assert status == 3
    assert payload['error'] == 'I/O error'


def test_numerical_failure_exit_code(workspace, capsys):
    tmp_path, matrix, scene = workspace
    trace = str(tmp_path / 'trace.spiv')
    _run(capsys, 'simulate', '--matrix', matrix, '--image', scene, '--out', trace,
         '--stride', '2000')
    status, payload = _run(capsys, 'reconstruct', '--matrix', matrix, '--trace', trace,
                           '--out', str(tmp_path / 'r.png'))
    assert status == 4
    assert payload['error'] == 'Too few samples'


def test_usage_error_exit_code(capsys):
    assert main(['gen-matrix', '--degree', 'eight']) == 2


def test_run_with_wrong_value_type(tmp_path, capsys):
    status, payload = _run(capsys, 'run', '--config', DEMO, '--outdir', str(tmp_path),
                           '--set', 'sampling.stride="2"')
    assert status == 2
    assert payload['error'] == 'Invalid configuration'
    assert 'sampling.stride' in payload['message']


def test_negative_gain_is_rejected(workspace, capsys):
    tmp_path, matrix, scene = workspace
    status, payload = _run(capsys, 'simulate', '--matrix', matrix, '--image', scene,
                           '--out', str(tmp_path / 'trace.spiv'), '--gain=-1')
    assert status == 2
    assert payload['error'] == 'Invalid parameter'
