"""Unit tests for the storage package and the rendered fixtures

Image, matrix and trace files round-trip and reject corruption; fixtures
are reproducible byte for byte.
"""
import json

import numpy as np
import pytest
from PIL import Image

from services.domain import GrayImage, MeasurementModel, SamplingPlan
from services.errors import CorruptFile, IoError, UnsupportedFormat
from services.fixtures import UsafElement, fixture_image, make_fixtures, render_silhouette
from services.forward import measure_planned
from services.mls import smatrix
from storage.formats import read_matrix, read_trace, write_matrix, write_trace
from storage.images import image_size, load_image, save_image, save_mask, save_rgb
from storage.reports import read_report, sidecar_path, write_report, write_sidecar


def _levels(shape=(12, 9), depth=8, seed=0):
    top = 255 if depth == 8 else 65535
    values = np.random.default_rng(seed).integers(0, top + 1, size=shape)
    return GrayImage(values / top)


@pytest.mark.parametrize('suffix', ['.png', '.pgm'])
def test_8_bit_round_trip(tmp_path, suffix):
    img = _levels()
    path = str(tmp_path / f'scene{suffix}')
    save_image(img, path)
    back = load_image(path)
    assert back.shape == img.shape
    assert np.allclose(back.pixels, img.pixels, atol=1e-12)
    assert image_size(path) == (12, 9)


@pytest.mark.parametrize('suffix', ['.png', '.pgm'])
def test_16_bit_round_trip(tmp_path, suffix):
    img = _levels(depth=16)
    path = str(tmp_path / f'scene16{suffix}')
    save_image(img, path, depth=16)
    assert np.allclose(load_image(path).pixels, img.pixels, atol=1e-12)


def test_export_clamps_out_of_range(tmp_path):
    path = str(tmp_path / 'clamped.png')
    save_image(GrayImage(np.array([[-0.5, 0.5, 1.5]])), path)
    assert load_image(path).pixels.tolist() == [[0.0, 128 / 255, 1.0]]


def test_colour_input_reduced_to_luma(tmp_path):
    rgb = np.zeros((2, 2, 3), dtype=np.uint8)
    rgb[..., 0] = 255
    path = str(tmp_path / 'red.png')
    Image.fromarray(rgb).save(path)
    assert load_image(path).pixels[0, 0] == pytest.approx(76 / 255, abs=1 / 255)


def test_truncated_image_is_corrupt(tmp_path):
    path = tmp_path / 'cut.png'
    save_image(_levels((64, 64)), str(path))
    data = path.read_bytes()
    path.write_bytes(data[:len(data) // 2])
    with pytest.raises(CorruptFile):
        load_image(str(path))


def test_image_errors(tmp_path):
    with pytest.raises(UnsupportedFormat):
        load_image(str(tmp_path / 'scene.tiff'))
    with pytest.raises(IoError):
        load_image(str(tmp_path / 'absent.png'))
    with pytest.raises(UnsupportedFormat):
        save_rgb(np.zeros((2, 2, 3)), str(tmp_path / 'colour.pgm'))


def test_mask_is_black_and_white(tmp_path):
    path = str(tmp_path / 'edges.png')
    save_mask(np.array([[True, False], [False, True]]), path)
    assert load_image(path).pixels.tolist() == [[1.0, 0.0], [0.0, 1.0]]


def test_matrix_round_trip(tmp_path):
    m = smatrix(10)
    path = str(tmp_path / 'matrix.spi1')
    write_matrix(m, path)
    back = read_matrix(path)
    assert (back.degree, back.p, back.q) == (10, 31, 33)
    assert np.array_equal(back.first_row.bits, m.first_row.bits)


def test_matrix_corruption_detected(tmp_path):
    path = tmp_path / 'matrix.spi1'
    write_matrix(smatrix(8), str(path))
    data = bytearray(path.read_bytes())

    flipped = bytearray(data)
    flipped[-5] ^= 0x01
    path.write_bytes(bytes(flipped))
    with pytest.raises(CorruptFile):
        read_matrix(str(path))

    path.write_bytes(bytes(data[:-3]))
    with pytest.raises(CorruptFile):
        read_matrix(str(path))

    path.write_bytes(b'XXXX' + bytes(data[4:]))
    with pytest.raises(CorruptFile):
        read_matrix(str(path))


def test_trace_round_trip(tmp_path):
    m = smatrix(8)
    img = GrayImage(np.random.default_rng(1).random((m.p, m.q)))
    model = MeasurementModel(noise_sigma=0.1, adc_bits=12, rng_seed=9)
    trace = measure_planned(m, img, model, SamplingPlan(m.n, 3))
    path = str(tmp_path / 'trace.spiv')
    write_trace(trace, path)

    back = read_trace(path)
    assert np.array_equal(back.samples, trace.samples)
    assert np.array_equal(back.missing, trace.missing)
    assert back.dwell_T == trace.dwell_T
    assert back.plan.stride == 3
    assert back.model.adc_bits == 12 and back.model.adc_enabled
    assert back.model.rng_seed == 9


def test_trace_without_adc(tmp_path):
    m = smatrix(4)
    trace = measure_planned(m, GrayImage(np.ones((m.p, m.q))),
                            MeasurementModel(adc_enabled=False), SamplingPlan(m.n))
    path = str(tmp_path / 'trace.spiv')
    write_trace(trace, path)
    assert not read_trace(path).model.adc_enabled


def test_trace_corruption_detected(tmp_path):
    m = smatrix(4)
    trace = measure_planned(m, GrayImage(np.ones((m.p, m.q))), MeasurementModel(), SamplingPlan(m.n))
    path = tmp_path / 'trace.spiv'
    write_trace(trace, str(path))
    data = path.read_bytes()

    path.write_bytes(data[:-1])
    with pytest.raises(CorruptFile):
        read_trace(str(path))

    bad_flag = bytearray(data)
    bad_flag[-1] = 7
    path.write_bytes(bytes(bad_flag))
    with pytest.raises(CorruptFile):
        read_trace(str(path))

    with pytest.raises(IoError):
        read_trace(str(tmp_path / 'absent.spiv'))


def test_reports_are_sorted_and_stamped(tmp_path):
    path = str(tmp_path / 'out' / 'report.json')
    write_report({'b': np.float64(1.5), 'a': np.arange(3)}, path)
    text = open(path).read()
    assert text.index('"a"') < text.index('"b"')
    report = read_report(path)
    assert report['a'] == [0, 1, 2]
    assert report['schema'] == 'spi-kit-report/1'


def test_sidecar_shares_the_stem(tmp_path):
    artifact = str(tmp_path / 'recon.png')
    assert sidecar_path(artifact) == str(tmp_path / 'recon.json')
    write_sidecar(artifact, {'n': 255})
    assert read_report(str(tmp_path / 'recon.json'))['n'] == 255


def test_corrupt_report(tmp_path):
    path = tmp_path / 'report.json'
    path.write_text('{not json')
    with pytest.raises(CorruptFile):
        read_report(str(path))


def test_usaf_frequencies():
    assert UsafElement(0, 1).lp_per_mm == 1.0
    assert UsafElement(2, 1).lp_per_mm == 4.0
    assert UsafElement(5, 3).lp_per_mm == pytest.approx(2 ** (5 + 2 / 6))
    assert UsafElement(2, 1).bar_width_um == pytest.approx(125.0)


def test_fixtures_are_reproducible(tmp_path):
    first = make_fixtures(str(tmp_path / 'a'), seed=4)
    second = make_fixtures(str(tmp_path / 'b'), seed=4)
    for name in ('usaf', 'kangaroo', 'speckle', 'metadata'):
        assert open(first[name], 'rb').read() == open(second[name], 'rb').read()
    assert load_image(first['usaf']).shape == (768, 768)

    metadata = json.load(open(first['metadata']))
    kangaroo = metadata['fixtures']['kangaroo']
    assert kangaroo['area_fraction'] == pytest.approx(render_silhouette().pixels.mean())
    assert 0.05 < kangaroo['area_fraction'] < 0.5
    assert len(metadata['fixtures']['usaf']['elements']) == 30


def test_speckle_depends_on_seed():
    a = fixture_image('speckle', (32, 32), seed=1)
    b = fixture_image('speckle', (32, 32), seed=2)
    assert not np.array_equal(a.pixels, b.pixels)
    assert a.pixels.min() >= 0.0 and a.pixels.max() <= 1.0
