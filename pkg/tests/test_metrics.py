"""Unit tests for services.metrics

PSNR and SSIM against closed forms and a direct windowed loop, and the
effective-bits count across resolutions.
"""
import numpy as np
import pytest

from services.domain import GrayImage
from services.errors import ShapeMismatch, TooSmall
from services.fixtures import fixture_image
from services.metrics import effective_bits, psnr, quality_report, ssim
from services.mls import smatrix
from services.recon import place_on_field


def _gaussian_window(size=11, sigma=1.5):
    r = np.arange(size) - size // 2
    g = np.exp(-0.5 * (r / sigma) ** 2)
    g /= g.sum()
    return np.outer(g, g)


def _loop_ssim(x, y, size=11, sigma=1.5, c1=0.01 ** 2, c2=0.03 ** 2):
    w = _gaussian_window(size, sigma)
    values = []
    for r in range(x.shape[0] - size + 1):
        for c in range(x.shape[1] - size + 1):
            a = x[r:r + size, c:c + size]
            b = y[r:r + size, c:c + size]
            mu_a, mu_b = (w * a).sum(), (w * b).sum()
            var_a = (w * a * a).sum() - mu_a ** 2
            var_b = (w * b * b).sum() - mu_b ** 2
            cov = (w * a * b).sum() - mu_a * mu_b
            values.append(((2 * mu_a * mu_b + c1) * (2 * cov + c2))
                          / ((mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)))
    return float(np.mean(values))


def test_psnr_of_identical_images_is_capped():
    img = GrayImage(np.random.default_rng(0).random((8, 8)))
    assert psnr(img, img) == 99.0


def test_psnr_known_value():
    a = GrayImage(np.zeros((10, 10)))
    b = GrayImage(np.full((10, 10), 0.1))
    assert psnr(a, b) == pytest.approx(20.0)
    assert psnr(b, a) == pytest.approx(20.0)


def test_psnr_matches_loop():
    rng = np.random.default_rng(3)
    x, y = rng.random((8, 8)), rng.random((8, 8))
    total = 0.0
    for r in range(8):
        for c in range(8):
            total += (x[r, c] - y[r, c]) ** 2
    expected = 10 * np.log10(1.0 / (total / 64))
    assert psnr(GrayImage(x), GrayImage(y)) == pytest.approx(expected, abs=1e-10)


def test_psnr_never_exceeds_cap():
    a = GrayImage(np.zeros((4, 4)))
    b = GrayImage(np.full((4, 4), 1e-9))
    assert psnr(a, b) == 99.0


def test_shape_mismatch():
    with pytest.raises(ShapeMismatch):
        psnr(GrayImage(np.zeros((4, 4))), GrayImage(np.zeros((4, 5))))


def test_ssim_of_identical_images_is_one():
    img = fixture_image('usaf', (64, 64))
    assert ssim(img, img) == 1.0


def test_ssim_is_symmetric():
    rng = np.random.default_rng(1)
    a, b = GrayImage(rng.random((32, 40))), GrayImage(rng.random((32, 40)))
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-12)


def test_ssim_of_constants_closed_form():
    a = GrayImage(np.full((20, 20), 0.2))
    b = GrayImage(np.full((20, 20), 0.6))
    c1 = 0.01 ** 2
    expected = (2 * 0.2 * 0.6 + c1) / (0.2 ** 2 + 0.6 ** 2 + c1)
    assert ssim(a, b) == pytest.approx(expected, rel=1e-9)


def test_ssim_matches_window_loop():
    rng = np.random.default_rng(2)
    x = rng.random((16, 16))
    y = np.clip(x + 0.1 * rng.standard_normal((16, 16)), 0.0, 1.0)
    assert ssim(GrayImage(x), GrayImage(y)) == pytest.approx(_loop_ssim(x, y), abs=1e-9)


def test_ssim_too_small():
    with pytest.raises(TooSmall):
        ssim(GrayImage(np.zeros((10, 30))), GrayImage(np.zeros((10, 30))))


def test_ssim_of_inverted_target_is_low():
    img = fixture_image('usaf', (128, 128))
    inverted = GrayImage(1.0 - img.pixels)
    assert ssim(img, inverted) < 0.05


def test_constant_scene_has_one_level():
    m = smatrix(8)
    count, bits = effective_bits(m, GrayImage(np.full((m.p, m.q), 0.5)))
    assert count == 1
    assert bits == 0.0


def test_effective_bits_grow_with_resolution():
    usaf = fixture_image('usaf')
    results = []
    for degree, factor in ((10, 48), (12, 24), (14, 12), (16, 6)):
        m = smatrix(degree)
        size = usaf.height // factor
        scene = usaf.block_downsample(factor)
        scene = GrayImage(np.round(scene.pixels * 255) / 255)
        assert scene.shape == (size, size)
        count, bits = effective_bits(m, place_on_field(scene, m.p, m.q))
        results.append(bits)
    assert all(b > a for a, b in zip(results, results[1:]))


def test_quality_report():
    img = fixture_image('speckle', (32, 32))
    report = quality_report(img, img)
    assert report.psnr_db == 99.0
    assert report.ssim == 1.0
    assert report.as_dict()['n_unique_levels'] is None


def test_quality_report_with_matrix():
    m = smatrix(10)
    img = fixture_image('speckle', (m.p, m.q))
    report = quality_report(img, img, m)
    assert report.n_unique_levels > 1
    assert report.effective_bits == pytest.approx(np.log2(report.n_unique_levels))
