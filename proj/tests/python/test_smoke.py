"""Smoke tests for the _cfdiff pybind11 module.

The module is loaded from the build tree via the CFDIFF_MODULE_DIR
environment variable (set by ctest); an installed module works too.
"""

import os
import sys

import numpy as np
import pytest

if "CFDIFF_MODULE_DIR" in os.environ:
    sys.path.insert(0, os.environ["CFDIFF_MODULE_DIR"])

cf = pytest.importorskip("_cfdiff")


def test_ssim_identity():
    x = np.random.default_rng(0).uniform(-1, 1, (32, 32))
    assert cf.ssim(x, x) == pytest.approx(1.0)


def test_psnr_cap_and_offset():
    x = np.zeros((16, 16))
    assert cf.psnr(x, x) == 80.0
    y = x + 0.5
    assert cf.psnr(x, y, 1.0) == pytest.approx(20.0 * np.log10(2.0))


def test_synth_clean_shape_and_determinism():
    a = cf.synth_clean(7, 64)
    b = cf.synth_clean(7, 64)
    assert a.shape == (64, 64, 3)
    assert np.array_equal(a, b)
    assert a.min() >= -1.0 and a.max() <= 1.0


def test_detectors():
    img = cf.synth_clean(3, 128)
    assert set(cf.detector_names()) == {"grid", "variance", "residual"}
    for name in cf.detector_names():
        h = cf.detect(name, img)
        assert h.shape == (128, 128)
        assert h.min() >= 0.0 and h.max() <= 1.0


def test_forward_sample_marginal():
    x0 = cf.synth_clean(5, 64)
    eps = np.random.default_rng(1).standard_normal(x0.shape)
    xt = cf.forward_sample(x0, 1, eps, 10, 0.1, 0.1)
    expected = np.sqrt(0.9) * x0 + np.sqrt(0.1) * eps
    np.testing.assert_allclose(xt, expected, atol=1e-12)


def test_median_purify():
    img = cf.synth_clean(9, 64)
    out = cf.median_purify(img, 3)
    assert out.shape == img.shape


def test_train_purify_save_load_roundtrip(tmp_path):
    rng = np.random.default_rng(2)
    images = [rng.uniform(-1, 1, (32, 32, 3)) for _ in range(2)]
    model = cf.train_model(images, T=50, iterations=2, batch_size=2, seed=4)
    assert model.total_steps == 50
    assert model.channels == 3

    x = images[0]
    out = model.purify(x, t_star=5, seed=9)
    assert out.shape == x.shape
    assert np.abs(out).max() <= 1.0
    # same seed -> identical output
    np.testing.assert_array_equal(out, model.purify(x, t_star=5, seed=9))
    # t_star = 0 is the identity
    np.testing.assert_array_equal(model.purify(x, t_star=0), x)

    path = str(tmp_path / "m.cfdn")
    model.save(path)
    loaded = cf.load_model(path)
    np.testing.assert_array_equal(loaded.purify(x, t_star=5, seed=9), out)


def test_guided_purify_runs():
    img = cf.synth_clean(11, 64)
    model = cf.train_model([img], T=20, iterations=0, seed=1)
    out = model.purify(img, t_star=3, guided=True, scale=100.0, metric="mse", seed=2)
    assert out.shape == img.shape
