import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sonostyle.imageio import save_pnm
from sonostyle.preprocess import (BG, FG, UNKNOWN, ContentPreparer, Matte, Trimap, add_speckle_noise,
                                  composite_foreground, gaussian_smooth, gaussian_taps, prepare_content,
                                  resize_image, solve_alpha_matte, to_grayscale)

images = arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(2, 12)), elements=st.floats(0, 1))


def strip_trimap(width=34, height=3):
    labels = np.full((height, width), UNKNOWN)
    labels[:, 0] = FG
    labels[:, -1] = BG
    return Trimap(labels)


# -- grayscale -----------------------------------------------------------------

def test_grayscale_examples():
    assert to_grayscale(np.ones((1, 1, 3)))[0, 0] == pytest.approx(1.0)
    assert to_grayscale(np.array([[[1.0, 0, 0]]]))[0, 0] == pytest.approx(0.299)
    g = np.random.default_rng(0).random((3, 4))
    assert np.array_equal(to_grayscale(g), g)


# -- matting -------------------------------------------------------------------

def test_matte_without_unknown_is_fg_mask():
    labels = np.array([[FG, BG], [BG, FG]])
    m = solve_alpha_matte(Trimap(labels))
    assert np.array_equal(m.alpha, [[1, 0], [0, 1]])
    assert m.converged


def test_matte_all_fg():
    assert np.array_equal(solve_alpha_matte(Trimap(np.full((4, 4), FG))).alpha, np.ones((4, 4)))


def test_matte_strip_is_linear_ramp():
    m = solve_alpha_matte(strip_trimap(), tol=1e-6)
    x = np.arange(34)
    assert m.converged
    assert np.abs(m.alpha - (1 - x / 33)).max() < 1e-3


def test_matte_requires_both_boundaries():
    labels = np.full((3, 3), UNKNOWN)
    labels[0, 0] = FG
    with pytest.raises(ValueError):
        solve_alpha_matte(Trimap(labels))


def test_matte_non_convergence_flag():
    m = solve_alpha_matte(strip_trimap(), tol=1e-12, max_iter=5)
    assert not m.converged and m.iterations == 5


@settings(max_examples=30, deadline=None)
@given(arrays(np.int8, (6, 7), elements=st.sampled_from([BG, UNKNOWN, FG])))
def test_matte_maximum_principle(labels):
    labels[0, 0], labels[-1, -1] = FG, BG
    m = solve_alpha_matte(Trimap(labels), tol=1e-8)
    assert np.all((m.alpha >= 0) & (m.alpha <= 1))
    assert np.all(m.alpha[labels == FG] == 1) and np.all(m.alpha[labels == BG] == 0)


def test_trimap_from_pgm(tmp_path):
    save_pnm(np.array([[1.0, 0.0, 0.5]]), tmp_path / "t.pgm")
    assert Trimap.load(tmp_path / "t.pgm").labels.tolist() == [[FG, BG, UNKNOWN]]


# -- compositing ---------------------------------------------------------------

def test_composite_examples():
    img = np.random.default_rng(1).random((3, 3))
    assert np.array_equal(composite_foreground(img, Matte(np.ones((3, 3)))), img)
    assert np.array_equal(composite_foreground(img, Matte(np.zeros((3, 3)))), np.zeros((3, 3)))
    assert composite_foreground(np.array([[0.8]]), Matte(np.array([[0.5]])))[0, 0] == pytest.approx(0.4)
    with pytest.raises(ValueError):
        composite_foreground(img, Matte(np.ones((2, 3))))


@given(images)
def test_composite_idempotent_for_binary_matte(img):
    alpha = (np.indices(img.shape).sum(0) % 2).astype(float)
    once = composite_foreground(img, Matte(alpha))
    assert np.array_equal(composite_foreground(once, Matte(alpha)), once)


# -- smoothing -----------------------------------------------------------------

def test_taps_normalized_symmetric():
    t = gaussian_taps(1.7)
    assert len(t) == 2 * math.ceil(3 * 1.7) + 1
    assert abs(t.sum() - 1) < 1e-12
    assert np.array_equal(t, t[::-1])


def test_smooth_identity_and_constant():
    img = np.random.default_rng(2).random((5, 6))
    assert np.array_equal(gaussian_smooth(img, 0), img)
    assert np.allclose(gaussian_smooth(np.full((7, 5), 0.3), 2.5), 0.3, atol=1e-15)
    with pytest.raises(ValueError):
        gaussian_smooth(img, -1)


def test_smooth_impulse_matches_direct_2d_kernel():
    img = np.zeros((9, 9))
    img[4, 4] = 1.0
    out = gaussian_smooth(img, 1.0)
    # direct 2-D Gaussian kernel, radius 3, evaluated independently
    y, x = np.mgrid[-3:4, -3:4]
    k2 = np.exp(-(x ** 2 + y ** 2) / 2.0)
    k2 /= k2.sum()
    assert np.allclose(out[1:8, 1:8], k2, atol=1e-15)
    taps = gaussian_taps(1.0)
    assert out[4, 4] == pytest.approx(taps[3] ** 2, abs=1e-15)


@given(images, st.floats(0.3, 6.0))
def test_smooth_preserves_mean_and_range(img, sigma):
    out = gaussian_smooth(img, sigma)
    assert abs(out.mean() - img.mean()) < 1e-6
    assert out.min() >= img.min() and out.max() <= img.max()


# -- noise ---------------------------------------------------------------------

def test_speckle_examples():
    img = np.full((4, 4), 0.5)
    assert np.array_equal(add_speckle_noise(img, 0.0, 1), img)
    assert np.array_equal(add_speckle_noise(img, 0.2, 7), add_speckle_noise(img, 0.2, 7))
    assert not np.array_equal(add_speckle_noise(img, 0.2, 7), add_speckle_noise(img, 0.2, 8))


def test_speckle_relative_std():
    img = np.full((256, 256), 0.5)
    out = add_speckle_noise(img, 0.1, 2024)
    rel = out / img - 1
    assert abs(rel.std() - 0.1) < 0.01
    assert out.min() >= 0 and out.max() <= 1


# -- full pipeline -------------------------------------------------------------

def test_prepare_identity_case():
    img = np.random.default_rng(3).random((6, 5))
    assert np.array_equal(prepare_content(img, None, sigma=0, target=(6, 5)), img)


def test_prepare_stagewise_oracle():
    rng = np.random.default_rng(4)
    rgb = np.ones((12, 12, 3))
    rgb[3:9, 2:10] = rng.random((6, 8, 3)) * 0.5
    tri = Trimap(np.full((12, 12), FG))
    out = prepare_content(rgb, tri, sigma=1.0, target=(8, 8))
    gray = rgb @ np.array([0.299, 0.587, 0.114])
    expected = resize_image(gaussian_smooth(gray, 1.0), 8, 8)
    assert np.allclose(out, expected, atol=1e-15)
    assert np.array_equal(out, prepare_content(rgb, tri, sigma=1.0, target=(8, 8)))


def test_prepare_zero_matte_warns():
    labels = np.full((5, 5), BG)
    with pytest.warns(UserWarning, match="zero everywhere"):
        out = prepare_content(np.full((5, 5), 0.7), Trimap(labels), sigma=0.5, target=(5, 5))
    assert np.array_equal(out, np.zeros((5, 5)))


def test_content_preparer_estimator():
    imgs = [np.random.default_rng(i).random((10, 10, 3)) for i in range(3)]
    prep = ContentPreparer(sigma=0.5, target_size=8, noise_intensity=0.1, seed=5).fit()
    out = prep.transform(imgs)
    assert len(out) == 3 and all(o.shape == (8, 8) for o in out)
    assert prep.get_params()["target_size"] == 8
    again = ContentPreparer(sigma=0.5, target_size=8, noise_intensity=0.1, seed=5).fit_transform(imgs)
    assert all(np.array_equal(a, b) for a, b in zip(out, again))
