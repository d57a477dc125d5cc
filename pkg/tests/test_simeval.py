import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sonostyle.simeval import (SimilarityReport, average_similarity, cosine_similarity, digest_hex,
                               evaluate_pair, fmt4, hash_similarity, phash, write_similarity_csv)


def img(seed, side=48):
    return np.random.default_rng(seed).random((side, side))


def smooth_img(seed, side=256):
    from sonostyle.synthetic import natural_image
    return natural_image(seed, side)


def test_rounding_half_up():
    assert fmt4(0.76605) == "0.7661"
    assert fmt4(0.77875) == "0.7788"
    assert fmt4((0.6962 + 0.8282) / 2) == "0.7622"
    assert fmt4(1.0) == "1.0000"


def test_cosine_examples():
    a = img(0)
    assert cosine_similarity(a, a) == pytest.approx(1.0, abs=1e-12)
    assert cosine_similarity(a, 2 * a) == pytest.approx(1.0, abs=1e-12)
    assert cosine_similarity(a, 1 - a) == pytest.approx(-1.0, abs=1e-12)
    with pytest.warns(UserWarning):
        assert cosine_similarity(np.full((16, 16), 0.3), a) == 0.0
    with pytest.raises(ValueError):
        cosine_similarity(a, a, side=4)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(0, 2 ** 31))
def test_cosine_symmetric(s1, s2):
    a, b = img(s1, 20), img(s2, 20)
    assert cosine_similarity(a, b, 16) == pytest.approx(cosine_similarity(b, a, 16), abs=1e-12)


def test_phash_determinism_and_constant():
    a = smooth_img(1)
    assert np.array_equal(phash(a), phash(a))
    h = phash(a)
    assert h.shape == (64,) and not h[63]
    assert not phash(np.full((40, 40), 0.6)).any()


def test_phash_affine_invariance():
    a = 0.1 + 0.35 * smooth_img(2)
    assert np.array_equal(phash(a), phash(2 * a + 0.1))


def test_phash_bits_against_cosine_sum_oracle():
    from sonostyle.preprocess import resize_image
    a = smooth_img(3, 64)
    g = resize_image(a, 32, 32)
    n = np.arange(32)
    basis = np.sqrt(2 / 32) * np.cos(np.pi * (2 * n[None, :] + 1) * n[:, None] / 64)
    basis[0] /= np.sqrt(2)
    coeffs = (basis @ g @ basis.T)[:8, :8].ravel()[1:]
    expected = coeffs > np.median(coeffs)
    assert np.array_equal(phash(a)[:63], expected)


def test_phash_single_pixel_perturbation():
    a = smooth_img(4)
    b = a.copy()
    b[100, 100] += 1 / 255
    assert np.count_nonzero(phash(a) ^ phash(b)) <= 2


def test_hash_similarity_examples():
    h = np.random.default_rng(5).integers(0, 2, 64).astype(bool)
    assert hash_similarity(h, h) == 1.0
    assert hash_similarity(h, ~h) == 0.0
    g = h.copy()
    g[:19] = ~g[:19]
    assert hash_similarity(h, g) == 0.703125
    assert fmt4(hash_similarity(h, g)) == "0.7031"
    with pytest.raises(ValueError):
        hash_similarity(h[:10], h[:10])


@settings(max_examples=50)
@given(*[st.lists(st.booleans(), min_size=64, max_size=64) for _ in range(3)])
def test_hash_distance_is_metric(a, b, c):
    d = lambda x, y: 1 - hash_similarity(x, y)
    assert hash_similarity(a, b) == hash_similarity(b, a)
    assert d(a, c) <= d(a, b) + d(b, c) + 1e-15


def test_average_similarity_table_values():
    assert fmt4(average_similarity(0.8290, 0.7031)) == "0.7661"
    assert fmt4(average_similarity(0.6962, 0.8282)) == "0.7622"
    assert fmt4(average_similarity(0.8388, 0.7187)) == "0.7788"
    assert average_similarity(-0.4, 0.5) == 0.25
    with pytest.raises(ValueError):
        average_similarity(1.5, 0.5)


def test_evaluate_pair_identity():
    a = smooth_img(6)
    r = evaluate_pair(a, a, "p0")
    assert (r.cosine, r.phash, r.average) == pytest.approx((1.0, 1.0, 1.0), abs=1e-12)


def test_noise_pairs_phash_near_half():
    sims = [hash_similarity(phash(img(2 * i, 64)), phash(img(2 * i + 1, 64))) for i in range(100)]
    assert sum(0.30 <= s <= 0.70 for s in sims) >= 99


def test_report_invariant_and_csv(tmp_path):
    rows = [SimilarityReport.from_metrics(name, c, p) for name, c, p in
            [("Crucian carp", 0.8290, 0.7031), ("Carp", 0.6962, 0.8282), ("Barbel", 0.8388, 0.7187)]]
    for r in rows:
        assert r.average == pytest.approx((max(r.cosine, 0) + r.phash) / 2, abs=1e-9)
    write_similarity_csv(rows, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "pair_id,cosine,phash,average"
    assert lines[1:] == ["Crucian carp,0.8290,0.7031,0.7661", "Carp,0.6962,0.8282,0.7622",
                         "Barbel,0.8388,0.7187,0.7788"]


def test_digest_hex_length():
    assert len(digest_hex(phash(img(7)))) == 16
