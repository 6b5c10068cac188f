import numpy as np
import pytest

from giclassify import descriptors as D
from giclassify.imaging import RGB, ImageTensor, convert, flip_h, rotate
from giclassify.descriptors.color_layout import ZIGZAG, _cell_means
from giclassify.imaging import gray_plane
import oracles
from conftest import (checkerboard, diagonal_step, rgb_image, solid,
                      vertical_stripes)


def noise_image(seed: int, h: int = 48, w: int = 48) -> ImageTensor:
    rng = np.random.default_rng(seed)
    return rgb_image(rng.random((h, w, 3)))


class TestTamura:
    def test_constant_image(self):
        out = D.tamura(solid(0.5, 0.5, 0.5, 64))
        assert out.shape == (18,)
        assert out[1] == 0.0
        np.testing.assert_array_equal(out[2:], np.zeros(16))

    def test_stripes_directionality_peak(self):
        img = vertical_stripes(64, period=8)
        out = D.tamura(img)
        hist = out[2:]
        # Horizontal gradients -> theta = 0 -> first bin.
        assert hist.argmax() == 0
        assert hist[0] > 0.9
        ref = oracles.directionality_reference(gray_plane(img))
        np.testing.assert_allclose(hist, ref, atol=1e-12)

    def test_checkerboard_coarseness_ordering(self):
        fine = checkerboard(64, cell=2)
        coarse = checkerboard(64, cell=16)
        c_fine = oracles.coarseness_reference(gray_plane(fine))
        c_coarse = oracles.coarseness_reference(gray_plane(coarse))
        assert c_coarse > c_fine
        assert D.tamura(fine)[0] == pytest.approx(c_fine, abs=1e-9)
        assert D.tamura(coarse)[0] == pytest.approx(c_coarse, abs=1e-9)

    def test_coarseness_matches_reference_on_noise(self):
        img = noise_image(21)
        got = D.tamura(img)[0]
        ref = oracles.coarseness_reference(gray_plane(img))
        assert got == pytest.approx(ref, abs=1e-9)

    def test_directionality_matches_reference_on_noise(self):
        img = noise_image(22)
        got = D.tamura(img)[2:]
        ref = oracles.directionality_reference(gray_plane(img))
        np.testing.assert_allclose(got, ref, atol=1e-12)

    def test_contrast_formula(self):
        img = noise_image(23)
        gray = gray_plane(img)
        sigma = gray.std()
        mu4 = np.mean((gray - gray.mean()) ** 4)
        expected = sigma / (mu4 / sigma ** 4) ** 0.25
        assert D.tamura(img)[1] == pytest.approx(expected, rel=1e-12)

    def test_contrast_flip_invariant(self):
        img = noise_image(24)
        assert D.tamura(img)[1] == pytest.approx(D.tamura(flip_h(img))[1],
                                                 rel=1e-12)

    def test_undersized_image(self):
        with pytest.raises(ValueError, match="32x32"):
            D.tamura(solid(0.5, 0.5, 0.5, 31))


class TestColorLayout:
    def test_uniform_midgray(self):
        out = D.color_layout(solid(0.5, 0.5, 0.5, 64))
        # Orthonormal DCT of a constant: DC = 8 * mean, every AC exactly 0.
        assert out[0] == pytest.approx(4.0, abs=1e-12)
        np.testing.assert_array_equal(out[1:6], np.zeros(5))
        assert out[6] == pytest.approx(4.0, abs=1e-12)
        np.testing.assert_array_equal(out[7:9], np.zeros(2))
        assert out[9] == pytest.approx(4.0, abs=1e-12)
        np.testing.assert_array_equal(out[10:12], np.zeros(2))

    def test_half_black_half_white(self):
        plane = np.zeros((64, 64))
        plane[:, 32:] = 1.0
        img = rgb_image(np.stack([plane] * 3, axis=-1))
        out = D.color_layout(img)
        assert abs(out[1]) > 0.1          # first horizontal AC of Y
        assert out[2] == pytest.approx(0.0, abs=1e-9)   # first vertical AC
        assert out[3] == pytest.approx(0.0, abs=1e-9)   # second vertical AC

    def test_symmetric_image_odd_horizontal_acs_vanish(self):
        rng = np.random.default_rng(31)
        half = rng.random((40, 20, 3))
        arr = np.concatenate([half, half[:, ::-1]], axis=1)
        out = D.color_layout(rgb_image(arr))
        # Zigzag positions 1 and 4 of Y are (u=0,v=1) and (u=1,v=1): odd
        # horizontal frequency, which cancels for mirror-symmetric input.
        assert out[1] == pytest.approx(0.0, abs=1e-9)
        assert out[4] == pytest.approx(0.0, abs=1e-9)

    def test_matches_bruteforce_dct(self):
        img = noise_image(32, 40, 56)
        got = D.color_layout(img)
        ycbcr = convert(img, "ycbcr")
        expected = []
        for channel, keep in zip(ycbcr.planes, (6, 3, 3)):
            coeffs = oracles.dct_8x8_reference(_cell_means(channel)).ravel()
            expected.extend(coeffs[list(ZIGZAG[:keep])])
        np.testing.assert_allclose(got, np.array(expected), atol=1e-10)

    def test_undersized(self):
        with pytest.raises(ValueError):
            D.color_layout(solid(0.1, 0.1, 0.1, 7))


class TestEdgeHistogram:
    def test_constant_image(self):
        out = D.edge_histogram(solid(0.3, 0.3, 0.3, 64))
        np.testing.assert_array_equal(out, np.zeros(80))

    def test_vertical_stripes_dominate_vertical_bin(self):
        # Period 6 keeps stripe boundaries out of phase with the 2px block
        # grid so blocks actually straddle edges.
        img = vertical_stripes(64, period=6)
        out = D.edge_histogram(img)
        vertical = out[0::5].sum()
        assert vertical > 0.5 * out.sum()
        for other in range(1, 5):
            assert vertical >= out[other::5].sum()
        ref = oracles.edge_histogram_reference(gray_plane(img))
        np.testing.assert_allclose(out, ref, atol=1e-12)

    def test_rotation_swaps_vertical_and_horizontal(self):
        img = vertical_stripes(64, period=6)
        rotated = rotate(img, 90.0)
        out = D.edge_histogram(img)
        out_rot = D.edge_histogram(rotated)
        assert out[0::5].sum() > 0
        assert out[0::5].sum() == pytest.approx(out_rot[1::5].sum(), abs=1e-9)
        assert out[1::5].sum() == pytest.approx(out_rot[0::5].sum(), abs=1e-9)

    def test_matches_reference_on_structured_noise(self):
        rng = np.random.default_rng(41)
        blocks = rng.random((8, 8, 3))
        arr = np.kron(blocks, np.ones((8, 8, 1)))
        img = rgb_image(arr)
        got = D.edge_histogram(img)
        ref = oracles.edge_histogram_reference(gray_plane(img))
        np.testing.assert_allclose(got, ref, atol=1e-12)

    def test_values_in_unit_interval(self):
        out = D.edge_histogram(noise_image(42, 80, 80))
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_undersized(self):
        with pytest.raises(ValueError):
            D.edge_histogram(solid(0.5, 0.5, 0.5, 15))


class TestAutoColorCorrelogram:
    def test_single_color_image(self):
        out = D.auto_color_correlogram(solid(1.0, 0.0, 0.0, 16))
        nonzero = np.flatnonzero(out)
        assert len(nonzero) == 4
        np.testing.assert_array_equal(out[nonzero], np.ones(4))
        color = nonzero[0] // 4
        assert np.array_equal(nonzero, color * 4 + np.arange(4))

    def test_two_color_stripes_exact(self):
        img = vertical_stripes(8, period=2, low=0.0, high=1.0)
        got = D.auto_color_correlogram(img)
        ref = oracles.correlogram_reference(img)
        np.testing.assert_allclose(got, ref, atol=1e-12)
        # d=1: each pixel has in-row neighbors of the other color, so the
        # same-color probability is strictly below 1.
        for color in np.unique(
                __import__("giclassify.descriptors.correlogram",
                           fromlist=["quantize_hsv"]).quantize_hsv(img)):
            assert got[color * 4] < 1.0

    def test_absent_color_is_zero(self):
        img = solid(0.0, 0.0, 0.0, 12)
        out = D.auto_color_correlogram(img)
        from giclassify.descriptors.correlogram import quantize_hsv
        color = int(quantize_hsv(img)[0, 0])
        mask = np.ones(256, dtype=bool)
        mask[color * 4:color * 4 + 4] = False
        np.testing.assert_array_equal(out[mask], np.zeros(252))

    def test_matches_reference_on_noise(self):
        img = noise_image(51, 12, 15)
        got = D.auto_color_correlogram(img)
        ref = oracles.correlogram_reference(img)
        np.testing.assert_allclose(got, ref, atol=1e-12)

    def test_flip_invariance(self):
        img = noise_image(52, 24, 24)
        a = D.auto_color_correlogram(img)
        b = D.auto_color_correlogram(flip_h(img))
        np.testing.assert_allclose(a, b, atol=1e-12)


class TestPhog:
    def test_constant_image(self):
        out = D.phog(solid(0.7, 0.7, 0.7, 32))
        np.testing.assert_array_equal(out, np.zeros(168))

    def test_level_partition_identity(self):
        img = noise_image(61)
        out = D.phog(img)
        level0 = out[:8].sum()
        level1 = out[8:40].sum()
        level2 = out[40:].sum()
        assert level0 == pytest.approx(level1, rel=1e-9)
        assert level0 == pytest.approx(level2, rel=1e-9)
        assert out.sum() == pytest.approx(1.0, rel=1e-9)

    def test_diagonal_step_dominant_bin(self):
        img = diagonal_step(64)
        out = D.phog(img)
        # Gradient of the step points at 45 degrees -> bin 1 of [0,360)/45.
        for level_slice in (out[:8], out[8:40].reshape(4, 8).sum(axis=0),
                            out[40:].reshape(16, 8).sum(axis=0)):
            assert level_slice.argmax() == 1

    def test_matches_reference(self):
        img = noise_image(62, 24, 31)
        got = D.phog(img)
        ref = oracles.phog_reference(gray_plane(img))
        np.testing.assert_allclose(got, ref, atol=1e-12)

    def test_undersized(self):
        with pytest.raises(ValueError):
            D.phog(solid(0.5, 0.5, 0.5, 3))


class TestJcd:
    def test_pure_red_constant(self):
        out = D.jcd(solid(1.0, 0.0, 0.0, 40))
        assert out.sum() == pytest.approx(1.0, rel=1e-12)
        # All mass in (non-edge area, plain red): area 0, color 3.
        assert out[3] == pytest.approx(1.0, rel=1e-12)

    def test_sums_to_one(self):
        for seed in (71, 72):
            out = D.jcd(noise_image(seed, 80, 120))
            assert out.sum() == pytest.approx(1.0, rel=1e-9)
            assert out.min() >= 0.0

    def test_red_blue_stripes_vertical_area(self):
        # 20px stripes line up with the 20px classifier cells, so each
        # 40x40 region sees a clean vertical red/blue edge.
        arr = np.zeros((80, 80, 3))
        arr[:, :, 2] = 1.0
        stripe = (np.arange(80) % 40) < 20
        arr[:, stripe, 0] = 1.0
        arr[:, stripe, 2] = 0.0
        img = rgb_image(arr)
        out = D.jcd(img).reshape(7, 24)
        vertical = out[3]
        assert vertical[3] > 0.05    # plain red mass in the vertical area
        assert vertical[18] > 0.05   # plain blue mass in the vertical area
        ref = oracles.jcd_reference(img).reshape(7, 24)
        np.testing.assert_allclose(out, ref, atol=1e-9)

    def test_matches_reference_on_noise(self):
        img = noise_image(73, 56, 47)
        got = D.jcd(img)
        ref = oracles.jcd_reference(img)
        np.testing.assert_allclose(got, ref, atol=1e-9)

    def test_undersized(self):
        with pytest.raises(ValueError):
            D.jcd(solid(0.5, 0.5, 0.5, 39))


class TestExtractAll:
    def test_constant_segments_match_members(self):
        img = solid(0.5, 0.5, 0.5, 512)
        vec = D.extract_all(img)
        assert vec.shape == (702,)
        np.testing.assert_array_equal(vec[D.SEGMENTS["tamura"]],
                                      D.tamura(img))
        np.testing.assert_array_equal(vec[D.SEGMENTS["color_layout"]],
                                      D.color_layout(img))
        np.testing.assert_array_equal(vec[D.SEGMENTS["edge_histogram"]],
                                      D.edge_histogram(img))
        np.testing.assert_array_equal(
            vec[D.SEGMENTS["auto_color_correlogram"]],
            D.auto_color_correlogram(img))
        np.testing.assert_array_equal(vec[D.SEGMENTS["phog"]], D.phog(img))
        np.testing.assert_array_equal(vec[D.SEGMENTS["jcd"]], D.jcd(img))

    def test_resizes_then_extracts(self):
        from giclassify.imaging import resize
        img = noise_image(81, 100, 130)
        vec = D.extract_all(img)
        direct = D.extract_all(resize(img, 512, 512))
        np.testing.assert_array_equal(vec, direct)

    def test_determinism(self):
        img = noise_image(82, 64, 64)
        a = D.extract_all(img)
        b = D.extract_all(ImageTensor(RGB, img.planes.copy()))
        np.testing.assert_array_equal(a, b)

    def test_histogram_segments_nonnegative_and_bounded(self):
        vec = D.extract_all(noise_image(83, 96, 96))
        assert np.all(np.isfinite(vec))
        for name in ("edge_histogram", "auto_color_correlogram", "phog", "jcd"):
            segment = vec[D.SEGMENTS[name]]
            assert segment.min() >= 0.0
        assert vec[D.SEGMENTS["phog"]].sum() <= 1.0 + 1e-9
        assert vec[D.SEGMENTS["jcd"]].sum() <= 1.0 + 1e-9

    def test_feature_csv_round_trip(self, tmp_path):
        vec = D.extract_all(noise_image(84, 64, 64))
        path = tmp_path / "features.csv"
        D.write_features(path, [("a/x.png", "polyps", vec)])
        ids, labels, matrix = D.read_features(path)
        assert ids == ["a/x.png"] and labels == ["polyps"]
        np.testing.assert_allclose(matrix[0], vec, rtol=1e-8)
