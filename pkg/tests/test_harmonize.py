import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from desmoke import harmonize as hz
from desmoke.fixtures import make_donor_variant
from desmoke.imagecore import rgb_to_lab
from oracles import gaussian_blur_bruteforce, geometric_mean_bruteforce, mean_std_twopass


class TestGeometricMeanReference:
    def test_identical_stack_identity(self, rng):
        img = rng.uniform(0.01, 1.0, (6, 6, 3))
        out = hz.geometric_mean_reference([img] * 5)
        assert np.abs(out - img).max() < 1e-6

    def test_two_sample_closed_form(self):
        a = np.full((2, 2, 3), 0.25)
        b = np.full((2, 2, 3), 1.0)
        out = hz.geometric_mean_reference([a, b])
        assert np.abs(out - 0.5).max() < 1e-9

    def test_matches_pow_product_oracle(self, rng):
        renders = [rng.random((4, 4, 3)) for _ in range(5)]
        got = hz.geometric_mean_reference(renders, 1e-6)
        assert np.abs(got - geometric_mean_bruteforce(renders, 1e-6)).max() < 1e-6

    def test_bounds(self, rng):
        renders = [rng.random((8, 8, 3)) for _ in range(5)]
        out = hz.geometric_mean_reference(renders, 1e-6)
        stack = np.stack(renders)
        assert np.all(out >= stack.min(axis=0) - 1e-6)
        assert np.all(out <= np.maximum(stack.max(axis=0), 1e-6) + 1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_permutation_invariant(self, seed):
        gen = np.random.default_rng(seed)
        renders = [gen.random((4, 4, 3)) for _ in range(4)]
        base = hz.geometric_mean_reference(renders)
        perm = hz.geometric_mean_reference(renders[::-1])
        assert np.abs(base - perm).max() < 1e-9

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            hz.geometric_mean_reference([])

    def test_dimension_mismatch_rejected(self, rng):
        with pytest.raises(ValueError, match="shape"):
            hz.geometric_mean_reference([rng.random((4, 4, 3)), rng.random((5, 5, 3))])

    def test_floor_keeps_zeros_finite(self):
        img = np.zeros((2, 2, 3))
        out = hz.geometric_mean_reference([img, img], floor_epsilon=1e-6)
        assert np.allclose(out, 1e-6, rtol=1e-12)


class TestLabStats:
    def test_constant_channels(self):
        lab = np.full((4, 4, 3), 42.0)
        stats = hz.lab_stats(lab)
        assert np.allclose(stats.mean, 42.0) and np.allclose(stats.std, 0.0)

    def test_two_pixel_population_convention(self):
        lab = np.array([[[0.0, 0.0, 0.0]], [[10.0, 10.0, 10.0]]])
        stats = hz.lab_stats(lab)
        assert np.allclose(stats.mean, 5.0)
        assert np.allclose(stats.std, 5.0)  # divide-by-N, not N-1

    def test_matches_twopass_oracle(self, rng):
        lab = rng.normal(50.0, 20.0, (8, 8, 3))
        stats = hz.lab_stats(lab)
        for c in range(3):
            mean, std = mean_std_twopass(lab[..., c])
            assert stats.mean[c] == pytest.approx(mean, abs=1e-9)
            assert stats.std[c] == pytest.approx(std, abs=1e-9)


class TestReinhardTransfer:
    def test_identity_when_ref_equals_src(self, rng):
        src = rng.random((8, 8, 3))
        out = hz.reinhard_transfer(src, src)
        assert np.abs(out - src).max() < 1e-4

    def test_constant_source_mean_shift(self, rng):
        src = np.full((8, 8, 3), 0.5)
        ref = rng.random((8, 8, 3))
        out_lab = hz.reinhard_transfer_lab(rgb_to_lab(src), rgb_to_lab(ref))
        ref_stats = hz.lab_stats(rgb_to_lab(ref))
        # sigma_src = 0 branch: pure mean shift onto the reference means
        assert np.allclose(hz.lab_stats(out_lab).mean, ref_stats.mean, atol=1e-9)
        assert np.allclose(hz.lab_stats(out_lab).std, 0.0, atol=1e-9)

    def test_statistics_match_reference_before_clamping(self, rng):
        src_lab = rgb_to_lab(rng.random((8, 8, 3)))
        ref_lab = rgb_to_lab(rng.random((8, 8, 3)))
        out_lab = hz.reinhard_transfer_lab(src_lab, ref_lab)
        out_stats = hz.lab_stats(out_lab)
        ref_stats = hz.lab_stats(ref_lab)
        assert np.abs(out_stats.mean - ref_stats.mean).max() < 1e-6
        assert np.abs(out_stats.std - ref_stats.std).max() < 1e-6

    def test_affine_reparameterization_equivariance(self, rng):
        # applying z -> s*z + d to both inputs transforms the output the same way
        src = rng.normal(50.0, 10.0, (6, 6, 3))
        ref = rng.normal(60.0, 15.0, (6, 6, 3))
        s, d = 2.5, -7.0
        base = hz.reinhard_transfer_lab(src, ref)
        scaled = hz.reinhard_transfer_lab(s * src + d, s * ref + d)
        assert np.abs(scaled - (s * base + d)).max() < 1e-8

    def test_different_sizes_allowed(self, rng):
        out = hz.reinhard_transfer(rng.random((8, 8, 3)), rng.random((12, 16, 3)))
        assert out.shape == (8, 8, 3)


class TestGaussianBlur:
    def test_sigma_zero_identity(self, rng):
        img = rng.random((7, 7, 3))
        out = hz.gaussian_blur(img, 0.0)
        assert np.array_equal(out, img)

    def test_constant_preserved(self):
        img = np.full((9, 9), 0.62)
        assert np.abs(hz.gaussian_blur(img, 1.2) - 0.62).max() < 1e-12

    def test_impulse_matches_bruteforce(self):
        img = np.zeros((9, 9))
        img[4, 4] = 1.0
        out = hz.gaussian_blur(img, 0.35)
        ref = gaussian_blur_bruteforce(img, 0.35)
        assert np.abs(out - ref).max() < 1e-6
        # center tap of the separable pass squared
        k = hz.gaussian_kernel(0.35)
        assert out[4, 4] == pytest.approx(k[len(k) // 2] ** 2, abs=1e-12)

    def test_matches_bruteforce_on_random(self, rng):
        img = rng.random((10, 12))
        for sigma in (0.35, 1.0, 2.0):
            assert np.abs(hz.gaussian_blur(img, sigma) - gaussian_blur_bruteforce(img, sigma)).max() < 1e-6

    def test_mean_preserved_on_interior_heavy_image(self, rng):
        img = rng.random((32, 32, 3))
        out = hz.gaussian_blur(img, 0.35)
        assert abs(out.mean() - img.mean()) < 1e-4

    def test_kernel_radius_rule(self):
        assert len(hz.gaussian_kernel(0.35)) == 2 * max(1, int(np.ceil(3 * 0.35))) + 1
        assert len(hz.gaussian_kernel(0.1)) == 3  # minimum radius 1
        assert hz.gaussian_kernel(1.5).sum() == pytest.approx(1.0, abs=1e-12)


class TestHarmonizePipeline:
    def test_identical_donors_reduce_to_blur(self, rng):
        src = rng.uniform(0.05, 1.0, (8, 8, 3))
        out = hz.harmonize_pipeline(src, [src.copy() for _ in range(4)])
        expected = hz.gaussian_blur(hz.reinhard_transfer(src, src), 0.35)
        assert np.abs(out - expected).max() < 1e-6

    def test_color_cast_donors_pull_stats_toward_reference(self, rng):
        src = rng.uniform(0.1, 0.9, (12, 12, 3))
        donors = [
            make_donor_variant(src, gains, (0.0, 0.0, 0.0))
            for gains in [(1.2, 1.0, 0.8), (0.8, 1.0, 1.2), (1.1, 0.9, 1.0), (0.9, 1.1, 1.0)]
        ]
        reference = hz.geometric_mean_reference([src, *donors])
        out_lab = hz.reinhard_transfer_lab(rgb_to_lab(src), rgb_to_lab(reference))
        ref_stats = hz.lab_stats(rgb_to_lab(reference))
        assert np.abs(hz.lab_stats(out_lab).mean - ref_stats.mean).max() < 1e-3

    def test_single_donor_accepted(self, rng):
        src = rng.random((8, 8, 3))
        out = hz.harmonize_pipeline(src, [rng.random((8, 8, 3))])
        assert out.shape == src.shape
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_no_donors_rejected(self, rng):
        with pytest.raises(ValueError, match="empty"):
            hz.harmonize_pipeline(rng.random((8, 8, 3)), [])

    def test_sigma_zero_skips_smoothing(self, rng):
        src = rng.uniform(0.05, 1.0, (8, 8, 3))
        donors = [rng.random((8, 8, 3)) for _ in range(2)]
        smooth = hz.harmonize_pipeline(src, donors, hz.HarmonizeParams(blur_sigma=0.35))
        sharp = hz.harmonize_pipeline(src, donors, hz.HarmonizeParams(blur_sigma=0.0))
        assert np.abs(smooth - sharp).max() > 1e-6


class TestParams:
    def test_defaults(self):
        p = hz.HarmonizeParams()
        assert (p.floor_epsilon, p.blur_sigma, p.jpeg_quality, p.chroma_subsampling) == (
            1e-6,
            0.35,
            95,
            "4:2:0",
        )

    @pytest.mark.parametrize(
        "kwargs", [{"floor_epsilon": 0.0}, {"blur_sigma": -0.1}, {"jpeg_quality": 0}, {"jpeg_quality": 101}]
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            hz.HarmonizeParams(**kwargs)
