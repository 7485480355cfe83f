import numpy as np
import pytest

from aiin_gan_evaluator.errors import ParameterError
from aiin_gan_evaluator.image_codec import Image
from aiin_gan_evaluator.preprocessing import (
    AiinNormalizer,
    GaussianNormalizer,
    MedianNormalizer,
    NoPreprocessing,
    WindowGrid,
    build_preprocessor
)
from aiin_gan_evaluator.preprocessing.aiin import (
    aiin_normalize,
    clip_and_redistribute,
    clip_limit_for,
    tile_luts
)
from aiin_gan_evaluator.preprocessing.filters import gaussian_filter, gaussian_kernel, median_filter
from aiin_gan_evaluator.preprocessing.geometry import affine_matrix, resize_bilinear, warp_affine


class TestClipAndRedistribute:
    def test_hand_trace_with_residual(self):
        assert clip_and_redistribute([10, 0, 0, 0], 4).tolist() == [6, 2, 1, 1]

    def test_nothing_to_clip(self):
        assert clip_and_redistribute([3, 3, 3, 3], 4).tolist() == [3, 3, 3, 3]

    def test_exact_division(self):
        assert clip_and_redistribute([8, 0, 0, 0], 4).tolist() == [5, 1, 1, 1]

    def test_zero_clip_limit_rejected(self):
        with pytest.raises(ParameterError):
            clip_and_redistribute([1, 2], 0)

    def test_mass_is_preserved(self, np_rng):
        for _ in range(1000):
            hist = np_rng.integers(0, 500, size=256)
            clip = int(np_rng.integers(1, 600))
            result = clip_and_redistribute(hist, clip)
            assert result.sum() == hist.sum()
            assert result.max() <= clip + (hist.sum() - np.minimum(hist, clip).sum()) // 256 + 1


def test_clip_limit_floor():
    assert clip_limit_for(0, 64) == 1
    assert clip_limit_for(50, 256) == 50
    assert clip_limit_for(5, 16) == 1


class TestAiin:
    def test_constant_image_stays_constant(self, constant_image):
        for grid, threshold in ((WindowGrid(4, 4), 0), (WindowGrid(8, 8), 50), (WindowGrid(3, 5), 7)):
            out = aiin_normalize(constant_image(90, 32, 24), grid, threshold)
            assert out.shape == (24, 32)
            assert np.unique(out.data).size == 1

    def test_global_equalization_half_and_half(self):
        img = Image.from_array(np.array([[0, 0], [255, 255]], dtype=np.uint8))
        out = aiin_normalize(img, WindowGrid(1, 1), 1000)
        assert sorted(set(out.data.ravel().tolist())) == [128, 255]

    def test_dimensions_preserved_with_remainder_tiles(self, random_image):
        img = random_image(37, 29)
        out = aiin_normalize(img, WindowGrid(8, 8), 10)
        assert out.shape == img.shape

    def test_luts_are_monotone_and_in_range(self, random_image):
        luts = tile_luts(random_image(40, 40), WindowGrid(4, 4), 5)
        assert np.all(np.diff(luts, axis=2) >= 0)
        assert luts.min() >= 0 and luts.max() <= 255

    def test_grid_larger_than_image(self, random_image):
        with pytest.raises(ParameterError):
            aiin_normalize(random_image(4, 4), WindowGrid(8, 8), 10)

    def test_grid_parse(self):
        assert WindowGrid.parse("8x16") == WindowGrid(8, 16)
        with pytest.raises(ParameterError):
            WindowGrid.parse("eight")

    def test_normalizer_describes_itself(self):
        normalizer = AiinNormalizer(WindowGrid(8, 8), 50)
        assert (normalizer.tag, normalizer.window, normalizer.threshold) == ("aiin", "8x8", 50)


class TestFilters:
    def test_gaussian_kernel_centre_weight(self):
        kernel = gaussian_kernel(3)
        assert kernel[1] == pytest.approx(0.5221, abs=1e-3)
        assert kernel.sum() == pytest.approx(1.0)

    def test_gaussian_constant_invariance(self, constant_image):
        img = constant_image(77, 12, 9)
        assert gaussian_filter(img, 3) == img
        assert gaussian_filter(img, 9) == img

    def test_gaussian_impulse_mass(self):
        data = np.zeros((15, 15), dtype=np.uint8)
        data[7, 7] = 255
        out = gaussian_filter(Image.from_array(data), 3)
        assert abs(int(out.data.astype(np.int64).sum()) - 255) <= 9

    def test_median_hand_patch(self):
        patch = np.array([[1, 2, 3], [4, 100, 6], [7, 8, 9]], dtype=np.uint8)
        assert median_filter(Image.from_array(patch), 3).data[1, 1] == 6

    def test_median_removes_salt(self, constant_image):
        data = constant_image(40, 9, 9).data.copy()
        data[4, 4] = 255
        assert np.all(median_filter(Image.from_array(data), 3).data == 40)

    def test_median_constant_invariance(self, constant_image):
        img = constant_image(201, 10, 7)
        assert median_filter(img, 9) == img

    @pytest.mark.parametrize("ksize", [0, 2, 4, 1])
    def test_bad_kernel_sizes(self, ksize, constant_image):
        with pytest.raises(ParameterError):
            gaussian_filter(constant_image(1), ksize)
        with pytest.raises(ParameterError):
            median_filter(constant_image(1), ksize)


class TestGeometry:
    def test_same_size_resize_is_identity(self, random_image):
        img = random_image(128, 128)
        assert resize_bilinear(img, 128, 128) == img

    def test_two_by_two_to_one(self):
        img = Image.from_array(np.array([[0, 0], [100, 100]], dtype=np.uint8))
        assert resize_bilinear(img, 1, 1).data[0, 0] == 50

    def test_constant_resize(self, constant_image):
        out = resize_bilinear(constant_image(33, 7, 5), 19, 23)
        assert out.shape == (23, 19)
        assert np.all(out.data == 33)

    def test_zero_target_rejected(self, random_image):
        with pytest.raises(ParameterError):
            resize_bilinear(random_image(), 0, 4)

    def test_identity_warp(self, random_image):
        img = random_image(16, 16)
        assert warp_affine(img, affine_matrix(0.0, 0.0, 0.0)) == img

    def test_warp_keeps_interior_of_constant_image(self, constant_image):
        out = warp_affine(constant_image(120, 32, 32), affine_matrix(10.0, 0.1, 0.1))
        assert np.all(out.data[12:20, 12:20] == 120)


class TestBuildPreprocessor:
    def test_variants(self):
        assert isinstance(build_preprocessor("none"), NoPreprocessing)
        assert isinstance(build_preprocessor("aiin:8x8:50"), AiinNormalizer)
        assert isinstance(build_preprocessor("gaussian:3"), GaussianNormalizer)
        assert isinstance(build_preprocessor("median:9"), MedianNormalizer)

    @pytest.mark.parametrize("spec", ["sharpen:3", "aiin:8x8", "gaussian:4", "aiin:axb:5", ""])
    def test_invalid_variants(self, spec):
        with pytest.raises(ParameterError):
            build_preprocessor(spec)

    def test_describe(self):
        assert build_preprocessor("aiin:4x4:0").describe() == "aiin:4x4:0"
        assert build_preprocessor("median:3").describe() == "median:3x3"
