"""
Gaussian and median filtering, the two alternative preprocessing techniques
the AIIN variant is compared against.
"""
import logging

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from aiin_gan_evaluator.errors import ParameterError
from aiin_gan_evaluator.image_codec import Image
from aiin_gan_evaluator.preprocessing.generic import ImagePreprocessor

logger = logging.getLogger(__name__)

# window sides of the studied filter variants
STUDIED_KSIZES = (3, 9)


def _check_ksize(ksize: int) -> None:
    if ksize < 3 or ksize % 2 == 0:
        raise ParameterError(f"Error! Kernel size must be odd and at least 3, got {ksize}.")


def pad_reflect(array: np.ndarray, radius: int) -> np.ndarray:
    """Mirror-pad without repeating the edge; singleton axes are edge-replicated."""
    pad_y = (radius, radius)
    pad_x = (radius, radius)
    padded = array
    # mirroring needs at least two samples along an axis
    padded = np.pad(padded, (pad_y, (0, 0)), mode='reflect' if array.shape[0] > 1 else 'edge')
    padded = np.pad(padded, ((0, 0), pad_x), mode='reflect' if array.shape[1] > 1 else 'edge')
    return padded


def gaussian_sigma(ksize: int) -> float:
    """Sigma implied by a kernel size (0.3 * ((k - 1) / 2 - 1) + 0.8)."""
    return 0.3 * ((ksize - 1) * 0.5 - 1) + 0.8


def gaussian_kernel(ksize: int, sigma: float = None) -> np.ndarray:
    """Normalized 1-D Gaussian kernel."""
    if sigma is None:
        sigma = gaussian_sigma(ksize)
    offsets = np.arange(ksize, dtype=np.float64) - (ksize - 1) / 2.0
    weights = np.exp(-(offsets ** 2) / (2.0 * sigma ** 2))
    return weights / weights.sum()


def separable_convolve(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Same-size separable convolution of a real 2-D array with reflect borders."""
    radius = kernel.size // 2
    padded = pad_reflect(values, radius)
    rows = sliding_window_view(padded, kernel.size, axis=1) @ kernel
    return sliding_window_view(rows, kernel.size, axis=0) @ kernel


def gaussian_filter(img: Image, ksize: int) -> Image:
    """
    Separable Gaussian blur.

    Args:
        img (Image): Input image
        ksize (int): Odd window side, at least 3

    Returns:
        Image: Blurred image, rounded half-up and clamped to [0, 255]
    """
    _check_ksize(ksize)
    return Image.from_float(separable_convolve(img.as_float(), gaussian_kernel(ksize)))


def median_filter(img: Image, ksize: int) -> Image:
    """
    Median of each ksize x ksize neighbourhood (reflect borders).

    The window area is odd, so the median is always an existing intensity.
    """
    _check_ksize(ksize)
    radius = ksize // 2
    padded = pad_reflect(img.data, radius)
    windows = sliding_window_view(padded, (ksize, ksize)).reshape(img.height, img.width, ksize * ksize)
    return Image.from_array(np.median(windows, axis=2).astype(np.uint8))


class GaussianNormalizer(ImagePreprocessor):
    tag = "gaussian"

    def __init__(self, ksize: int):
        _check_ksize(ksize)
        if ksize not in STUDIED_KSIZES:
            logger.info("Kernel size %d is outside the studied sizes %s", ksize, STUDIED_KSIZES)
        self._ksize = ksize

    @property
    def window(self) -> str:
        return f"{self._ksize}x{self._ksize}"

    def apply(self, img: Image) -> Image:
        return gaussian_filter(img, self._ksize)


class MedianNormalizer(ImagePreprocessor):
    tag = "median"

    def __init__(self, ksize: int):
        _check_ksize(ksize)
        if ksize not in STUDIED_KSIZES:
            logger.info("Kernel size %d is outside the studied sizes %s", ksize, STUDIED_KSIZES)
        self._ksize = ksize

    @property
    def window(self) -> str:
        return f"{self._ksize}x{self._ksize}"

    def apply(self, img: Image) -> Image:
        return median_filter(img, self._ksize)
