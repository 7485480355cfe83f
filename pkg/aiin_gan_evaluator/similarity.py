"""
Structural similarity: SSIM components, multi-scale SSIM, the random pair
protocol and the intra-class mode-collapse rule.
"""
import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from aiin_gan_evaluator.errors import ParameterError
from aiin_gan_evaluator.image_codec import Image
from aiin_gan_evaluator.neural.rng import Rng
from aiin_gan_evaluator.preprocessing.filters import gaussian_kernel

logger = logging.getLogger(__name__)

MSSSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)


@dataclass(frozen=True)
class SsimConfig:
    window_side: int = 11
    window_sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0

    def __post_init__(self):
        if self.window_side < 1 or self.window_side % 2 == 0:
            raise ParameterError(f"Error! SSIM window side must be odd, got {self.window_side}.")
        if min(self.window_sigma, self.k1, self.k2, self.dynamic_range) <= 0:
            raise ParameterError("Error! SSIM constants must be positive.")

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2

    @property
    def c3(self) -> float:
        return self.c2 / 2.0


@dataclass(frozen=True)
class MsSsimConfig:
    max_scales: int = 5
    weights: tuple[float, ...] = MSSSIM_WEIGHTS
    ssim: SsimConfig = field(default_factory=SsimConfig)

    def __post_init__(self):
        if self.max_scales < 1 or len(self.weights) < self.max_scales:
            raise ParameterError(
                f"Error! {self.max_scales} scales need as many weights, got {len(self.weights)}."
            )
        if any(w <= 0 for w in self.weights):
            raise ParameterError("Error! MS-SSIM weights must be positive.")
        if abs(sum(self.weights[:self.max_scales]) - 1.0) > 1e-4:
            raise ParameterError("Error! MS-SSIM weights must sum to 1.")


class SsimComponents(NamedTuple):
    luminance: float
    contrast: float
    structure: float


class CollapseVerdict(NamedTuple):
    delta: float
    collapsed: bool


@dataclass(frozen=True)
class PairSample:
    """Unordered image index pairs (a < b)."""

    pairs: tuple[tuple[int, int], ...]

    def __len__(self):
        return len(self.pairs)

    def validate(self, n_images: int) -> None:
        for a, b in self.pairs:
            if a == b:
                raise ParameterError(f"Error! Self-pair ({a}, {b}) in pair sample.")
            if not (0 <= a < n_images and 0 <= b < n_images):
                raise ParameterError(f"Error! Pair ({a}, {b}) is outside a set of {n_images} images.")


def _filter_valid(values: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    rows = sliding_window_view(values, kernel.size, axis=1) @ kernel
    return sliding_window_view(rows, kernel.size, axis=0) @ kernel


def _component_maps(x: np.ndarray, y: np.ndarray, cfg: SsimConfig) -> SsimComponents:
    """Spatial means of the luminance, contrast and structure maps of two float arrays."""
    kernel = gaussian_kernel(cfg.window_side, cfg.window_sigma)
    mu_x = _filter_valid(x, kernel)
    mu_y = _filter_valid(y, kernel)
    var_x = np.maximum(_filter_valid(x * x, kernel) - mu_x * mu_x, 0.0)
    var_y = np.maximum(_filter_valid(y * y, kernel) - mu_y * mu_y, 0.0)
    cov_xy = _filter_valid(x * y, kernel) - mu_x * mu_y
    sigma_x = np.sqrt(var_x)
    sigma_y = np.sqrt(var_y)

    luminance = (2.0 * mu_x * mu_y + cfg.c1) / (mu_x * mu_x + mu_y * mu_y + cfg.c1)
    contrast = (2.0 * sigma_x * sigma_y + cfg.c2) / (var_x + var_y + cfg.c2)
    structure = (cov_xy + cfg.c3) / (sigma_x * sigma_y + cfg.c3)
    return SsimComponents(float(luminance.mean()), float(contrast.mean()), float(structure.mean()))


def _check_pair(x: Image, y: Image, window_side: int) -> None:
    if x.shape != y.shape:
        raise ParameterError(f"Error! Image sizes differ: {x.width}x{x.height} vs {y.width}x{y.height}.")
    if min(x.shape) < window_side:
        raise ParameterError(
            f"Error! Images of {x.width}x{x.height} are smaller than the {window_side}-pixel window."
        )


def ssim_components(x: Image, y: Image, cfg: SsimConfig = SsimConfig()) -> SsimComponents:
    """
    Gaussian-windowed luminance, contrast and structure terms, each averaged over the image.

    Args:
        x (Image): First image
        y (Image): Second image of the same size, both sides >= window side
        cfg (SsimConfig): Window and stabilisation constants

    Returns:
        SsimComponents: (l, c, s)
    """
    _check_pair(x, y, cfg.window_side)
    return _component_maps(x.as_float(), y.as_float(), cfg)


def _average_pool(values: np.ndarray) -> np.ndarray:
    half_h = values.shape[0] // 2
    half_w = values.shape[1] // 2
    return values[:2 * half_h, :2 * half_w].reshape(half_h, 2, half_w, 2).mean(axis=(1, 3))


def effective_scales(min_side: int, cfg: MsSsimConfig = MsSsimConfig()) -> int:
    """Largest usable scale count: every scale must still fit one window."""
    scales = 0
    side = min_side
    while scales < cfg.max_scales and side >= cfg.ssim.window_side:
        scales += 1
        side //= 2
    return scales


def msssim(x: Image, y: Image, cfg: MsSsimConfig = MsSsimConfig()) -> float:
    """
    Multi-scale SSIM.

    Contrast and structure are taken at every scale, luminance only at the
    coarsest one; scales are separated by 2x2 average pooling. When the image
    cannot support cfg.max_scales scales the weights of the usable scales are
    renormalised to sum to 1. Negative components are clamped to 0.

    Returns:
        float: Score in [0, 1]
    """
    _check_pair(x, y, cfg.ssim.window_side)
    scales = effective_scales(min(x.shape), cfg)
    weights = np.asarray(cfg.weights[:scales], dtype=np.float64)
    weights = weights / weights.sum()

    xf = x.as_float()
    yf = y.as_float()
    score = 1.0
    for j in range(scales):
        components = _component_maps(xf, yf, cfg.ssim)
        score *= max(components.contrast, 0.0) ** weights[j]
        score *= max(components.structure, 0.0) ** weights[j]
        if j == scales - 1:
            score *= max(components.luminance, 0.0) ** weights[j]
        else:
            xf = _average_pool(xf)
            yf = _average_pool(yf)

    return float(min(max(score, 0.0), 1.0))


def sample_pairs(n_images: int, n_pairs: int, seed: int) -> PairSample:
    """
    Draw n_pairs distinct-index pairs uniformly, with replacement across pairs.

    Deterministic for a fixed seed.
    """
    if n_images < 2:
        raise ParameterError(f"Error! Pair sampling needs at least 2 images, got {n_images}.")
    if n_pairs < 0:
        raise ParameterError(f"Error! Pair count must be non-negative, got {n_pairs}.")

    rng = Rng(seed)
    pairs = []
    for _ in range(n_pairs):
        a = rng.below(n_images)
        b = rng.below(n_images - 1)
        if b >= a:
            b += 1
        pairs.append((min(a, b), max(a, b)))
    return PairSample(tuple(pairs))


def mean_msssim(images: Sequence[Image], pairs: PairSample, cfg: MsSsimConfig = MsSsimConfig()) -> float:
    """Arithmetic mean of msssim over the sampled pairs, summed in pair order."""
    if len(pairs) == 0:
        raise ParameterError("Error! Mean MS-SSIM needs at least one pair.")
    pairs.validate(len(images))
    shapes = {img.shape for img in images}
    if len(shapes) != 1:
        raise ParameterError(f"Error! Images must share one size, found {sorted(shapes)}.")

    total = 0.0
    for a, b in pairs.pairs:
        total += msssim(images[a], images[b], cfg)
    return total / len(pairs)


def collapse_delta(real_score: float, fake_score: float) -> CollapseVerdict:
    """
    Fake-minus-real mean MS-SSIM; a positive delta signals intra-class mode collapse.
    """
    for name, score in (("real", real_score), ("fake", fake_score)):
        if not 0.0 <= score <= 1.0:
            raise ParameterError(f"Error! {name} MS-SSIM score {score} is outside [0, 1].")

    delta = fake_score - real_score
    return CollapseVerdict(delta, delta > 0.0)
