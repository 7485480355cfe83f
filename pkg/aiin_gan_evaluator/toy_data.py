"""
Desk-scale multi-modal toy datasets: low-contrast Gaussian blobs at a small
number of fixed positions, standing in for the minority and majority classes.
"""
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from aiin_gan_evaluator.errors import ParameterError
from aiin_gan_evaluator.image_codec import Image, round_half_up
from aiin_gan_evaluator.neural.rng import Rng

logger = logging.getLogger(__name__)

# healthy : pneumonia counts of the studied corpus
MAJORITY_RATIO = 3875 / 1340
TEST_NEGATIVES = 234
TEST_POSITIVES = 390


@dataclass(frozen=True)
class ToyDatasetSpec:
    k_modes: int = 4
    side: int = 16
    blob_sigma: float = 2.0
    intensity_band: tuple[float, float] = (20.0, 80.0)
    noise_sigma: float = 2.0
    n: int = 400
    # angular offset of the blob ring, in radians
    phase: float = 0.0

    def __post_init__(self):
        if self.k_modes < 1:
            raise ParameterError(f"Error! k_modes must be at least 1, got {self.k_modes}.")
        if self.side < 2:
            raise ParameterError(f"Error! Toy image side must be at least 2, got {self.side}.")
        if self.blob_sigma <= 0:
            raise ParameterError(f"Error! blob_sigma must be positive, got {self.blob_sigma}.")
        low, high = self.intensity_band
        if not 0 <= low < high <= 255:
            raise ParameterError(f"Error! Intensity band ({low}, {high}) must satisfy 0 <= low < high <= 255.")
        if self.noise_sigma < 0:
            raise ParameterError(f"Error! noise_sigma must be non-negative, got {self.noise_sigma}.")
        if self.n < 0:
            raise ParameterError(f"Error! Image count must be non-negative, got {self.n}.")

    def centers(self) -> list[tuple[float, float]]:
        """Blob centres (x, y), evenly spaced on a ring around the image centre."""
        middle = (self.side - 1) / 2.0
        radius = self.side / 4.0
        return [
            (middle + radius * math.cos(self.phase + 2.0 * math.pi * k / self.k_modes),
             middle + radius * math.sin(self.phase + 2.0 * math.pi * k / self.k_modes))
            for k in range(self.k_modes)
        ]


def blob_template(spec: ToyDatasetSpec, center: tuple[float, float]) -> np.ndarray:
    """Noise-free blob scaled into the intensity band, as a float array."""
    ys, xs = np.mgrid[0:spec.side, 0:spec.side].astype(np.float64)
    cx, cy = center
    blob = np.exp(-((xs - cx) ** 2 + (ys - cy) ** 2) / (2.0 * spec.blob_sigma ** 2))
    low, high = spec.intensity_band
    return low + (high - low) * blob


def make_toy_dataset(spec: ToyDatasetSpec, seed: int) -> list[Image]:
    """
    Draw spec.n images, each a blob at a uniformly chosen mode plus pixel noise.

    Args:
        spec (ToyDatasetSpec): Dataset description
        seed (int): Generator seed; equal seeds give equal datasets

    Returns:
        list: Images of spec.side x spec.side
    """
    rng = Rng(seed)
    templates = [blob_template(spec, center) for center in spec.centers()]

    images = []
    for _ in range(spec.n):
        values = templates[rng.below(spec.k_modes)]
        if spec.noise_sigma > 0:
            values = values + rng.normal(values.shape, std=spec.noise_sigma)
        images.append(Image.from_float(values))

    logger.debug("Generated %d toy images with %d modes", spec.n, spec.k_modes)
    return images


def majority_counterpart(spec: ToyDatasetSpec, ratio: float = MAJORITY_RATIO) -> ToyDatasetSpec:
    """
    Spec of the majority class: same look, blob ring rotated by half a mode
    spacing, and ratio times as many images.
    """
    if ratio <= 0:
        raise ParameterError(f"Error! Majority ratio must be positive, got {ratio}.")
    return replace(
        spec,
        phase=spec.phase + math.pi / spec.k_modes,
        n=int(round_half_up(spec.n * ratio))
    )


def held_out_sizes(n_minority: int, test_fraction: float) -> tuple[int, int]:
    """
    Held-out (negatives, positives) sized test_fraction of the minority count
    overall, split in the 234 : 390 proportion of the studied test set.
    """
    if not 0 < test_fraction <= 1:
        raise ParameterError(f"Error! test_fraction must lie in (0, 1], got {test_fraction}.")
    total = max(2, int(round_half_up(n_minority * test_fraction)))
    negatives = int(round_half_up(total * TEST_NEGATIVES / (TEST_NEGATIVES + TEST_POSITIVES)))
    negatives = min(max(negatives, 1), total - 1)
    return negatives, total - negatives
