"""
Frechet distance between real and synthetic feature distributions, the
built-in 768-dimensional patch-statistics extractor and the feature CSV
import/export path for externally computed embeddings.
"""
import csv
import io
import logging
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from aiin_gan_evaluator.errors import DataError, ManifestError, NotPsdError, ParameterError
from aiin_gan_evaluator.image_codec import Image
from aiin_gan_evaluator.linalg import EigenMethod, PSD_TOLERANCE, eigh, mean_and_covariance, trace_sqrt_product
from aiin_gan_evaluator.preprocessing.filters import pad_reflect
from aiin_gan_evaluator.preprocessing.geometry import resize_bilinear

logger = logging.getLogger(__name__)

FEATURE_SIDE = 128
CELL_SIDE = 8
CELLS_PER_SIDE = FEATURE_SIDE // CELL_SIDE
STATS_PER_CELL = 3
FEATURE_DIM = CELLS_PER_SIDE * CELLS_PER_SIDE * STATS_PER_CELL
FID_CLAMP = 1e-6

_SMOOTH = np.array([1.0, 2.0, 1.0])
_DIFF = np.array([-1.0, 0.0, 1.0])


@dataclass(frozen=True)
class FeatureMatrix:
    """n feature vectors of dimension d, one per row."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise DataError(f"Error! Feature matrix must be a non-empty 2-D array, got shape {values.shape}.")
        if not np.all(np.isfinite(values)):
            raise DataError("Error! Feature matrix contains non-finite values.")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


class GaussianStats(NamedTuple):
    mu: np.ndarray
    sigma: np.ndarray


def _sobel_magnitude(values: np.ndarray) -> np.ndarray:
    # Sobel scaled by 1/4 keeps each component within [-255, 255]
    padded = pad_reflect(values, 1)
    windows = sliding_window_view(padded, (3, 3))
    kernel_x = np.outer(_SMOOTH, _DIFF) / 4.0
    kernel_y = np.outer(_DIFF, _SMOOTH) / 4.0
    gx = np.einsum('ijkl,kl->ij', windows, kernel_x)
    gy = np.einsum('ijkl,kl->ij', windows, kernel_y)
    return np.hypot(gx, gy)


def extract_patchstats(img: Image) -> np.ndarray:
    """
    Deterministic 768-dimensional descriptor of an image.

    The image is resized to 128x128 and split into a 16x16 grid of 8x8 cells.
    Each cell contributes its mean intensity, intensity standard deviation and
    mean Sobel gradient magnitude, all divided by 255. Values are laid out
    cell by cell (row-major over the grid), three stats per cell.

    Args:
        img (Image): Any image; it is resized first

    Returns:
        np.ndarray: Feature vector of length 768
    """
    values = resize_bilinear(img, FEATURE_SIDE, FEATURE_SIDE).as_float()
    gradient = _sobel_magnitude(values)

    def cells(array):
        return array.reshape(CELLS_PER_SIDE, CELL_SIDE, CELLS_PER_SIDE, CELL_SIDE).transpose(0, 2, 1, 3).reshape(
            CELLS_PER_SIDE * CELLS_PER_SIDE, CELL_SIDE * CELL_SIDE
        )

    intensity_cells = cells(values)
    stats = np.stack([
        intensity_cells.mean(axis=1),
        intensity_cells.std(axis=1),
        cells(gradient).mean(axis=1)
    ], axis=1)
    return (stats / 255.0).reshape(-1)


def extract_features(images: Iterable[Image]) -> FeatureMatrix:
    rows = [extract_patchstats(img) for img in images]
    if not rows:
        raise DataError("Error! Cannot extract features from an empty image set.")
    return FeatureMatrix(np.vstack(rows))


def gaussian_stats(features, eps: float = 0.0) -> GaussianStats:
    """
    Mean and covariance of a feature matrix, with optional eps * I regularisation.

    Args:
        features (FeatureMatrix or array-like): n >= 2 samples
        eps (float): Ridge added to the covariance diagonal

    Returns:
        GaussianStats: (mu, sigma)
    """
    values = features.values if isinstance(features, FeatureMatrix) else np.asarray(features, dtype=np.float64)
    if eps < 0:
        raise ParameterError(f"Error! Regularisation eps must be non-negative, got {eps}.")

    mu, sigma = mean_and_covariance(values)
    n, d = values.shape
    if n < d + 1:
        logger.warning(
            "Only %d samples for %d-dimensional features; the covariance is rank deficient, consider eps > 0",
            n, d
        )
    if eps:
        sigma = sigma + eps * np.eye(d)
    return GaussianStats(mu, sigma)


def fid(real: GaussianStats, synthetic: GaussianStats, method: EigenMethod = "auto") -> float:
    """
    Frechet distance between two Gaussian fits.

    ||mu_r - mu_s||^2 + Tr(sigma_r) + Tr(sigma_s) - 2 Tr((sigma_r sigma_s)^(1/2)),
    with negatives down to -1e-6 clamped to 0.

    Raises:
        ParameterError: Dimension mismatch
        NotPsdError: A covariance is not positive semi-definite
    """
    mu_r = np.asarray(real.mu, dtype=np.float64)
    mu_s = np.asarray(synthetic.mu, dtype=np.float64)
    if mu_r.shape != mu_s.shape or np.shape(real.sigma) != np.shape(synthetic.sigma):
        raise ParameterError(
            f"Error! Feature dimensions differ: {mu_r.shape[0]} vs {mu_s.shape[0]}."
        )

    smallest = eigh(real.sigma, method=method).eigenvalues[-1]
    if smallest < -PSD_TOLERANCE:
        raise NotPsdError(
            f"Error! Real covariance is not positive semi-definite (eigenvalue {smallest:.3e}); "
            f"retry with eps regularisation."
        )
    try:
        cross = trace_sqrt_product(real.sigma, synthetic.sigma, method=method)
    except NotPsdError as e:
        raise NotPsdError(f"{e} Retry with eps regularisation.") from e

    diff = mu_r - mu_s
    value = float(diff @ diff + np.trace(real.sigma) + np.trace(synthetic.sigma) - 2.0 * cross)
    if value < 0.0:
        if value < -FID_CLAMP:
            logger.warning("FID came out at %.3e, below the round-off tolerance", value)
        value = 0.0
    return value


def fid_from_features(real, synthetic, eps: float = 0.0, method: EigenMethod = "auto") -> float:
    """Fit both feature matrices and return their Frechet distance."""
    return fid(gaussian_stats(real, eps), gaussian_stats(synthetic, eps), method=method)


def import_features(text: str) -> FeatureMatrix:
    """
    Parse comma-separated feature rows (no header, one sample per line).

    Raises:
        ManifestError: Empty input, ragged rows or a non-numeric token, naming the line
    """
    rows = []
    width = None
    for line_number, record in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not record or all(not cell.strip() for cell in record):
            continue
        try:
            row = [float(cell) for cell in record]
        except ValueError as e:
            raise ManifestError(f"Error! Non-numeric feature value on line {line_number}: {e}") from e
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ManifestError(
                f"Error! Feature row on line {line_number} has {len(row)} values, expected {width}."
            )
        rows.append(row)

    if not rows:
        raise ManifestError("Error! Feature CSV is empty.")
    return FeatureMatrix(np.array(rows, dtype=np.float64))


def export_features(features: FeatureMatrix) -> str:
    """Feature CSV text; %.17g keeps every double exact."""
    return ''.join(','.join(f"{v:.17g}" for v in row) + '\n' for row in features.values)


def stats_for_images(images: Sequence[Image], eps: float = 0.0) -> GaussianStats:
    return gaussian_stats(extract_features(images), eps)
