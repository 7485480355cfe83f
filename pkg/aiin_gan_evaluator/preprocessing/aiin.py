"""
Adaptive input-image normalization (AIIN): contrast-limited adaptive histogram
equalization over a grid of tiles with bilinear blending of per-tile mappings.
"""
import logging
from dataclasses import dataclass

import numpy as np

from aiin_gan_evaluator.errors import ParameterError
from aiin_gan_evaluator.image_codec import Image
from aiin_gan_evaluator.preprocessing.generic import ImagePreprocessor

logger = logging.getLogger(__name__)

# grids and thresholds examined in the source study
STUDIED_GRIDS = ((4, 4), (8, 8), (16, 16))
STUDIED_THRESHOLDS = (0, 5, 10, 20, 50)

N_LEVELS = 256


@dataclass(frozen=True)
class WindowGrid:
    """Number of tiles per axis (not tile size in pixels)."""

    tiles_x: int
    tiles_y: int

    def __post_init__(self):
        if self.tiles_x < 1 or self.tiles_y < 1:
            raise ParameterError(f"Error! Window grid must be at least 1x1, got {self.tiles_x}x{self.tiles_y}.")

    @classmethod
    def parse(cls, text: str) -> "WindowGrid":
        """Parse 'WxH' (e.g. '8x8')."""
        try:
            tiles_x, tiles_y = (int(part) for part in text.lower().split('x'))
        except ValueError as e:
            raise ParameterError(f"Error! Window grid '{text}' is not of the form WxH.") from e
        return cls(tiles_x, tiles_y)

    @property
    def label(self) -> str:
        return f"{self.tiles_x}x{self.tiles_y}"


def clip_and_redistribute(hist, clip_limit: int) -> np.ndarray:
    """
    Clip every bin at clip_limit and spread the clipped mass back over all bins.

    The excess is shared as floor(excess / nbins) per bin, with the remaining
    excess % nbins units going one each to the lowest-index bins. Total mass is
    preserved exactly; there is no iterative re-clipping.

    Args:
        hist (array-like): Non-negative integer bin counts (any bin count)
        clip_limit (int): Per-bin cap, at least 1

    Returns:
        np.ndarray: Redistributed int64 histogram
    """
    if clip_limit < 1:
        raise ParameterError(f"Error! Clip limit must be at least 1, got {clip_limit}.")

    hist = np.asarray(hist, dtype=np.int64)
    clipped = np.minimum(hist, clip_limit)
    excess = int(hist.sum() - clipped.sum())

    base, residual = divmod(excess, hist.size)
    redistributed = clipped + base
    redistributed[:residual] += 1
    return redistributed


def clip_limit_for(threshold: int, tile_area: int) -> int:
    """Map a contrast threshold to an absolute clip limit for one tile."""
    return max(1, (threshold * tile_area) // N_LEVELS)


def _tile_edges(length: int, tiles: int) -> np.ndarray:
    # the last tile absorbs the remainder pixels
    step = length // tiles
    edges = [i * step for i in range(tiles)]
    edges.append(length)
    return np.asarray(edges, dtype=np.int64)


def tile_luts(img: Image, grid: WindowGrid, threshold: int) -> np.ndarray:
    """
    Build the equalization mapping of every tile.

    Returns:
        np.ndarray: (tiles_y, tiles_x, 256) int64 lookup tables, each monotone
    """
    x_edges = _tile_edges(img.width, grid.tiles_x)
    y_edges = _tile_edges(img.height, grid.tiles_y)
    luts = np.empty((grid.tiles_y, grid.tiles_x, N_LEVELS), dtype=np.int64)

    for ty in range(grid.tiles_y):
        for tx in range(grid.tiles_x):
            region = img.data[y_edges[ty]:y_edges[ty + 1], x_edges[tx]:x_edges[tx + 1]]
            area = region.size
            hist = np.bincount(region.ravel(), minlength=N_LEVELS)
            hist = clip_and_redistribute(hist, clip_limit_for(threshold, area))
            cdf = np.cumsum(hist)
            # round-half-up(255 * cdf / area) in integer arithmetic
            luts[ty, tx] = (510 * cdf + area) // (2 * area)

    return luts


def _interpolation_axis(centers: np.ndarray, coords: np.ndarray):
    """Indices of the two bracketing tile centers and the blend fraction, clamped at borders."""
    last = centers.size - 1
    lower = np.searchsorted(centers, coords, side='right') - 1
    i0 = np.clip(lower, 0, last)
    i1 = np.clip(lower + 1, 0, last)
    span = centers[i1] - centers[i0]
    safe_span = np.where(span > 0, span, 1.0)
    frac = np.where(i1 != i0, (coords - centers[i0]) / safe_span, 0.0)
    return i0, i1, frac


def aiin_normalize(img: Image, grid: WindowGrid, threshold: int) -> Image:
    """
    Contrast-limited adaptive histogram equalization.

    Args:
        img (Image): Input image, at least as large as the grid
        grid (WindowGrid): Tiles per axis
        threshold (int): Contrast threshold; clip limit is
            max(1, floor(threshold * tile_area / 256)), so 0 flattens maximally

    Returns:
        Image: Normalized image with the input's dimensions

    Raises:
        ParameterError: Grid larger than the image or negative threshold
    """
    if threshold < 0:
        raise ParameterError(f"Error! Contrast threshold must be non-negative, got {threshold}.")
    if grid.tiles_x > img.width or grid.tiles_y > img.height:
        raise ParameterError(
            f"Error! Window grid {grid.label} is larger than the {img.width}x{img.height} image."
        )

    luts = tile_luts(img, grid, threshold)

    x_edges = _tile_edges(img.width, grid.tiles_x)
    y_edges = _tile_edges(img.height, grid.tiles_y)
    x_centers = (x_edges[:-1] + x_edges[1:]) / 2.0
    y_centers = (y_edges[:-1] + y_edges[1:]) / 2.0

    ix0, ix1, fx = _interpolation_axis(x_centers, np.arange(img.width) + 0.5)
    iy0, iy1, fy = _interpolation_axis(y_centers, np.arange(img.height) + 0.5)
    fx = fx[None, :]
    fy = fy[:, None]

    values = img.data
    rows0 = iy0[:, None]
    rows1 = iy1[:, None]
    cols0 = ix0[None, :]
    cols1 = ix1[None, :]

    top = (1.0 - fx) * luts[rows0, cols0, values] + fx * luts[rows0, cols1, values]
    bottom = (1.0 - fx) * luts[rows1, cols0, values] + fx * luts[rows1, cols1, values]
    return Image.from_float((1.0 - fy) * top + fy * bottom)


class AiinNormalizer(ImagePreprocessor):
    """AIIN preprocessing with a fixed grid and contrast threshold."""

    tag = "aiin"

    def __init__(self, grid: WindowGrid, threshold: int):
        if threshold < 0:
            raise ParameterError(f"Error! Contrast threshold must be non-negative, got {threshold}.")
        if (grid.tiles_x, grid.tiles_y) not in STUDIED_GRIDS:
            logger.info("Window grid %s is outside the studied grids %s", grid.label, STUDIED_GRIDS)
        if threshold not in STUDIED_THRESHOLDS:
            logger.info("Contrast threshold %d is outside the studied values %s", threshold, STUDIED_THRESHOLDS)

        self._grid = grid
        self._threshold = threshold

    @property
    def window(self) -> str:
        return self._grid.label

    @property
    def threshold(self) -> int:
        return self._threshold

    def apply(self, img: Image) -> Image:
        return aiin_normalize(img, self._grid, self._threshold)
