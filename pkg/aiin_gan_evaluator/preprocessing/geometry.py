"""
Geometric resampling: half-pixel aligned bilinear resize and affine warps
about the image centre.
"""
import numpy as np

from aiin_gan_evaluator.errors import ParameterError
from aiin_gan_evaluator.image_codec import Image


def _resize_axis(in_size: int, out_size: int):
    # source coordinate of each destination pixel centre, clamped to the raster
    src = (np.arange(out_size) + 0.5) * (in_size / out_size) - 0.5
    src = np.clip(src, 0.0, in_size - 1)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, in_size - 1)
    return i0, i1, src - i0


def resize_bilinear(img: Image, out_w: int, out_h: int) -> Image:
    """
    Resize with bilinear sampling at half-pixel-aligned centres.

    Args:
        img (Image): Source image
        out_w (int): Target width, at least 1
        out_h (int): Target height, at least 1

    Returns:
        Image: Resized image (the input itself when the size is unchanged)
    """
    if out_w < 1 or out_h < 1:
        raise ParameterError(f"Error! Target size must be at least 1x1, got {out_w}x{out_h}.")
    if (out_w, out_h) == (img.width, img.height):
        return img

    x0, x1, fx = _resize_axis(img.width, out_w)
    y0, y1, fy = _resize_axis(img.height, out_h)
    fx = fx[None, :]
    fy = fy[:, None]

    src = img.as_float()
    top = (1.0 - fx) * src[y0[:, None], x0[None, :]] + fx * src[y0[:, None], x1[None, :]]
    bottom = (1.0 - fx) * src[y1[:, None], x0[None, :]] + fx * src[y1[:, None], x1[None, :]]
    return Image.from_float((1.0 - fy) * top + fy * bottom)


def affine_matrix(rotation_deg: float, shear: float, zoom: float) -> np.ndarray:
    """Forward 2x2 transform: rotation, then shear along x, then isotropic zoom 1 + zoom."""
    theta = np.deg2rad(rotation_deg)
    rotation = np.array([[np.cos(theta), -np.sin(theta)],
                         [np.sin(theta), np.cos(theta)]])
    shearing = np.array([[1.0, shear],
                         [0.0, 1.0]])
    return rotation @ shearing * (1.0 + zoom)


def warp_affine(img: Image, matrix: np.ndarray, fill: float = 0.0) -> Image:
    """
    Apply a 2x2 linear map about the image centre with bilinear sampling.

    Each output pixel is pulled from the inverse-mapped source position;
    samples falling outside the raster take the fill value.
    """
    inverse = np.linalg.inv(matrix)
    cx = (img.width - 1) / 2.0
    cy = (img.height - 1) / 2.0

    ys, xs = np.mgrid[0:img.height, 0:img.width].astype(np.float64)
    dx = xs - cx
    dy = ys - cy
    src_x = inverse[0, 0] * dx + inverse[0, 1] * dy + cx
    src_y = inverse[1, 0] * dx + inverse[1, 1] * dy + cy

    x0 = np.floor(src_x).astype(np.int64)
    y0 = np.floor(src_y).astype(np.int64)
    fx = src_x - x0
    fy = src_y - y0

    padded = np.pad(img.as_float(), 1, mode='constant', constant_values=fill)

    def sample(yy, xx):
        # shift by one for the fill border; anything further out is fill
        inside = (xx >= -1) & (xx <= img.width) & (yy >= -1) & (yy <= img.height)
        values = padded[np.clip(yy + 1, 0, img.height + 1), np.clip(xx + 1, 0, img.width + 1)]
        return np.where(inside, values, fill)

    top = (1.0 - fx) * sample(y0, x0) + fx * sample(y0, x0 + 1)
    bottom = (1.0 - fx) * sample(y0 + 1, x0) + fx * sample(y0 + 1, x0 + 1)
    return Image.from_float((1.0 - fy) * top + fy * bottom)
