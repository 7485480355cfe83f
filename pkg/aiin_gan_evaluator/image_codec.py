"""
Image codec module: the 8-bit grayscale Image type, the PGM (P2/P5) codec and
Pillow-backed loading/saving of the other common raster formats.
"""
import io
import logging
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image as PilImage

from aiin_gan_evaluator.errors import ImageFormatError

logger = logging.getLogger(__name__)

_WHITESPACE = b" \t\r\n\v\f"
_PGM_SUFFIXES = ('.pgm', '.pnm')


def round_half_up(values):
    """Round to the nearest integer, halves going up (127.5 -> 128)."""
    return np.floor(np.asarray(values, dtype=np.float64) + 0.5)


class Image:
    """
    8-bit grayscale raster.

    The pixels are held as a (height, width) uint8 array in row-major order,
    so ``data.ravel()`` is the flat intensity sequence.
    """

    __slots__ = ('width', 'height', 'data')

    def __init__(self, width: int, height: int, data):
        if width < 1 or height < 1:
            raise ImageFormatError(f"Error! Image dimensions must be at least 1x1, got {width}x{height}.")

        array = np.asarray(data)
        if array.size != width * height:
            raise ImageFormatError(
                f"Error! Image data holds {array.size} values but {width}x{height} needs {width * height}."
            )
        if array.dtype != np.uint8:
            if np.any(array < 0) or np.any(array > 255):
                raise ImageFormatError("Error! Image intensities must lie in [0, 255].")
            array = array.astype(np.uint8)

        self.width = int(width)
        self.height = int(height)
        self.data = array.reshape(self.height, self.width).copy()
        self.data.setflags(write=False)

    @classmethod
    def from_array(cls, array) -> "Image":
        """Wrap a 2-D integer array already in [0, 255]."""
        array = np.asarray(array)
        if array.ndim != 2:
            raise ImageFormatError(f"Error! Expected a 2-D array, got {array.ndim} dimensions.")
        return cls(array.shape[1], array.shape[0], array)

    @classmethod
    def from_float(cls, array) -> "Image":
        """Round half-up and clamp a real-valued 2-D array into an Image."""
        rounded = np.clip(round_half_up(array), 0, 255).astype(np.uint8)
        return cls.from_array(rounded)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def as_float(self) -> np.ndarray:
        return self.data.astype(np.float64)

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.data, other.data)

    def __hash__(self):
        return hash((self.width, self.height, self.data.tobytes()))

    def __repr__(self):
        return f"Image({self.width}x{self.height})"


def _next_token(payload: bytes, pos: int) -> tuple[bytes, int]:
    """Return the next whitespace-delimited header token, skipping '#' comments."""
    size = len(payload)
    while pos < size:
        if payload[pos] in _WHITESPACE:
            pos += 1
        elif payload[pos] == ord('#'):
            while pos < size and payload[pos] not in b"\r\n":
                pos += 1
        else:
            break

    if pos >= size:
        raise ImageFormatError("Error! PGM data is truncated.")

    start = pos
    while pos < size and payload[pos] not in _WHITESPACE and payload[pos] != ord('#'):
        pos += 1
    return payload[start:pos], pos


def _parse_int(token: bytes, what: str) -> int:
    try:
        return int(token)
    except ValueError as e:
        raise ImageFormatError(f"Error! PGM {what} '{token.decode(errors='replace')}' is not an integer.") from e


def decode_pgm(payload: bytes) -> Image:
    """
    Decode a binary (P5) or ASCII (P2) PGM into an Image.

    Intensities are rescaled to [0, 255] as round(p * 255 / maxval), halves up.

    Args:
        payload (bytes): Complete file contents

    Returns:
        Image: Decoded raster

    Raises:
        ImageFormatError: Unknown magic, maxval outside [1, 255], zero dimension
            or truncated pixel payload
    """
    magic = payload[:2]
    if magic not in (b"P5", b"P2"):
        raise ImageFormatError(f"Error! Unknown PGM magic {magic!r}; expected P5 or P2.")

    pos = 2
    width_token, pos = _next_token(payload, pos)
    height_token, pos = _next_token(payload, pos)
    maxval_token, pos = _next_token(payload, pos)
    width = _parse_int(width_token, "width")
    height = _parse_int(height_token, "height")
    maxval = _parse_int(maxval_token, "maxval")

    if width < 1 or height < 1:
        raise ImageFormatError(f"Error! PGM declares a zero dimension ({width}x{height}).")
    if not 1 <= maxval <= 255:
        raise ImageFormatError(f"Error! PGM maxval {maxval} is outside [1, 255].")

    count = width * height
    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        start = pos + 1
        raster = payload[start:start + count]
        if len(raster) < count:
            raise ImageFormatError(f"Error! PGM payload is truncated: {len(raster)} of {count} bytes present.")
        values = np.frombuffer(raster, dtype=np.uint8).astype(np.int64)
    else:
        values = np.empty(count, dtype=np.int64)
        for i in range(count):
            token, pos = _next_token(payload, pos)
            values[i] = _parse_int(token, "pixel value")

    if np.any(values < 0) or np.any(values > maxval):
        raise ImageFormatError(f"Error! PGM pixel value outside [0, {maxval}].")

    if maxval != 255:
        # integer form of round-half-up(p * 255 / maxval)
        values = (values * 510 + maxval) // (2 * maxval)

    return Image(width, height, values.astype(np.uint8))


def encode_pgm(img: Image, binary: bool = True) -> bytes:
    """
    Encode an Image as PGM with maxval 255.

    Args:
        img (Image): Image to encode
        binary (bool): P5 when True, P2 (ASCII) otherwise

    Returns:
        bytes: File contents
    """
    if binary:
        return f"P5 {img.width} {img.height} 255\n".encode('ascii') + img.data.tobytes()

    rows = [' '.join(str(int(v)) for v in row) for row in img.data]
    return (f"P2 {img.width} {img.height} 255\n" + '\n'.join(rows) + '\n').encode('ascii')


def _format_from_extension(file_path: Path) -> str:
    """Pillow format name for a file extension (PNG when unknown)."""
    format_map = {
        '.png': 'PNG',
        '.webp': 'WEBP',
        '.jpg': 'JPEG',
        '.jpeg': 'JPEG',
        '.gif': 'GIF',
        '.bmp': 'BMP',
        '.tiff': 'TIFF',
        '.tif': 'TIFF'
    }
    return format_map.get(file_path.suffix.lower(), 'PNG')


def load_image(image_path: Union[str, Path]) -> Image:
    """
    Load a grayscale image from disk.

    PGM/PNM files go through the built-in codec; anything else is opened with
    Pillow and converted to 8-bit luminance.
    """
    image_path = Path(image_path)
    if not image_path.exists():
        raise FileNotFoundError(f"Error! Image file '{image_path}' does not exist!")

    payload = image_path.read_bytes()
    if image_path.suffix.lower() in _PGM_SUFFIXES or payload[:2] in (b"P5", b"P2"):
        try:
            return decode_pgm(payload)
        except ImageFormatError as e:
            raise ImageFormatError(f"{e} (file '{image_path}')") from e

    try:
        with PilImage.open(io.BytesIO(payload)) as pil_img:
            if pil_img.mode != 'L':
                logger.debug("Converting %s from mode %s to L", image_path.name, pil_img.mode)
            array = np.array(pil_img.convert('L'))
    except OSError as e:
        raise ImageFormatError(f"Error! Failed to read image '{image_path}': {e}") from e

    return Image.from_array(array)


def save_image(img: Image, image_path: Union[str, Path], binary: bool = True) -> Path:
    """
    Save an Image; PGM for .pgm/.pnm paths, Pillow for everything else.

    Returns:
        Path: The written path
    """
    image_path = Path(image_path)
    image_path.parent.mkdir(parents=True, exist_ok=True)

    if image_path.suffix.lower() in _PGM_SUFFIXES:
        image_path.write_bytes(encode_pgm(img, binary=binary))
    else:
        PilImage.fromarray(np.ascontiguousarray(img.data)).save(
            image_path, format=_format_from_extension(image_path)
        )
    return image_path
