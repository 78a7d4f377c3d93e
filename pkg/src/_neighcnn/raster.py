"""Read and write images.

Clean images are 8-bit grayscale PNG or PGM files. Speckled and despeckled images are
stored losslessly as single-channel float rasters with a small header:

=======  ======  ==========================================
offset   type    content
=======  ======  ==========================================
0        4 byte  magic ``SPKL``
4        u16     format version
6        u32     height
10       u32     width
14       2 byte  reserved, zero
16       f32     ``height * width`` values, row-major
=======  ======  ==========================================

All numbers are little-endian.

"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from _neighcnn.exceptions import DataError
from PIL import Image
from PIL import UnidentifiedImageError


__all__ = [
    "RASTER_SUFFIX",
    "is_image_file",
    "read_image",
    "read_raster",
    "write_image",
    "write_raster",
]


RASTER_MAGIC = b"SPKL"
RASTER_VERSION = 1
RASTER_SUFFIX = ".spkl"
_HEADER = struct.Struct("<4sHII2x")
_IMAGE_SUFFIXES = (".png", ".pgm")


def write_raster(path: Path, image: np.ndarray) -> None:
    """Write a two-dimensional image as a float raster."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError(f"Rasters are two-dimensional, got shape {image.shape}.")
    height, width = image.shape
    payload = np.ascontiguousarray(image, dtype="<f4").tobytes()
    Path(path).write_bytes(
        _HEADER.pack(RASTER_MAGIC, RASTER_VERSION, height, width) + payload
    )


def read_raster(path: Path) -> np.ndarray:
    """Read a float raster as a two-dimensional float32 array."""
    content = Path(path).read_bytes()
    if len(content) < _HEADER.size:
        raise DataError(f"{path} is too short to be a float raster.")
    magic, version, height, width = _HEADER.unpack_from(content)
    if magic != RASTER_MAGIC:
        raise DataError(f"{path} is not a float raster, the magic is {magic!r}.")
    if version != RASTER_VERSION:
        raise DataError(
            f"{path} has raster format version {version}, but only version "
            f"{RASTER_VERSION} is supported."
        )
    expected = _HEADER.size + 4 * height * width
    if len(content) != expected:
        raise DataError(
            f"{path} has {len(content)} bytes, but a {height}x{width} raster needs "
            f"{expected}."
        )
    data = np.frombuffer(content, dtype="<f4", offset=_HEADER.size)
    return data.reshape(height, width).astype(np.float32)


def read_image(path: Path) -> np.ndarray:
    """Read an image as a two-dimensional float64 array.

    Float rasters are returned as stored. 8-bit images are divided by 255. Color
    images are converted to grayscale.

    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"The image {path} does not exist.")
    if path.suffix.lower() == RASTER_SUFFIX:
        return read_raster(path).astype(np.float64)

    try:
        with Image.open(path) as image:
            if image.mode in ("RGB", "RGBA", "P", "LA"):
                image = image.convert("L")
            if image.mode != "L":
                raise DataError(
                    f"{path} has the image mode {image.mode!r}, but only 8-bit images "
                    "are supported."
                )
            array = np.asarray(image, dtype=np.uint8)
    except (UnidentifiedImageError, OSError) as e:
        raise DataError(f"Could not read the image {path}: {e}") from e

    return array.astype(np.float64) / 255.0


def write_image(path: Path, image: np.ndarray) -> None:
    """Write an 8-bit grayscale image, clipping values to [0, 1]."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError(f"Images are two-dimensional, got shape {image.shape}.")
    array = np.rint(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(array).save(path)


def is_image_file(path: Path) -> bool:
    return path.is_file() and path.suffix.lower() in _IMAGE_SUFFIXES
