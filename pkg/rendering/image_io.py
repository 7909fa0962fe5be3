"""
Image storage through OpenCV: RGB as binary PPM (P6, maxval 255), depth as
binary 16-bit PGM (P5, maxval 65535, millimeters, 0 = no measurement).
"""
from pathlib import Path

import cv2
import numpy as np

from config import Config
from utils.errors import MissingFile, ParseError


def _imread(path):
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"image not found: {path}")
    image = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if image is None:
        raise ParseError(0, f"unreadable image {path}")
    return image


def _imwrite(path, image):
    if not cv2.imwrite(str(path), image):
        raise ParseError(0, f"could not encode image {path}")


def write_ppm(path, rgb):
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    _imwrite(path, cv2.cvtColor(rgb, cv2.COLOR_RGB2BGR))


def read_ppm(path):
    image = _imread(path)
    if image.dtype != np.uint8 or image.ndim != 3 or image.shape[2] != 3:
        raise ParseError(0, f"expected an 8-bit RGB image in {path}, got {image.dtype} {image.shape}")
    return cv2.cvtColor(image, cv2.COLOR_BGR2RGB)


def encode_depth(depth):
    """
    Meters to 16-bit millimeters. Returns (values, clamped_pixel_count).
    """
    depth = np.asarray(depth, dtype=float)
    clamped = int(np.sum(depth > Config.DEPTH_MAX_M))
    mm = np.rint(np.clip(depth, 0.0, Config.DEPTH_MAX_M) * 1000.0)
    return mm.astype(np.uint16), clamped


def decode_depth(values):
    return values.astype(float) / 1000.0


def write_depth_pgm(path, depth):
    """Writes depth in meters; returns how many pixels were clamped."""
    values, clamped = encode_depth(depth)
    _imwrite(path, values)
    return clamped


def read_depth_pgm(path):
    values = _imread(path)
    if values.dtype != np.uint16 or values.ndim != 2:
        raise ParseError(0, f"expected a 16-bit depth image in {path}, got {values.dtype} {values.shape}")
    return decode_depth(values)


def quantize_depth(depth):
    """Depth as it reads back after a write/read cycle."""
    return decode_depth(encode_depth(depth)[0])
