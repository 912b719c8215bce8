"""PNG <-> float conversion and grid tiling for the command line tools."""

from __future__ import annotations

import numpy as np
from PIL import Image

from .params import round_half_away


def load_png(path) -> np.ndarray:
    """Read a PNG into a (3, H, W) float64 array in [-1, 1]."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return np.ascontiguousarray(arr.transpose(2, 0, 1)) / 127.5 - 1.0


def to_uint8(img: np.ndarray) -> np.ndarray:
    """Map (3, H, W) float values back to 8-bit with half-away rounding."""
    v = round_half_away((np.asarray(img, dtype=np.float64) + 1.0) * 127.5)
    return np.clip(v, 0, 255).astype(np.uint8)


def save_png(path, img: np.ndarray) -> None:
    Image.fromarray(to_uint8(img).transpose(1, 2, 0)).save(path, format="PNG")


def tile_grid(images: list[np.ndarray], rows: int, cols: int) -> np.ndarray:
    """Tile (3, H, W) images row-major into one (3, rows*H, cols*W) image."""
    if len(images) != rows * cols:
        raise ValueError(f"need {rows * cols} tiles, got {len(images)}")
    c, h, w = images[0].shape
    out = np.zeros((c, rows * h, cols * w))
    for k, img in enumerate(images):
        r, q = divmod(k, cols)
        out[:, r * h:(r + 1) * h, q * w:(q + 1) * w] = img
    return out
