"""Uniform local binary patterns and the regional histogram face descriptor."""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import BadSizeError, ImageTooSmallError, OutOfBoundsError
from .signal_io import GrayImage

FACE_WIDTH = 112
FACE_HEIGHT = 128
GRID_COLS = 7
GRID_ROWS = 8
N_UNIFORM = 58
N_BINS = N_UNIFORM + 1
FEATURE_LEN = GRID_COLS * GRID_ROWS * N_BINS  # 3304

# (dx, dy), clockwise from the top-left neighbor; first one is the MSB
NEIGHBORS = ((-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0))


def lbp_code(img: GrayImage, x: int, y: int) -> int:
    """8-bit code at (x, y); a neighbor at least as bright as the center sets its bit."""
    if not (1 <= x <= img.width - 2 and 1 <= y <= img.height - 2):
        raise OutOfBoundsError(f"({x}, {y}) has no full 8-neighborhood in a "
                               f"{img.width}x{img.height} image")
    px = img.pixels
    center = px[y, x]
    code = 0
    for dx, dy in NEIGHBORS:
        code = (code << 1) | int(px[y + dy, x + dx] >= center)
    return code


def transitions(code: int) -> int:
    """Number of 0/1 changes around the circular 8-bit string."""
    rotated = ((code << 1) | (code >> 7)) & 0xFF
    return bin(code ^ rotated).count("1")


@lru_cache(maxsize=None)
def _uniform_table() -> tuple:
    table = []
    next_bin = 0
    for code in range(256):
        if transitions(code) <= 2:
            table.append(next_bin)
            next_bin += 1
        else:
            table.append(N_UNIFORM)
    assert next_bin == N_UNIFORM
    return tuple(table)


def build_uniform_map() -> np.ndarray:
    """Lookup table code -> histogram bin.  Uniform codes get bins 0..57 in
    ascending code order, everything else shares bin 58."""
    return np.array(_uniform_table(), dtype=np.int64)


def lbp_image(img: GrayImage) -> np.ndarray:
    """Codes for every interior pixel, shape (H-2, W-2)."""
    if img.width < 3 or img.height < 3:
        raise ImageTooSmallError(f"LBP needs at least 3x3, got {img.width}x{img.height}")
    px = img.pixels.astype(np.int16)
    h, w = px.shape
    center = px[1:h - 1, 1:w - 1]
    codes = np.zeros_like(center, dtype=np.int64)
    for dx, dy in NEIGHBORS:
        neighbor = px[1 + dy: h - 1 + dy, 1 + dx: w - 1 + dx]
        codes = (codes << 1) | (neighbor >= center)
    return codes


def region_bounds(length: int, parts: int) -> np.ndarray:
    return (np.arange(parts + 1) * length) // parts


def facial_feature_vector(face: GrayImage) -> np.ndarray:
    """3304 raw counts: a 59-bin uniform-LBP histogram for each cell of a
    7-column x 8-row grid, cells taken row by row."""
    if (face.width, face.height) != (FACE_WIDTH, FACE_HEIGHT):
        raise BadSizeError(f"face must be {FACE_WIDTH}x{FACE_HEIGHT}, "
                           f"got {face.width}x{face.height}")
    bins = build_uniform_map()[lbp_image(face)]
    ys = region_bounds(bins.shape[0], GRID_ROWS)
    xs = region_bounds(bins.shape[1], GRID_COLS)
    hists = [
        np.bincount(bins[ys[r]:ys[r + 1], xs[c]:xs[c + 1]].ravel(), minlength=N_BINS)
        for r in range(GRID_ROWS)
        for c in range(GRID_COLS)
    ]
    return np.concatenate(hists).astype(np.int64)
