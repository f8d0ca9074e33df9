"""Haar-cascade face localization (evaluation only, no training).

Cascade files are JSON::

    {"window": [24, 24],
     "stages": [{"threshold": 0.5,
                 "stumps": [{"rects": [[x, y, w, h, weight], ...],
                             "threshold": 1.0, "left": 0.0, "right": 1.0}]}]}

A stump contributes ``left`` when its feature value is below ``threshold`` and
``right`` otherwise; a stage passes when the sum of its stumps reaches the stage
threshold.  Feature values are rectangle sums divided by the window's pixel
standard deviation (floored at 1) and by the area ratio to the base window.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Tuple

import numpy as np

from .errors import CascadeParseError, EmptyStageError, ImageTooSmallError, RectOutOfWindowError
from .lbp_features import FACE_HEIGHT, FACE_WIDTH
from .signal_io import GrayImage

BASE_WINDOW = 24
SCALE_FACTOR = 1.25
GROUP_IOU = 0.5
STD_FLOOR = 1.0


@dataclass(frozen=True, eq=False)
class IntegralImage:
    """Summed-area tables padded with a leading zero row and column."""

    sums: np.ndarray
    sq_sums: np.ndarray

    @property
    def width(self) -> int:
        return self.sums.shape[1] - 1

    @property
    def height(self) -> int:
        return self.sums.shape[0] - 1

    def rect_sum(self, x: int, y: int, w: int, h: int) -> int:
        s = self.sums
        return int(s[y + h, x + w] - s[y, x + w] - s[y + h, x] + s[y, x])

    def rect_sq_sum(self, x: int, y: int, w: int, h: int) -> int:
        s = self.sq_sums
        return int(s[y + h, x + w] - s[y, x + w] - s[y + h, x] + s[y, x])


@dataclass(frozen=True)
class HaarFeature:
    rects: Tuple[Tuple[int, int, int, int, float], ...]

    @property
    def kind(self) -> str:
        return {2: "two-rectangle", 3: "three-rectangle", 4: "four-rectangle"}[len(self.rects)]


@dataclass(frozen=True)
class Stump:
    feature: HaarFeature
    threshold: float
    left: float
    right: float


@dataclass(frozen=True)
class Stage:
    stumps: Tuple[Stump, ...]
    threshold: float


@dataclass(frozen=True)
class Cascade:
    stages: Tuple[Stage, ...]
    window: Tuple[int, int] = (BASE_WINDOW, BASE_WINDOW)

    def to_dict(self) -> dict:
        return {
            "window": list(self.window),
            "stages": [
                {
                    "threshold": st.threshold,
                    "stumps": [
                        {"rects": [list(r) for r in sp.feature.rects],
                         "threshold": sp.threshold, "left": sp.left, "right": sp.right}
                        for sp in st.stumps
                    ],
                }
                for st in self.stages
            ],
        }


@dataclass(frozen=True)
class FaceBox:
    x: int
    y: int
    w: int
    h: int

    def iou(self, other: "FaceBox") -> float:
        ix = max(0, min(self.x + self.w, other.x + other.w) - max(self.x, other.x))
        iy = max(0, min(self.y + self.h, other.y + other.h) - max(self.y, other.y))
        inter = ix * iy
        union = self.w * self.h + other.w * other.h - inter
        return inter / union if union else 0.0


def integral_image(img: GrayImage) -> IntegralImage:
    px = img.pixels.astype(np.int64)
    sums = np.zeros((img.height + 1, img.width + 1), dtype=np.int64)
    sq = np.zeros_like(sums)
    sums[1:, 1:] = px.cumsum(0).cumsum(1)
    sq[1:, 1:] = (px * px).cumsum(0).cumsum(1)
    return IntegralImage(sums, sq)


# -- cascade files -----------------------------------------------------------

def cascade_from_dict(doc: dict) -> Cascade:
    try:
        window = tuple(int(v) for v in doc.get("window", (BASE_WINDOW, BASE_WINDOW)))
        raw_stages = doc["stages"]
        if len(window) != 2 or not isinstance(raw_stages, list):
            raise CascadeParseError("'window' must be [w, h] and 'stages' a list")
        if window != (BASE_WINDOW, BASE_WINDOW):
            raise CascadeParseError(f"base window must be 24x24, got {list(window)}")
        if not raw_stages:
            raise EmptyStageError("cascade has no stages")
        stages = []
        for si, st in enumerate(raw_stages):
            if not st.get("stumps"):
                raise EmptyStageError(f"stage {si} has no stumps")
            stumps = []
            for sp in st["stumps"]:
                rects = tuple(
                    (int(x), int(y), int(w), int(h), float(wt))
                    for x, y, w, h, wt in sp["rects"]
                )
                if not 2 <= len(rects) <= 4:
                    raise CascadeParseError(
                        f"stage {si}: a Haar feature needs 2-4 rectangles, got {len(rects)}")
                for x, y, w, h, _ in rects:
                    if x < 0 or y < 0 or w < 1 or h < 1 or x + w > window[0] or y + h > window[1]:
                        raise RectOutOfWindowError(
                            f"stage {si}: rect {[x, y, w, h]} outside {window[0]}x{window[1]}")
                stumps.append(Stump(HaarFeature(rects), float(sp["threshold"]),
                                    float(sp["left"]), float(sp["right"])))
            stages.append(Stage(tuple(stumps), float(st["threshold"])))
    except (KeyError, TypeError, ValueError) as exc:
        raise CascadeParseError(f"malformed cascade: {exc!r}") from exc
    return Cascade(tuple(stages), window)


def load_cascade(path) -> Cascade:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CascadeParseError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise CascadeParseError(f"{path}: top level must be an object")
    return cascade_from_dict(doc)


def save_cascade(cascade: Cascade, path) -> None:
    Path(path).write_text(json.dumps(cascade.to_dict(), indent=2) + "\n", encoding="utf-8")


def default_cascade_path() -> Path:
    """The tiny bright-top-half cascade bundled with the package."""
    return Path(__file__).with_name("data") / "bright_top_cascade.json"


# -- evaluation --------------------------------------------------------------

def _box_sums(table: np.ndarray, xs: np.ndarray, ys: np.ndarray, w: int, h: int) -> np.ndarray:
    return (table[ys + h, xs + w] - table[ys, xs + w]
            - table[ys + h, xs] + table[ys, xs]).astype(np.float64)


def _scaled_rect(rect, scale: float, win: int):
    x, y, w, h, weight = rect
    sx, sy = int(round(x * scale)), int(round(y * scale))
    sw = max(1, min(int(round(w * scale)), win - sx))
    sh = max(1, min(int(round(h * scale)), win - sy))
    return sx, sy, sw, sh, weight


def _scaled_rects(rects, scale: float, win: int):
    """Scale a feature's rectangles to the window.

    Rounding can leave the halves of a balanced feature with unequal areas, which
    would make flat patches respond. The first weight is rescaled to restore a
    zero net area whenever the unscaled feature had one.
    """
    out = [_scaled_rect(r, scale, win) for r in rects]
    if sum(w * rw * rh for _, _, rw, rh, w in rects) == 0:
        rest = sum(w * rw * rh for _, _, rw, rh, w in out[1:])
        x, y, rw, rh, _ = out[0]
        out[0] = (x, y, rw, rh, -rest / (rw * rh))
    return out


def window_size(scale: float) -> int:
    return int(round(BASE_WINDOW * scale))


def eval_positions(ii: IntegralImage, cascade: Cascade, xs: np.ndarray, ys: np.ndarray,
                   scale: float) -> np.ndarray:
    """Vectorized cascade evaluation; returns an acceptance mask aligned with xs/ys."""
    xs = np.asarray(xs, dtype=np.int64)
    ys = np.asarray(ys, dtype=np.int64)
    win = window_size(scale)
    area = float(win * win)
    mean = _box_sums(ii.sums, xs, ys, win, win) / area
    var = _box_sums(ii.sq_sums, xs, ys, win, win) / area - mean * mean
    std = np.maximum(np.sqrt(np.maximum(var, 0.0)), STD_FLOOR)
    norm = std * (area / (BASE_WINDOW * BASE_WINDOW))

    alive = np.ones(xs.shape, dtype=bool)
    for stage in cascade.stages:
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        px, py = xs[idx], ys[idx]
        total = np.zeros(idx.size)
        for stump in stage.stumps:
            value = np.zeros(idx.size)
            for rect in _scaled_rects(stump.feature.rects, scale, win):
                rx, ry, rw, rh, weight = rect
                value += weight * _box_sums(ii.sums, px + rx, py + ry, rw, rh)
            value /= norm[idx]
            total += np.where(value < stump.threshold, stump.left, stump.right)
        alive[idx[total < stage.threshold]] = False
    return alive


def eval_window(ii: IntegralImage, cascade: Cascade, x: int, y: int, scale: float) -> bool:
    """Run the cascade on one window; stops at the first failing stage."""
    win = window_size(scale)
    if x < 0 or y < 0 or x + win > ii.width or y + win > ii.height:
        raise ValueError(f"window {win}px at ({x}, {y}) does not fit the image")
    return bool(eval_positions(ii, cascade, np.array([x]), np.array([y]), scale)[0])


def _group(hits: List[FaceBox]) -> List[List[FaceBox]]:
    parent = list(range(len(hits)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(hits)):
        for j in range(i + 1, len(hits)):
            if hits[i].iou(hits[j]) >= GROUP_IOU:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups = {}
    for i in range(len(hits)):
        groups.setdefault(find(i), []).append(hits[i])
    # stable: larger groups first, then order of first raw hit
    return sorted(groups.values(), key=len, reverse=True)


def scan_scales(width: int, height: int) -> List[float]:
    """Scales 1, 1.25, 1.25**2, ... while the scaled window fits the image."""
    scales = []
    k = 0
    while window_size(SCALE_FACTOR ** k) <= min(width, height):
        scales.append(SCALE_FACTOR ** k)
        k += 1
    return scales


def detect_faces(img: GrayImage, cascade: Cascade) -> List[FaceBox]:
    if img.width < BASE_WINDOW or img.height < BASE_WINDOW:
        raise ImageTooSmallError(
            f"image {img.width}x{img.height} smaller than the {BASE_WINDOW}px window")
    ii = integral_image(img)
    hits: List[FaceBox] = []
    for scale in scan_scales(img.width, img.height):
        win = window_size(scale)
        step = max(1, int(round(scale)))
        gy, gx = np.mgrid[0:img.height - win + 1:step, 0:img.width - win + 1:step]
        xs, ys = gx.ravel(), gy.ravel()
        mask = eval_positions(ii, cascade, xs, ys, scale)
        hits.extend(FaceBox(int(x), int(y), win, win) for x, y in zip(xs[mask], ys[mask]))

    boxes = []
    for group in _group(hits):
        size = int(round(np.mean([b.w for b in group])))
        x = int(round(np.mean([b.x for b in group])))
        y = int(round(np.mean([b.y for b in group])))
        x = min(max(0, x), img.width - size)
        y = min(max(0, y), img.height - size)
        boxes.append(FaceBox(x, y, size, size))
    return boxes


def crop_face(img: GrayImage, box: FaceBox, width: int = FACE_WIDTH,
              height: int = FACE_HEIGHT) -> GrayImage:
    """Nearest-neighbor resample of ``box`` to the descriptor's face size."""
    if box.x < 0 or box.y < 0 or box.x + box.w > img.width or box.y + box.h > img.height:
        raise ValueError(f"{box} lies outside the {img.width}x{img.height} image")
    rows = box.y + (np.arange(height) * box.h) // height
    cols = box.x + (np.arange(width) * box.w) // width
    return GrayImage(img.pixels[np.ix_(rows, cols)])


def largest_face(img: GrayImage, cascade: Cascade) -> FaceBox | None:
    boxes = detect_faces(img, cascade)
    return boxes[0] if boxes else None


def bright_top_cascade(threshold: float = 450.0) -> Cascade:
    """One-stump cascade accepting windows whose top half outshines the bottom half."""
    feature = HaarFeature(((0, 0, 24, 12, 1.0), (0, 12, 24, 12, -1.0)))
    return Cascade((Stage((Stump(feature, threshold, 0.0, 1.0),), 0.5),))
