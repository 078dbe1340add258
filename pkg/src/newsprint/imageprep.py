"""Image normalisation and crop geometry for the OCR stage.

Pages are stored as 2-bit greyscale PNGs at a fixed dpi to keep the
corpus small.  Before a box is sent to the image-to-text backend it is
cut into overlapping tiles so that no crop exceeds the configured
height-to-width ratio; the final tile is re-anchored to the box bottom,
which can make it overlap its predecessor almost completely.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from PIL import Image

from .boxes import BoundingBox

log = logging.getLogger(__name__)

# 2-bit output: four evenly spaced grey levels.
_LEVELS = (0, 85, 170, 255)


@dataclass
class ImagePrepConfig:
    dpi: int = 120
    bit_depth: int = 2
    crop_ratio: float = 1.5
    overlap_fraction: float = 0.2
    deskew: bool = False
    deskew_range: float = 5.0
    deskew_step: float = 0.1

    def __post_init__(self):
        if self.crop_ratio <= 0:
            raise ValueError("crop_ratio must be > 0")
        if not 0 <= self.overlap_fraction < 1:
            raise ValueError("overlap_fraction must be in [0, 1)")


@dataclass
class TilePlan:
    """Ordered overlapping crops of one box, as (y_offset, height) pairs
    relative to the box crop."""

    box_id: str
    tiles: list[tuple[int, int]] = field(default_factory=list)
    crop_ratio: float = 1.5
    overlap_fraction: float = 0.2


def convert_bitonal(
    image_path: Union[str, Path],
    cfg: ImagePrepConfig,
    dest: Optional[Union[str, Path]] = None,
) -> Path:
    """Convert a page scan to a 2-bit PNG at the configured dpi.

    Resampling uses the source dpi metadata; when it is missing the
    pixel dimensions are kept and only the bit depth is reduced.
    Re-converting an already converted file is byte-stable.
    """
    src = Path(image_path)
    dest = Path(dest) if dest is not None else src.with_suffix(".bitonal.png")
    try:
        img = Image.open(src)
        img.load()
    except (OSError, ValueError) as exc:
        raise OSError(f"cannot read image {src}: {exc}") from exc

    src_dpi = img.info.get("dpi")
    gray = img.convert("L")
    if src_dpi and src_dpi[0] > 0:
        # PNG stores pixels-per-meter, so a nominal 120 dpi reads back as
        # 119.99; treat anything within 1% as already at target.
        if not math.isclose(src_dpi[0], cfg.dpi, rel_tol=0.01):
            scale = cfg.dpi / src_dpi[0]
            new_size = (round(gray.width * scale), round(gray.height * scale))
            gray = gray.resize(new_size, Image.LANCZOS)
    else:
        log.warning("%s: no dpi metadata, converting depth only", src)

    levels = np.asarray(gray, dtype=np.uint8) >> 6
    out = Image.fromarray(levels, mode="P")
    palette = []
    for v in _LEVELS:
        palette += [v, v, v]
    out.putpalette(palette)
    dest.parent.mkdir(parents=True, exist_ok=True)
    out.save(dest, format="PNG", bits=2, dpi=(cfg.dpi, cfg.dpi))
    return dest


def plan_tiles(box: BoundingBox, cfg: ImagePrepConfig) -> TilePlan:
    """Plan the overlapping vertical tiles for one box.

    Tile height is min(box height, crop_ratio * box width).  Tiles step
    down by tile_height * (1 - overlap_fraction), rounded so the overlap
    never falls below the requested fraction, and the final tile is
    re-anchored to end exactly at the box bottom.
    """
    w, h = box.width, box.height
    if w <= 0 or h <= 0:
        raise ValueError(f"box {box.id!r} has no area")

    t = max(1, int(cfg.crop_ratio * w + 1e-9))
    if h <= t:
        tiles = [(0, h)]
    else:
        overlap_px = math.ceil(cfg.overlap_fraction * t - 1e-9)
        stride = max(1, t - overlap_px)
        starts = [0]
        while starts[-1] + t < h:
            nxt = starts[-1] + stride
            if nxt + t >= h:
                nxt = h - t
            starts.append(nxt)
        tiles = [(s, t) for s in starts]
    return TilePlan(
        box_id=box.id,
        tiles=tiles,
        crop_ratio=cfg.crop_ratio,
        overlap_fraction=cfg.overlap_fraction,
    )


def crop_tile(page: Image.Image, box: BoundingBox, tile: tuple[int, int]) -> Image.Image:
    y_off, height = tile
    return page.crop((box.x1, box.y1 + y_off, box.x2, box.y1 + y_off + height))


def estimate_skew(
    image: Union[str, Path, Image.Image], cfg: Optional[ImagePrepConfig] = None
) -> float:
    """Estimate page rotation in degrees from the projection profile.

    Scans angles in [-deskew_range, +deskew_range] at deskew_step and
    returns the one whose horizontal projection profile is sharpest
    (highest energy of successive-row differences, which unlike the raw
    variance is insensitive to the profile span growing with the angle);
    rotating the image by the negated result straightens it.  Blank or
    structureless images return 0.0 with a warning.
    """
    cfg = cfg or ImagePrepConfig()
    if not isinstance(image, Image.Image):
        image = Image.open(image)
    arr = np.asarray(image.convert("L"))

    ys, xs = np.nonzero(arr < 128)
    if len(ys) == 0:
        log.warning("estimate_skew: blank image, returning 0.0")
        return 0.0

    xs = xs.astype(np.float64)
    ys = ys.astype(np.float64)
    steps = int(round(cfg.deskew_range / cfg.deskew_step))
    angles = [i * cfg.deskew_step for i in range(-steps, steps + 1)]

    best_angle, best_score = 0.0, -1.0
    scores = []
    for angle in angles:
        rows = np.rint(ys + xs * math.tan(math.radians(angle))).astype(np.int64)
        rows -= rows.min()
        profile = np.bincount(rows).astype(np.float64)
        score = float(np.sum(np.diff(profile) ** 2))
        scores.append(score)
        # Prefer the angle nearest zero on (float-exact) ties.
        if score > best_score or (score == best_score and abs(angle) < abs(best_angle)):
            best_angle, best_score = angle, score

    # Text pages score an order of magnitude above the median at the
    # aligned angle; noise stays near 1x.
    median_score = float(np.median(scores))
    if median_score <= 0 or best_score / median_score < 3.0:
        log.warning("estimate_skew: no dominant text angle, returning 0.0")
        return 0.0
    return best_angle


def deskew_image(image: Image.Image, angle: float) -> Image.Image:
    """Rotate by the negated estimated angle to straighten the page."""
    return image.rotate(-angle, resample=Image.BILINEAR, fillcolor=255)
