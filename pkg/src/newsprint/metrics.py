"""Pixel-mask quality scores for a page's bounding-box set.

Coverage is the fraction of page pixels inside at least one box and
overlap the fraction inside at least two.  Both are computed with a
coordinate-compression sweep, which is exact for integer pixel
rectangles: within a compressed cell every pixel has the same box
count, so the cell contributes area * (count predicate) just as a
per-pixel mask would.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boxes import BoundingBox, PageLayout


@dataclass(frozen=True)
class LayoutScore:
    coverage: float
    overlap: float


def coverage_mask(layout: PageLayout) -> np.ndarray:
    """Dense per-pixel box count, shape (height, width).

    Materialises the full mask; intended for small pages and for
    checking the sweep implementation, not for production scoring.
    """
    mask = np.zeros((layout.height, layout.width), dtype=np.int32)
    for b in layout.boxes:
        x1, y1, x2, y2 = _clip(b, layout.width, layout.height)
        if x1 < x2 and y1 < y2:
            mask[y1:y2, x1:x2] += 1
    return mask


def score_layout(layout: PageLayout, print_area_denominator: bool = False) -> LayoutScore:
    """Coverage and overlap fractions for one page.

    The denominator is the full page area width*height.  Passing
    ``print_area_denominator=True`` divides by the print-area size
    instead (an off-by-default variant; the page denominator is the
    reference definition).
    """
    if layout.width <= 0 or layout.height <= 0:
        raise ValueError(f"page {layout.page_id!r} has non-positive dimensions")
    denom = layout.width * layout.height
    if print_area_denominator:
        if layout.print_area is None:
            raise ValueError("print_area_denominator requires layout.print_area")
        px1, py1, px2, py2 = layout.print_area
        denom = max(1, (px2 - px1) * (py2 - py1))

    covered, overlapped = _sweep_areas(layout)
    return LayoutScore(coverage=covered / denom, overlap=overlapped / denom)


def _clip(b: BoundingBox, width: int, height: int) -> tuple[int, int, int, int]:
    return (
        max(0, min(b.x1, width)),
        max(0, min(b.y1, height)),
        max(0, min(b.x2, width)),
        max(0, min(b.y2, height)),
    )


def _sweep_areas(layout: PageLayout) -> tuple[int, int]:
    """Pixel counts with mask value > 0 and > 1, without the full mask."""
    rects = []
    for b in layout.boxes:
        x1, y1, x2, y2 = _clip(b, layout.width, layout.height)
        if x1 < x2 and y1 < y2:
            rects.append((x1, y1, x2, y2))
    if not rects:
        return 0, 0

    xs = np.unique(np.array([r[0] for r in rects] + [r[2] for r in rects]))
    ys = np.unique(np.array([r[1] for r in rects] + [r[3] for r in rects]))
    # Box counts per compressed cell; cell (i, j) spans ys[i]:ys[i+1] x xs[j]:xs[j+1].
    counts = np.zeros((len(ys) - 1, len(xs) - 1), dtype=np.int32)
    xi = {v: i for i, v in enumerate(xs)}
    yi = {v: i for i, v in enumerate(ys)}
    for x1, y1, x2, y2 in rects:
        counts[yi[y1]:yi[y2], xi[x1]:xi[x2]] += 1

    cell_w = np.diff(xs)
    cell_h = np.diff(ys)
    areas = np.outer(cell_h, cell_w)
    covered = int(areas[counts > 0].sum())
    overlapped = int(areas[counts > 1].sum())
    return covered, overlapped
