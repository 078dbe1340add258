"""Bounding-box post-processing for dense newspaper layouts.

Detector output is noisy: boxes overlap, stop short of column edges,
leave voids, and carry classes that cannot occur on newsprint.  The
functions here clean a page using only the box geometry (never the
image), exploiting the facts that newsprint is rectangular, columns are
roughly equal-width, and the print area is packed.

The full pass is :func:`postprocess_bboxes`; :func:`assign_columns` and
:func:`reading_order` are also usable on their own.  Everything is pure:
inputs are never mutated.
"""

from __future__ import annotations

import logging
import statistics
from typing import Optional, Sequence

from .boxes import (
    ABANDONED,
    BoundingBox,
    PageLayout,
    PostprocessConfig,
)

log = logging.getLogger(__name__)

# Sort sentinel: boxes outside any column read after all columns in their block.
_NO_COLUMN = 1 << 30


def _median(values: Sequence[float]) -> float:
    return statistics.median(values)


def _cluster_1d(points: Sequence[float], tol: float) -> list[list[int]]:
    """Single-linkage clusters of 1-D points; a gap > tol splits clusters.

    Returns lists of indices into ``points``, ordered by position.
    """
    order = sorted(range(len(points)), key=lambda i: (points[i], i))
    clusters: list[list[int]] = [[order[0]]]
    for prev, idx in zip(order, order[1:]):
        if points[idx] - points[prev] > tol:
            clusters.append([])
        clusters[-1].append(idx)
    return clusters


def _cluster_ranges(
    boxes: Sequence[BoundingBox], clusters: list[list[int]]
) -> list[tuple[int, int]]:
    return [
        (min(boxes[i].x1 for i in c), max(boxes[i].x2 for i in c)) for c in clusters
    ]


def _separate_ranges(ranges: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Force column ranges to be non-overlapping by splitting at midpoints."""
    ranges = sorted(ranges)
    out = [list(r) for r in ranges]
    for a, b in zip(out, out[1:]):
        if a[1] > b[0]:
            mid = (a[1] + b[0]) // 2
            a[1] = mid
            b[0] = mid
    return [(x1, x2) for x1, x2 in out]


def assign_columns(layout: PageLayout, full_width_ratio: float = 1.5) -> PageLayout:
    """Find the page's text columns and assign every box to one.

    Column count is the number of 1-D clusters of text-box horizontal
    centers, with cluster tolerance equal to half the median text-box
    width.  Boxes wider than ``full_width_ratio`` times the median
    column width are flagged full-width instead of being assigned.

    A page with no text boxes is returned unchanged (empty columns).
    """
    out = layout.copy_shallow()
    _assign_columns_inplace(out, full_width_ratio)
    return out


def _assign_columns_inplace(layout: PageLayout, full_width_ratio: float) -> None:
    for b in layout.boxes:
        b.column = None
        b.full_width = False
    layout.columns = []

    text_boxes = [b for b in layout.boxes if b.canonical() == "text"]
    if not text_boxes:
        log.warning("page %s: no text boxes; degenerate page", layout.page_id)
        return

    tol = _median([b.width for b in text_boxes]) / 2
    clusters = _cluster_1d([b.x_center for b in text_boxes], tol)
    ranges = _cluster_ranges(text_boxes, clusters)
    median_col_width = _median([x2 - x1 for x1, x2 in ranges])
    threshold = full_width_ratio * median_col_width

    for b in layout.boxes:
        b.full_width = b.width > threshold

    # Full-width text boxes would bridge clusters, so columns are derived
    # from the remaining ("core") text boxes only.
    core = [b for b in text_boxes if not b.full_width]
    if not core:
        log.warning("page %s: all text boxes exceed the column width limit", layout.page_id)
        return
    if len(core) != len(text_boxes):
        tol = _median([b.width for b in core]) / 2
        clusters = _cluster_1d([b.x_center for b in core], tol)
        ranges = _cluster_ranges(core, clusters)

    order = sorted(range(len(ranges)), key=lambda i: ranges[i])
    rank = {old: new for new, old in enumerate(order)}
    layout.columns = _separate_ranges([ranges[i] for i in order])

    assigned = set()
    for ci, cluster in enumerate(clusters):
        for i in cluster:
            core[i].column = rank[ci]
            assigned.add(id(core[i]))

    for b in layout.boxes:
        if b.full_width or id(b) in assigned:
            continue
        b.column = _best_column(b, layout.columns)


def _best_column(box: BoundingBox, columns: list[tuple[int, int]]) -> int:
    """Column with the largest horizontal overlap, then the nearest center."""
    best_key = None
    best_idx = 0
    for idx, (x1, x2) in enumerate(columns):
        overlap = min(box.x2, x2) - max(box.x1, x1)
        dist = abs(box.x_center - (x1 + x2) / 2)
        key = (-overlap, dist, idx)
        if best_key is None or key < best_key:
            best_key, best_idx = key, idx
    return best_idx


# ---------------------------------------------------------------------------
# Reading order
# ---------------------------------------------------------------------------


def _sorted_separators(boxes: Sequence[BoundingBox]) -> list[BoundingBox]:
    return sorted(
        (b for b in boxes if b.full_width), key=lambda b: (b.y1, b.x1, b.id)
    )


def _band_index(box: BoundingBox, separators: Sequence[BoundingBox]) -> int:
    """Which horizontal band (between full-width boxes) a box falls in."""
    return sum(1 for s in separators if s.y1 <= box.y1)


def _order_key(box, separators, sep_rank):
    # Bands interleave with the separators that delimit them: band k maps
    # to block 2k, separator k to block 2k+1.
    if box.full_width:
        return (2 * sep_rank[id(box)] + 1, -1, box.y1, box.x1, box.id)
    col = box.column if box.column is not None else _NO_COLUMN
    return (2 * _band_index(box, separators), col, box.y1, box.x1, box.id)


def reading_order(layout: PageLayout) -> PageLayout:
    """Assign dense reading-order indices over all boxes.

    Full-width boxes split the page into horizontal blocks; within a
    block columns run left to right and boxes within a column top to
    bottom by y1.  Ties break on x1 then id, so the order is a
    deterministic permutation of the input boxes.
    """
    out = layout.copy_shallow()
    _reading_order_inplace(out)
    return out


def _reading_order_inplace(layout: PageLayout) -> None:
    seps = _sorted_separators(layout.boxes)
    sep_rank = {id(b): k for k, b in enumerate(seps)}
    ordered = sorted(layout.boxes, key=lambda b: _order_key(b, seps, sep_rank))
    for i, b in enumerate(ordered):
        b.reading_order = i


# ---------------------------------------------------------------------------
# Full post-processing pass
# ---------------------------------------------------------------------------


def postprocess_bboxes(layout: PageLayout, cfg: PostprocessConfig) -> PageLayout:
    """Run the whole box clean-up pass on one page.

    In order: reclassify and remove abandoned boxes (running heads, page
    numbers and anything centered in the top/bottom page bands); clip to
    the print area; assign columns; re-class impossible detector classes
    as titles; compute reading order; extend each box's lower edge to
    the next box in its column; extend box x-limits to the column
    bounds; optionally fill head/tail column voids with synthetic text
    boxes; drop boxes below the minimum height; merge stacked small text
    boxes up to the merge ratio; re-adjust lower edges; and finally
    re-compute reading order and assign B/C/R ids.
    """
    out = layout.copy_shallow()
    if not out.boxes:
        out.columns = []
        return out

    band = cfg.abandoned_band_fraction * out.height
    kept = []
    for b in out.boxes:
        in_band = b.y_center < band or b.y_center > out.height - band
        if b.canonical() == ABANDONED or (in_band and not b.is_synthetic):
            continue
        kept.append(b)
    out.boxes = _clip_boxes(kept, (0, 0, out.width, out.height))
    if not out.boxes:
        out.columns = []
        return out

    pa = out.print_area or _tight_union(out.boxes)
    out.print_area = pa
    out.boxes = _clip_boxes(out.boxes, pa)
    if not out.boxes:
        out.columns = []
        return out

    _assign_columns_inplace(out, cfg.full_width_ratio)

    for b in out.boxes:
        if b.canonical() == "invalid":
            b.cls = "title"

    _reading_order_inplace(out)

    seps = _sorted_separators(out.boxes)
    segments = _band_segments(pa, seps)
    _adjust_lower_edges(out.boxes, seps, segments)

    for b in out.boxes:
        if b.column is not None and not b.full_width:
            cx1, cx2 = out.columns[b.column]
            b.x1 = min(b.x1, cx1)
            b.x2 = max(b.x2, cx2)

    if cfg.fill_columns:
        _fill_column_voids(out, seps, segments)

    # Synthetic fill boxes are kept regardless of height: removing them
    # would re-open the voids they exist to close.
    min_h = cfg.minimum_height_threshold
    out.boxes = [
        b
        for b in out.boxes
        if b.width > 0 and b.height > 0 and (b.is_synthetic or b.height >= min_h)
    ]

    _merge_small_boxes(out, cfg.merge_height_ratio)

    # Dropping or merging can change the separator set, so recompute.
    seps = _sorted_separators(out.boxes)
    segments = _band_segments(pa, seps)
    _adjust_lower_edges(out.boxes, seps, segments)

    _reading_order_inplace(out)
    _assign_ids(out)
    return out


def _tight_union(boxes: Sequence[BoundingBox]) -> tuple[int, int, int, int]:
    return (
        min(b.x1 for b in boxes),
        min(b.y1 for b in boxes),
        max(b.x2 for b in boxes),
        max(b.y2 for b in boxes),
    )


def _clip_boxes(
    boxes: Sequence[BoundingBox], area: tuple[int, int, int, int]
) -> list[BoundingBox]:
    ax1, ay1, ax2, ay2 = area
    out = []
    for b in boxes:
        b.x1 = max(b.x1, ax1)
        b.y1 = max(b.y1, ay1)
        b.x2 = min(b.x2, ax2)
        b.y2 = min(b.y2, ay2)
        if b.width > 0 and b.height > 0:
            out.append(b)
    return out


def _band_segments(
    pa: tuple[int, int, int, int], seps: Sequence[BoundingBox]
) -> list[tuple[int, int]]:
    """Vertical extent (top, bottom) of each band between separators."""
    tops = [pa[1]] + [s.y2 for s in seps]
    bottoms = [s.y1 for s in seps] + [pa[3]]
    return list(zip(tops, bottoms))


def _column_groups(
    boxes: Sequence[BoundingBox], seps: Sequence[BoundingBox]
) -> dict[tuple[int, int], list[BoundingBox]]:
    groups: dict[tuple[int, int], list[BoundingBox]] = {}
    for b in boxes:
        if b.full_width or b.column is None:
            continue
        groups.setdefault((b.column, _band_index(b, seps)), []).append(b)
    for group in groups.values():
        group.sort(key=lambda b: (b.y1, b.x1, b.id))
    return groups


def _adjust_lower_edges(boxes, seps, segments) -> None:
    """Set each box's lower edge to the top of the next box in its column.

    Works per (column, band) group so a box never extends across a
    full-width separator; the last box of a group is clamped to the
    band bottom, which also removes column-vs-separator overlap.
    """
    for (_, band), group in _column_groups(boxes, seps).items():
        for cur, nxt in zip(group, group[1:]):
            cur.y2 = nxt.y1
        group[-1].y2 = min(group[-1].y2, max(segments[band][1], group[-1].y1))


def _fill_column_voids(layout: PageLayout, seps, segments) -> None:
    """Insert synthetic text boxes in the head/tail voids of every column."""
    groups = _column_groups(layout.boxes, seps)
    fills = []
    for ci, (cx1, cx2) in enumerate(layout.columns):
        for band, (top, bottom) in enumerate(segments):
            if top >= bottom:
                continue
            group = groups.get((ci, band), [])
            voids = []
            if not group:
                voids.append((top, bottom))
            else:
                if group[0].y1 > top:
                    voids.append((top, group[0].y1))
                if group[-1].y2 < bottom:
                    voids.append((group[-1].y2, bottom))
            for y1, y2 in voids:
                fills.append(
                    BoundingBox(
                        x1=cx1, y1=y1, x2=cx2, y2=y2,
                        cls="text", confidence=0.0, column=ci,
                    )
                )
    layout.boxes.extend(fills)


def _merge_small_boxes(layout: PageLayout, merge_height_ratio: float) -> None:
    """Merge stacked same-column text boxes while the merged shape stays
    no taller than ``merge_height_ratio`` times its width."""
    seps = _sorted_separators(layout.boxes)
    dropped: set[int] = set()
    for _, group in _column_groups(layout.boxes, seps).items():
        cur: Optional[BoundingBox] = None
        for b in group:
            mergeable = b.canonical() == "text" and not b.is_synthetic
            if cur is not None and mergeable and cur.y2 == b.y1:
                mx1, mx2 = min(cur.x1, b.x1), max(cur.x2, b.x2)
                if b.y2 - cur.y1 <= merge_height_ratio * (mx2 - mx1):
                    cur.x1, cur.x2, cur.y2 = mx1, mx2, b.y2
                    cur.confidence = min(cur.confidence, b.confidence)
                    dropped.add(id(b))
                    continue
            cur = b if mergeable else None
    if dropped:
        layout.boxes = [b for b in layout.boxes if id(b) not in dropped]


def _assign_ids(layout: PageLayout) -> None:
    """Stamp ``{page_id}_B{block}C{column}R{row}`` ids in reading order.

    Blocks are the dense sequence of bands and separators actually
    holding boxes; columns are 1-based with C0 for full-width or
    unassigned boxes; rows are 1-based within (block, column).
    """
    seps = _sorted_separators(layout.boxes)
    sep_rank = {id(b): k for k, b in enumerate(seps)}
    ordered = sorted(layout.boxes, key=lambda b: b.reading_order or 0)

    raw_blocks = []
    for b in ordered:
        if b.full_width:
            raw_blocks.append(2 * sep_rank[id(b)] + 1)
        else:
            raw_blocks.append(2 * _band_index(b, seps))
    dense = {raw: i for i, raw in enumerate(sorted(set(raw_blocks)))}

    rows: dict[tuple[int, int], int] = {}
    for b, raw in zip(ordered, raw_blocks):
        block = dense[raw]
        col = 0 if (b.full_width or b.column is None) else b.column + 1
        rows[(block, col)] = rows.get((block, col), 0) + 1
        b.id = f"{layout.page_id}_B{block}C{col}R{rows[(block, col)]}"
