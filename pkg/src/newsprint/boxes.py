"""Page and box geometry primitives shared across the pipeline.

Coordinates are integer pixels with the origin at the top-left corner;
boxes are half-open rectangles [x1, x2) x [y1, y2), so two boxes that
abut share no pixels.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

VALID_CLASSES = ("text", "title", "figure", "table")
ABANDONED = "abandoned"

# Detector spellings that mean "running head / page number / masthead".
_ABANDON_ALIASES = {"abandon", "abandoned"}


def canonical_class(label: str) -> str:
    """Map a raw detector label to one of the pipeline classes.

    Returns one of ``text``, ``title``, ``figure``, ``table``,
    ``abandoned`` or ``invalid``.  The original label is kept verbatim on
    the box itself; only the interpretation is canonicalised here.
    """
    low = label.strip().lower()
    if low in _ABANDON_ALIASES:
        return ABANDONED
    if low in VALID_CLASSES:
        return low
    return "invalid"


@dataclass
class BoundingBox:
    """One detected or derived page region.

    ``cls`` holds the detector label verbatim until post-processing
    re-classes it; use :func:`canonical_class` to interpret it.
    ``confidence`` of exactly 0.0 marks a synthetic box inserted by
    column filling rather than detected on the page.
    """

    x1: int
    y1: int
    x2: int
    y2: int
    cls: str
    confidence: float = 1.0
    id: str = ""
    column: Optional[int] = None
    reading_order: Optional[int] = None
    full_width: bool = False

    @property
    def width(self) -> int:
        return self.x2 - self.x1

    @property
    def height(self) -> int:
        return self.y2 - self.y1

    @property
    def x_center(self) -> float:
        return (self.x1 + self.x2) / 2

    @property
    def y_center(self) -> float:
        return (self.y1 + self.y2) / 2

    @property
    def is_synthetic(self) -> bool:
        return self.confidence == 0.0

    def canonical(self) -> str:
        return canonical_class(self.cls)

    def copy(self, **changes) -> "BoundingBox":
        return replace(self, **changes)


@dataclass
class PageLayout:
    """A page's print-area geometry plus its box set.

    ``columns`` holds (x1, x2) pixel ranges sorted left to right;
    ``print_area`` is (x1, y1, x2, y2).  Both may be empty/None before
    post-processing.
    """

    page_id: str
    width: int
    height: int
    boxes: list[BoundingBox] = field(default_factory=list)
    print_area: Optional[tuple[int, int, int, int]] = None
    columns: list[tuple[int, int]] = field(default_factory=list)
    image: Optional[str] = None

    def copy_shallow(self) -> "PageLayout":
        return PageLayout(
            page_id=self.page_id,
            width=self.width,
            height=self.height,
            boxes=[b.copy() for b in self.boxes],
            print_area=self.print_area,
            columns=list(self.columns),
            image=self.image,
        )


@dataclass
class PostprocessConfig:
    """Knobs for the bounding-box post-processing pass."""

    minimum_height_threshold: int = 10
    fill_columns: bool = False
    merge_height_ratio: float = 1.5
    abandoned_band_fraction: float = 0.05
    full_width_ratio: float = 1.5

    def __post_init__(self):
        if self.minimum_height_threshold < 0:
            raise ValueError("minimum_height_threshold must be >= 0")
        if self.merge_height_ratio <= 0:
            raise ValueError("merge_height_ratio must be > 0")
        if not 0 <= self.abandoned_band_fraction < 0.5:
            raise ValueError("abandoned_band_fraction must be in [0, 0.5)")
