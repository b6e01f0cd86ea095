"""Axis-aligned box geometry: validated boxes, area, and IoU."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["BBox", "area", "iou", "boxes_to_array", "iou_one_vs_many"]


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in continuous pixel coordinates.

    (x1, y1) is the top-left corner, (x2, y2) the bottom-right; width is
    x2 - x1 with no "+1" pixel convention. Zero-area boxes are legal.
    Inverted or non-finite coordinates are rejected at construction.
    """

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self) -> None:
        for name in ("x1", "y1", "x2", "y2"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"BBox.{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.x2 < self.x1 or self.y2 < self.y1:
            raise ValueError(
                f"BBox corners out of order: "
                f"({self.x1}, {self.y1}, {self.x2}, {self.y2})"
            )

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


def area(b: BBox) -> float:
    """Box area; zero for degenerate boxes."""
    return (b.x2 - b.x1) * (b.y2 - b.y1)


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes, in [0, 1].

    Returns 0.0 whenever the intersection (and hence the union of two
    degenerate boxes) has zero area.
    """
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    iw = ix2 - ix1
    ih = iy2 - iy1
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = area(a) + area(b) - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def boxes_to_array(boxes) -> np.ndarray:
    """Stack BBox objects into an (n, 4) float64 array of (x1, y1, x2, y2)."""
    out = np.empty((len(boxes), 4), dtype=np.float64)
    for i, b in enumerate(boxes):
        out[i, 0] = b.x1
        out[i, 1] = b.y1
        out[i, 2] = b.x2
        out[i, 3] = b.y2
    return out


def iou_one_vs_many(box: BBox, arr: np.ndarray) -> np.ndarray:
    """IoU of one box against each row of an (n, 4) array."""
    ix1 = np.maximum(box.x1, arr[:, 0])
    iy1 = np.maximum(box.y1, arr[:, 1])
    ix2 = np.minimum(box.x2, arr[:, 2])
    iy2 = np.minimum(box.y2, arr[:, 3])
    iw = np.maximum(ix2 - ix1, 0.0)
    ih = np.maximum(iy2 - iy1, 0.0)
    inter = iw * ih
    areas = (arr[:, 2] - arr[:, 0]) * (arr[:, 3] - arr[:, 1])
    union = area(box) + areas - inter
    out = np.zeros(arr.shape[0], dtype=np.float64)
    np.divide(inter, union, out=out, where=union > 0.0)
    return out
