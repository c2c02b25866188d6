"""Raster primitives shared by every other module.

Conventions used throughout the package:

* images and masks are numpy arrays of shape ``(height, width)``, row-major,
  origin at the top-left, y increasing downward;
* intensity images are float arrays with values in ``[0, 1]``;
* binary masks are boolean arrays, label maps are small-int arrays with
  label 0 reserved for background;
* probability maps are float arrays of shape ``(classes, height, width)``
  whose per-pixel class probabilities sum to 1;
* points travel through public APIs as ``(x, y)`` tuples;
* angles follow the math convention (counter-clockwise, y up), so the y
  component is negated when converting from image coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage


class Direction(Enum):
    """Eight compass directions plus Overall ("no specific direction")."""

    TOP = "top"
    BOTTOM = "bottom"
    LEFT = "left"
    RIGHT = "right"
    TOP_LEFT = "top-left"
    TOP_RIGHT = "top-right"
    BOTTOM_LEFT = "bottom-left"
    BOTTOM_RIGHT = "bottom-right"
    OVERALL = "overall"


# Sector order matches ascending angle starting at 0 deg (due right);
# sector k covers [45k - 22.5, 45k + 22.5) degrees.
_SECTORS = (
    Direction.RIGHT,
    Direction.TOP_RIGHT,
    Direction.TOP,
    Direction.TOP_LEFT,
    Direction.LEFT,
    Direction.BOTTOM_LEFT,
    Direction.BOTTOM,
    Direction.BOTTOM_RIGHT,
)


@dataclass(frozen=True)
class Roi:
    """Axis-aligned rectangular region of interest, in pixel coordinates."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self) -> None:
        if self.w < 1 or self.h < 1:
            raise ValueError(f"roi must be at least 1x1, got {self.w}x{self.h}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"roi origin must be non-negative, got ({self.x},{self.y})")

    @property
    def area(self) -> int:
        return self.w * self.h

    @property
    def rows(self) -> slice:
        return slice(self.y, self.y + self.h)

    @property
    def cols(self) -> slice:
        return slice(self.x, self.x + self.w)

    @property
    def center(self) -> tuple[float, float]:
        """Center of the roi in pixel-center coordinates (x, y)."""
        return (self.x + (self.w - 1) / 2.0, self.y + (self.h - 1) / 2.0)

    def contains(self, x: int, y: int) -> bool:
        return self.x <= x < self.x + self.w and self.y <= y < self.y + self.h

    def overlaps(self, other: "Roi") -> bool:
        return (
            self.x < other.x + other.w
            and other.x < self.x + self.w
            and self.y < other.y + other.h
            and other.y < self.y + self.h
        )

    def validate(self, shape: tuple[int, int]) -> "Roi":
        """Check the roi lies fully inside an image of the given (h, w) shape."""
        h, w = shape
        if self.x + self.w > w or self.y + self.h > h:
            raise ValueError(f"roi {self} exceeds image bounds {w}x{h}")
        return self

    def window(self, arr: np.ndarray) -> np.ndarray:
        """View of the roi pixels of a (h, w) or (c, h, w) array."""
        if arr.ndim == 3:
            return arr[:, self.rows, self.cols]
        return arr[self.rows, self.cols]

    @classmethod
    def from_string(cls, text: str) -> "Roi":
        """Parse the 'x,y,w,h' form used on the command line."""
        try:
            x, y, w, h = (int(p) for p in text.split(","))
        except ValueError as exc:
            raise ValueError(f"roi must be 'x,y,w,h', got {text!r}") from exc
        return cls(x, y, w, h)


def as_image(arr: np.ndarray) -> np.ndarray:
    """Validate and return a [0,1] float intensity image."""
    a = np.asarray(arr, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"image must be 2-d, got shape {a.shape}")
    if a.size and (a.min() < 0.0 or a.max() > 1.0):
        raise ValueError("image intensities must lie in [0, 1]")
    return a


def as_mask(arr: np.ndarray) -> np.ndarray:
    """Validate and return a boolean mask."""
    a = np.asarray(arr)
    if a.ndim != 2:
        raise ValueError(f"mask must be 2-d, got shape {a.shape}")
    return a.astype(bool)


def as_labels(arr: np.ndarray, class_count: int) -> np.ndarray:
    """Validate and return an integer label map with labels < class_count."""
    if class_count < 2:
        raise ValueError("class_count must be at least 2")
    a = np.asarray(arr)
    if a.ndim != 2:
        raise ValueError(f"label map must be 2-d, got shape {a.shape}")
    a = a.astype(np.int64)
    if a.size and (a.min() < 0 or a.max() >= class_count):
        raise ValueError(f"labels must lie in [0, {class_count - 1}]")
    return a


def as_probs(arr: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Validate a (classes, h, w) probability map: entries in [0,1], sums 1."""
    a = np.asarray(arr, dtype=float)
    if a.ndim != 3 or a.shape[0] < 2:
        raise ValueError(f"probability map must be (classes>=2, h, w), got {a.shape}")
    if a.size and (a.min() < -tol or a.max() > 1.0 + tol):
        raise ValueError("probabilities must lie in [0, 1]")
    sums = a.sum(axis=0)
    if a.size and np.abs(sums - 1.0).max() > tol:
        raise ValueError("per-pixel probabilities must sum to 1")
    return a


def dice(a: np.ndarray, b: np.ndarray) -> float:
    """Dice overlap 2|a&b| / (|a|+|b|); 1.0 when both masks are empty."""
    a = as_mask(a)
    b = as_mask(b)
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    total = int(a.sum()) + int(b.sum())
    if total == 0:
        return 1.0
    return 2.0 * int((a & b).sum()) / total


def boundary_mask(m: np.ndarray, roi: Roi) -> np.ndarray:
    """Boolean grid marking foreground pixels inside roi with a background 4-neighbor.

    Neighbors are read from the full mask; neighbors outside the image count
    as background.
    """
    m = as_mask(m)
    roi.validate(m.shape)
    padded = np.pad(m, 1, mode="constant", constant_values=False)
    has_bg_neighbor = ~(
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    boundary = m & has_bg_neighbor
    out = np.zeros_like(m)
    out[roi.rows, roi.cols] = boundary[roi.rows, roi.cols]
    return out


def extract_boundary(m: np.ndarray, roi: Roi) -> set[tuple[int, int]]:
    """Boundary pixels of the mask inside roi, as a set of (x, y) coordinates."""
    ys, xs = np.nonzero(boundary_mask(m, roi))
    return {(int(x), int(y)) for x, y in zip(xs, ys)}


def perimeter_edges(m: np.ndarray, roi: Roi) -> int:
    """Manhattan perimeter: count of foreground-to-background 4-neighbor
    edges over foreground pixels inside roi (out-of-image reads background)."""
    m = as_mask(m)
    roi.validate(m.shape)
    padded = np.pad(m, 1, mode="constant", constant_values=False)
    bg_neighbors = (
        (~padded[:-2, 1:-1]).astype(np.int64)
        + (~padded[2:, 1:-1])
        + (~padded[1:-1, :-2])
        + (~padded[1:-1, 2:])
    )
    counts = np.where(m, bg_neighbors, 0)
    return int(counts[roi.rows, roi.cols].sum())


@dataclass(frozen=True)
class Component:
    """One connected component of roi-restricted foreground."""

    pixels: frozenset[tuple[int, int]]
    area: int
    centroid: tuple[float, float]


_STRUCT_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)
_STRUCT_8 = np.ones((3, 3), dtype=bool)


def connected_components(m: np.ndarray, roi: Roi, connectivity: int = 8) -> list[Component]:
    """Connected components of the roi-restricted foreground.

    Components are ordered by the (min-y, min-x) of their pixel sets, which
    makes the result deterministic.
    """
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    m = as_mask(m)
    roi.validate(m.shape)
    window = m[roi.rows, roi.cols]
    structure = _STRUCT_4 if connectivity == 4 else _STRUCT_8
    labeled, count = ndimage.label(window, structure=structure)
    comps = []
    for lbl in range(1, count + 1):
        ys, xs = np.nonzero(labeled == lbl)
        gx = xs + roi.x
        gy = ys + roi.y
        pixels = frozenset((int(x), int(y)) for x, y in zip(gx, gy))
        centroid = (float(gx.mean()), float(gy.mean()))
        comps.append(Component(pixels=pixels, area=len(pixels), centroid=centroid))
    comps.sort(key=lambda c: (min(p[1] for p in c.pixels), min(p[0] for p in c.pixels)))
    return comps


def disk_element(radius: int) -> np.ndarray:
    """Euclidean disk structuring element of the given radius."""
    if radius < 1:
        raise ValueError("radius must be >= 1")
    span = np.arange(-radius, radius + 1)
    yy, xx = np.meshgrid(span, span, indexing="ij")
    return (yy * yy + xx * xx) <= radius * radius


def morph_close(m: np.ndarray, roi: Roi, radius: int) -> np.ndarray:
    """Morphological closing (dilate then erode) written back only inside roi.

    The closing is computed over the full mask so roi borders read the
    unmodified neighborhood instead of zero padding; erosion treats pixels
    beyond the image as foreground so closing stays extensive at image edges.
    """
    m = as_mask(m)
    roi.validate(m.shape)
    element = disk_element(radius)
    dilated = ndimage.binary_dilation(m, structure=element, border_value=0)
    closed = ndimage.binary_erosion(dilated, structure=element, border_value=1)
    out = m.copy()
    out[roi.rows, roi.cols] = closed[roi.rows, roi.cols]
    return out


def gaussian_smooth_threshold(
    m: np.ndarray, roi: Roi, sigma: float, thresh: float
) -> np.ndarray:
    """Blur the {0,1} mask with a Gaussian (truncated at 3 sigma) and re-binarize.

    Only roi pixels change; the blur itself reads the full unmodified mask.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if not 0.0 < thresh < 1.0:
        raise ValueError("thresh must lie in (0, 1)")
    m = as_mask(m)
    roi.validate(m.shape)
    blurred = ndimage.gaussian_filter(m.astype(float), sigma=sigma, truncate=3.0, mode="nearest")
    out = m.copy()
    out[roi.rows, roi.cols] = blurred[roi.rows, roi.cols] >= thresh
    return out


def sector_index(angle_deg: float | np.ndarray):
    """Index 0..7 of the 45-degree sector containing the angle (degrees)."""
    return np.floor(((np.asarray(angle_deg) % 360.0) + 22.5) / 45.0).astype(int) % 8


def direction_of(angle_deg: float) -> Direction:
    """Map an angle in degrees (math convention, y up) to its compass sector.

    Sectors are half-open 45-degree wedges centered on the eight compass
    directions: [center - 22.5, center + 22.5). Total over all finite angles.
    """
    return _SECTORS[int(sector_index(float(angle_deg)))]


def angle_deg_between(origin: tuple[float, float], point: tuple[float, float]) -> float:
    """Angle of the ray origin -> point, converting image y-down to math y-up."""
    ox, oy = origin
    px, py = point
    return math.degrees(math.atan2(oy - py, px - ox))


def sector_wedge(roi: Roi, direction: Direction) -> np.ndarray:
    """Boolean (roi.h, roi.w) grid of roi pixels whose angle from the roi
    center falls in the direction's sector; all-true for Overall."""
    if direction is Direction.OVERALL:
        return np.ones((roi.h, roi.w), dtype=bool)
    cx, cy = roi.center
    ys, xs = np.mgrid[roi.y : roi.y + roi.h, roi.x : roi.x + roi.w]
    angles = np.degrees(np.arctan2(cy - ys, xs - cx))
    return sector_index(angles) == _SECTORS.index(direction)


def foreground_centroid(m: np.ndarray, roi: Roi) -> tuple[float, float] | None:
    """Centroid (x, y) of the roi-restricted foreground, or None if empty."""
    m = as_mask(m)
    roi.validate(m.shape)
    ys, xs = np.nonzero(m[roi.rows, roi.cols])
    if len(xs) == 0:
        return None
    return (float(xs.mean()) + roi.x, float(ys.mean()) + roi.y)
