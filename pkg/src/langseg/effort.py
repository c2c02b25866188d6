"""Annotation-effort accounting.

Polygonal delineation cost is modeled by simplifying object contours with
Douglas-Peucker and charging a fixed number of seconds per placed vertex;
language feedback cost is the spoken word count divided by a speech rate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Roi, as_mask, connected_components

Point = tuple[float, float]


@dataclass(frozen=True)
class EffortModel:
    seconds_per_vertex: float = 5.55
    words_per_minute: float = 130.0

    def __post_init__(self) -> None:
        if self.seconds_per_vertex <= 0 or self.words_per_minute <= 0:
            raise ValueError("effort constants must be positive")


@dataclass(frozen=True)
class EffortReport:
    vertex_count: int
    polygon_hours: float
    word_count: int
    lingual_hours: float
    delta_percent: float

    def to_dict(self) -> dict:
        return {
            "vertexCount": self.vertex_count,
            "polygonHours": self.polygon_hours,
            "wordCount": self.word_count,
            "lingualHours": self.lingual_hours,
            "deltaPercent": self.delta_percent,
        }


class EffortError(ValueError):
    pass


def estimate(vertex_count: int, word_count: int, model: EffortModel | None = None) -> EffortReport:
    """Hours for polygonal vs lingual annotation and the relative saving."""
    if vertex_count < 0 or word_count < 0:
        raise EffortError("counts must be non-negative")
    model = model or EffortModel()
    polygon_hours = vertex_count * model.seconds_per_vertex / 3600.0
    lingual_hours = word_count / model.words_per_minute / 60.0
    if polygon_hours == 0.0:
        raise EffortError("delta undefined: polygon time is zero")
    delta = (polygon_hours - lingual_hours) / polygon_hours * 100.0
    return EffortReport(
        vertex_count=vertex_count,
        polygon_hours=polygon_hours,
        word_count=word_count,
        lingual_hours=lingual_hours,
        delta_percent=delta,
    )


def count_words(commands: list[str]) -> int:
    """Whitespace-delimited token count over all command texts."""
    return sum(len(c.split()) for c in commands)


# ---------------------------------------------------------------- polygons


def _point_segment_distance(p: Point, a: Point, b: Point) -> float:
    px, py = p
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    length_sq = dx * dx + dy * dy
    if length_sq == 0.0:
        return math.hypot(px - ax, py - ay)
    t = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / length_sq))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _douglas_peucker(points: list[Point], epsilon: float) -> list[Point]:
    """Iterative Douglas-Peucker on an open polyline; endpoints are kept."""
    if len(points) <= 2:
        return list(points)
    keep = {0, len(points) - 1}
    stack = [(0, len(points) - 1)]
    while stack:
        start, end = stack.pop()
        if end - start <= 1:
            continue
        max_dist = -1.0
        max_idx = start + 1
        for i in range(start + 1, end):
            d = _point_segment_distance(points[i], points[start], points[end])
            if d > max_dist:
                max_dist = d
                max_idx = i
        if max_dist > epsilon:
            keep.add(max_idx)
            stack.append((start, max_idx))
            stack.append((max_idx, end))
    return [points[i] for i in sorted(keep)]


def simplify_contour(contour: list[Point], epsilon: float) -> list[Point]:
    """Douglas-Peucker vertex selection.

    Every input point ends up within epsilon (perpendicular distance) of
    the simplified polyline.  A closed contour (first point repeated at the
    end) is split at its farthest-apart vertex pair, each arc simplified,
    and the halves merged; the result then lists the polygon vertices once.
    Contours of fewer than 3 points are returned as-is.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if len(contour) < 3:
        return list(contour)
    closed = contour[0] == contour[-1]
    if not closed:
        return _douglas_peucker(list(contour), epsilon)

    ring = list(contour[:-1])
    if len(ring) < 3:
        return ring
    # split the ring at the farthest-apart pair of vertices
    best = (0, len(ring) // 2)
    best_d = -1.0
    for i in range(len(ring)):
        for j in range(i + 1, len(ring)):
            d = (ring[i][0] - ring[j][0]) ** 2 + (ring[i][1] - ring[j][1]) ** 2
            if d > best_d:
                best_d = d
                best = (i, j)
    i, j = best
    arc1 = ring[i : j + 1]
    arc2 = ring[j:] + ring[: i + 1]
    out1 = _douglas_peucker(arc1, epsilon)
    out2 = _douglas_peucker(arc2, epsilon)
    return out1[:-1] + out2[:-1]


# ----------------------------------------------------------- contour trace

# Moore neighborhood in clockwise order (image coordinates, y down),
# starting at west: W, NW, N, NE, E, SE, S, SW.
_MOORE = ((-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1))


def trace_contour(mask: np.ndarray, start: tuple[int, int]) -> list[Point]:
    """Moore-neighbor outer-boundary trace of the component containing `start`.

    `start` should be a boundary pixel with at least one background Moore
    neighbor (a topmost-leftmost component pixel always qualifies).  Returns
    the closed contour with the first point repeated at the end; stops by
    Jacob's criterion (re-entering the start from the original direction).
    """
    m = as_mask(mask)
    h, w = m.shape
    sx, sy = start
    if not m[sy, sx]:
        raise ValueError("start pixel must be foreground")

    def at(p: tuple[int, int]) -> bool:
        x, y = p
        return 0 <= x < w and 0 <= y < h and m[y, x]

    if not any(at((sx + dx, sy + dy)) for dx, dy in _MOORE):
        return [(float(sx), float(sy)), (float(sx), float(sy))]  # isolated pixel

    # initial backtrack: a background Moore neighbor, preferring west
    first_b = None
    for dx, dy in _MOORE:
        if not at((sx + dx, sy + dy)):
            first_b = (sx + dx, sy + dy)
            break
    if first_b is None:
        raise ValueError("start pixel is interior, not on the boundary")

    contour: list[Point] = [(float(sx), float(sy))]
    current = (sx, sy)
    backtrack = first_b
    limit = 4 * h * w
    while len(contour) <= limit:
        entry = _MOORE.index((backtrack[0] - current[0], backtrack[1] - current[1]))
        found = None
        for k in range(1, 9):
            dx, dy = _MOORE[(entry + k) % 8]
            candidate = (current[0] + dx, current[1] + dy)
            if at(candidate):
                found = candidate
                break
            backtrack = candidate
        current = found
        if current == (sx, sy) and backtrack == first_b:
            break
        contour.append((float(current[0]), float(current[1])))
    contour.append((float(sx), float(sy)))
    return contour


def mask_contours(mask: np.ndarray, roi: Roi) -> list[list[Point]]:
    """Closed outer contour of every roi-restricted foreground component."""
    m = as_mask(mask)
    window = np.zeros_like(m)
    window[roi.rows, roi.cols] = m[roi.rows, roi.cols]
    contours = []
    for comp in connected_components(window, roi, connectivity=8):
        top = min((y, x) for x, y in comp.pixels)
        contours.append(trace_contour(window, (top[1], top[0])))
    return contours


def polygon_vertex_count(mask: np.ndarray, roi: Roi, epsilon: float = 1.5) -> int:
    """Total simplified-polygon vertices over the roi's foreground components."""
    total = 0
    for contour in mask_contours(mask, roi):
        total += len(simplify_contour(contour, epsilon))
    return total
