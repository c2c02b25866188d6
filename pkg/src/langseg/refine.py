"""Iterative directional boundary refinement.

One refinement step highlights the boundary arc facing the requested
direction, samples point pairs just inside and outside it, grows an
intensity cluster from every sampled point, and measures the normalized
overlap between the inner and outer cluster unions:

    eta = |A_in & A_out| / |A_in | A_out|

When the predicted boundary sits on a true intensity edge the two unions
barely overlap and eta is small; far from the edge both unions live in the
same region and eta is large.  Expanding adds the overlap to the mask,
shrinking removes it.  Iterating and keeping the snapshot with minimal eta
drives the boundary onto the nearest intensity edge in the chosen
direction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .cluster import ClusterParams, grow_cluster
from .grid import (
    Direction,
    Roi,
    angle_deg_between,
    as_image,
    as_mask,
    boundary_mask,
    foreground_centroid,
    sector_index,
    _SECTORS,
)


class BoundaryOp(Enum):
    EXPAND = "expand"
    SHRINK = "shrink"


@dataclass(frozen=True)
class RefineParams:
    """Knobs of the iterative refinement loop.

    sample_percent: share of highlighted boundary points that seed clusters.
    offset: pixel displacement of the inner/outer seeds along the
        centroid-to-boundary ray.
    max_iters: iteration budget; the loop may stop earlier at a fixed point.
    """

    sample_percent: float = 20.0
    offset: int = 2
    max_iters: int = 15
    cluster: ClusterParams = field(default_factory=ClusterParams)

    def __post_init__(self) -> None:
        if not 0.0 < self.sample_percent <= 100.0:
            raise ValueError("sample_percent must lie in (0, 100]")
        if self.offset < 1:
            raise ValueError("offset must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    eta: float


@dataclass(frozen=True)
class EtaTrace:
    entries: tuple[TraceEntry, ...]

    def to_csv(self) -> str:
        lines = ["t,eta"]
        lines += [f"{e.iteration},{e.eta!r}" for e in self.entries]
        return "\n".join(lines) + "\n"

    def argmin(self) -> int:
        """Iteration number with minimal eta; ties resolve to the earliest."""
        best = min(self.entries, key=lambda e: (e.eta, e.iteration))
        return best.iteration


@dataclass(frozen=True)
class RefinementResult:
    mask: np.ndarray
    trace: EtaTrace
    best_iter: int
    warnings: tuple[str, ...]


def highlight_boundary(m: np.ndarray, roi: Roi, direction: Direction) -> list[tuple[int, int]]:
    """Boundary pixels facing the direction, ordered by angle ascending.

    The facing test compares each boundary pixel's angle from the
    roi-restricted foreground centroid against the direction's sector;
    Overall keeps the whole boundary.  Empty foreground yields [].
    """
    m = as_mask(m)
    centroid = foreground_centroid(m, roi)
    if centroid is None:
        return []
    ys, xs = np.nonzero(boundary_mask(m, roi))
    if len(xs) == 0:
        return []
    cx, cy = centroid
    angles = np.degrees(np.arctan2(cy - ys, xs - cx))
    if direction is not Direction.OVERALL:
        keep = sector_index(angles) == _SECTORS.index(direction)
        xs, ys, angles = xs[keep], ys[keep], angles[keep]
    order = np.lexsort((xs, ys, angles))
    return [(int(x), int(y)) for x, y in zip(xs[order], ys[order])]


def _round_half_away(v: float) -> int:
    return int(math.floor(v + 0.5)) if v >= 0 else int(math.ceil(v - 0.5))


def sample_point_pairs(
    m: np.ndarray,
    img: np.ndarray,
    roi: Roi,
    highlighted: list[tuple[int, int]],
    params: RefineParams,
) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Sample (p_in, p_out) seed pairs along the highlighted boundary.

    n = max(1, round(sample_percent% of the highlighted count)) pixels are
    taken at evenly spaced indices of the angle-ordered list; each is
    displaced by +-offset along the unit ray from the foreground centroid.
    Pairs whose inner point is not foreground, whose outer point is not
    background, or which leave the roi are discarded.
    """
    if not highlighted:
        raise ValueError("highlighted boundary must be nonempty")
    m = as_mask(m)
    as_image(img)
    centroid = foreground_centroid(m, roi)
    if centroid is None:
        return []
    cx, cy = centroid
    count = len(highlighted)
    n = max(1, _round_half_away(params.sample_percent / 100.0 * count))
    n = min(n, count)
    picks = [highlighted[(k * count) // n] for k in range(n)]

    pairs = []
    for px, py in picks:
        vx, vy = px - cx, py - cy
        norm = math.hypot(vx, vy)
        if norm == 0.0:
            continue
        dx = _round_half_away(params.offset * vx / norm)
        dy = _round_half_away(params.offset * vy / norm)
        p_out = (px + dx, py + dy)
        p_in = (px - dx, py - dy)
        if not (roi.contains(*p_in) and roi.contains(*p_out)):
            continue
        if not m[p_in[1], p_in[0]]:
            continue
        if m[p_out[1], p_out[0]]:
            continue
        pairs.append((p_in, p_out))
    return pairs


@dataclass(frozen=True)
class StepOutcome:
    mask: np.ndarray
    eta: float
    warning: str | None = None


def refine_step(
    m: np.ndarray,
    img: np.ndarray,
    roi: Roi,
    direction: Direction,
    op: BoundaryOp,
    params: RefineParams,
) -> StepOutcome:
    """One expand/shrink update; returns the new mask and its eta.

    Degenerate inputs (no boundary, no valid point pairs) leave the mask
    unchanged and report eta = 1 with a warning.
    """
    m = as_mask(m)
    highlighted = highlight_boundary(m, roi, direction)
    if not highlighted:
        return StepOutcome(m.copy(), 1.0, "no boundary pixels to refine")
    pairs = sample_point_pairs(m, img, roi, highlighted, params)
    if not pairs:
        return StepOutcome(m.copy(), 1.0, "no valid point pairs")

    a_in = np.zeros(m.shape, dtype=bool)
    a_out = np.zeros(m.shape, dtype=bool)
    grown: dict[tuple[int, int], np.ndarray] = {}
    for p_in, p_out in pairs:
        for seed, acc in ((p_in, a_in), (p_out, a_out)):
            if seed not in grown:
                grown[seed] = grow_cluster(img, roi, seed, params.cluster)
            acc |= grown[seed]

    inter = a_in & a_out
    union = a_in | a_out
    union_area = int(union.sum())
    eta = 1.0 if union_area == 0 else int(inter.sum()) / union_area

    out = m.copy()
    window = inter[roi.rows, roi.cols]
    if op is BoundaryOp.EXPAND:
        out[roi.rows, roi.cols] |= window
    else:
        out[roi.rows, roi.cols] &= ~window
    return StepOutcome(out, eta, None)


def refine(
    m: np.ndarray,
    img: np.ndarray,
    roi: Roi,
    direction: Direction,
    op: BoundaryOp,
    params: RefineParams | None = None,
) -> RefinementResult:
    """Iterate refine_step and return the snapshot with minimal eta.

    The boundary, highlight, and samples are recomputed from the updated
    mask every iteration.  Stops early at a fixed point or when no valid
    samples remain; ties on eta resolve to the earliest iteration.
    """
    params = params or RefineParams()
    img = as_image(img)
    current = as_mask(m).copy()
    roi.validate(current.shape)

    entries: list[TraceEntry] = []
    snapshots: list[np.ndarray] = []
    warnings: list[str] = []
    for t in range(1, params.max_iters + 1):
        outcome = refine_step(current, img, roi, direction, op, params)
        entries.append(TraceEntry(iteration=t, eta=outcome.eta))
        snapshots.append(outcome.mask)
        if outcome.warning is not None:
            warnings.append(f"iteration {t}: {outcome.warning}")
        fixed_point = bool(np.array_equal(outcome.mask, current))
        current = outcome.mask
        if outcome.warning is not None or fixed_point:
            break

    trace = EtaTrace(entries=tuple(entries))
    best_iter = trace.argmin()
    return RefinementResult(
        mask=snapshots[best_iter - 1].copy(),
        trace=trace,
        best_iter=best_iter,
        warnings=tuple(warnings),
    )
