"""Granularity-controlled seed clustering.

A cluster is grown from a seed pixel by breadth-first flood fill over
4-neighbors inside the roi, admitting a pixel when its intensity is within
``granularity * (roi intensity range)`` of the seed intensity.  Low
granularity yields small clusters that respect intensity boundaries, which
is the one property the boundary-refinement loop relies on.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import ndimage

from .grid import Roi, as_image, as_mask

# Callable signature shared by the default intensity clusterer and any
# learned substitute: (image, roi, seed_xy) -> full-size boolean mask.
Clusterer = Callable[[np.ndarray, Roi, tuple[int, int]], np.ndarray]


@dataclass(frozen=True)
class ClusterParams:
    granularity: float = 0.1
    max_region_fraction: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.granularity < 1.0:
            raise ValueError("granularity must lie in (0, 1)")
        if not 0.0 < self.max_region_fraction <= 1.0:
            raise ValueError("max_region_fraction must lie in (0, 1]")


_STRUCT_4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def grow_cluster(
    img: np.ndarray, roi: Roi, seed: tuple[int, int], params: ClusterParams
) -> np.ndarray:
    """Grow a 4-connected intensity cluster from the seed, restricted to roi.

    Returns a full-size boolean mask. The cluster always contains the seed
    and stops growing once it reaches ``max_region_fraction * roi.area``
    pixels, truncated ring-by-ring in breadth-first order (a partial final
    ring is admitted in raster order).
    """
    img = as_image(img)
    roi.validate(img.shape)
    sx, sy = seed
    if not roi.contains(sx, sy):
        raise ValueError(f"seed {seed} lies outside roi {roi}")

    window = img[roi.rows, roi.cols]
    contrast = float(window.max() - window.min())
    tol = params.granularity * contrast
    seed_val = img[sy, sx]
    admissible = np.abs(window - seed_val) <= tol
    cap = max(1, int(params.max_region_fraction * roi.area))

    ly, lx = sy - roi.y, sx - roi.x
    labeled, _ = ndimage.label(admissible, structure=_STRUCT_4)
    component = labeled == labeled[ly, lx]
    if int(component.sum()) > cap:
        component = _bfs_truncated(admissible, (ly, lx), cap)

    out = np.zeros(img.shape, dtype=bool)
    out[roi.rows, roi.cols] = component
    return as_mask(out)


def _bfs_truncated(admissible: np.ndarray, start: tuple[int, int], cap: int) -> np.ndarray:
    """Breadth-first truncation: grow one 4-neighbor ring at a time; a ring
    that would overshoot the cap is admitted partially in raster order."""
    visited = np.zeros_like(admissible)
    visited[start] = True
    size = 1
    while size < cap:
        ring = ndimage.binary_dilation(visited, structure=_STRUCT_4) & admissible & ~visited
        count = int(ring.sum())
        if count == 0:
            break
        if size + count <= cap:
            visited |= ring
            size += count
        else:
            ys, xs = np.nonzero(ring)  # raster order: deterministic partial ring
            take = cap - size
            visited[ys[:take], xs[:take]] = True
            size = cap
    return visited


class IntensityClusterer:
    """Default Clusterer: intensity flood fill with fixed parameters."""

    def __init__(self, params: ClusterParams | None = None):
        self.params = params or ClusterParams()

    def __call__(self, img: np.ndarray, roi: Roi, seed: tuple[int, int]) -> np.ndarray:
        return grow_cluster(img, roi, seed, self.params)
