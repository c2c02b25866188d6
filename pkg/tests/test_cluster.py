from __future__ import annotations

import numpy as np
import pytest

from langseg.cluster import ClusterParams, grow_cluster
from langseg.grid import Roi

from conftest import full_roi


def bfs_cluster(img, roi, seed, params):
    """Reference flood fill, plain python, no early-exit optimizations."""
    window = img[roi.rows, roi.cols]
    tol = params.granularity * float(window.max() - window.min())
    sx, sy = seed
    target = img[sy, sx]
    cap = max(1, int(params.max_region_fraction * roi.area))
    visited = {(sx, sy)}
    queue = [(sx, sy)]
    while queue and len(visited) < cap:
        x, y = queue.pop(0)
        for dx, dy in ((0, -1), (0, 1), (-1, 0), (1, 0)):
            nx, ny = x + dx, y + dy
            if not roi.contains(nx, ny) or (nx, ny) in visited:
                continue
            if abs(img[ny, nx] - target) <= tol:
                visited.add((nx, ny))
                queue.append((nx, ny))
                if len(visited) >= cap:
                    break
    out = np.zeros(img.shape, dtype=bool)
    for x, y in visited:
        out[y, x] = True
    return out


def test_constant_roi_fills_to_cap():
    img = np.full((10, 10), 0.5)
    roi = full_roi(img)
    grown = grow_cluster(img, roi, (4, 4), ClusterParams(granularity=0.3, max_region_fraction=1.0))
    assert grown.sum() == roi.area
    capped = grow_cluster(img, roi, (4, 4), ClusterParams(granularity=0.3, max_region_fraction=0.5))
    assert capped.sum() == 50
    assert capped[4, 4]


def test_two_tone_cluster_stays_on_seed_side():
    # Left half 0.2, right half 0.8; tolerance 0.1*0.6=0.06 < 0.6 contrast.
    img = np.full((8, 12), 0.2)
    img[:, 6:] = 0.8
    roi = full_roi(img)
    params = ClusterParams(granularity=0.1, max_region_fraction=1.0)
    dark = grow_cluster(img, roi, (2, 3), params)
    assert dark[:, :6].all() and not dark[:, 6:].any()
    bright = grow_cluster(img, roi, (9, 3), params)
    assert bright[:, 6:].all() and not bright[:, :6].any()


def test_zero_granularity_limit_single_pixel():
    rng = np.random.default_rng(7)
    img = rng.permutation(64).reshape(8, 8) / 63.0  # all-distinct intensities
    roi = full_roi(img)
    grown = grow_cluster(img, roi, (3, 3), ClusterParams(granularity=1e-9, max_region_fraction=1.0))
    assert grown.sum() == 1 and grown[3, 3]


def test_cluster_contains_seed_and_inside_roi(rng):
    img = rng.random((20, 20))
    roi = Roi(4, 5, 10, 9)
    for _ in range(30):
        sx = int(rng.integers(roi.x, roi.x + roi.w))
        sy = int(rng.integers(roi.y, roi.y + roi.h))
        grown = grow_cluster(img, roi, (sx, sy), ClusterParams(granularity=0.3))
        assert grown[sy, sx]
        outside = np.ones_like(grown)
        outside[roi.rows, roi.cols] = False
        assert not grown[outside].any()


def test_monotone_in_granularity(rng):
    img = rng.random((16, 16))
    roi = Roi(2, 2, 12, 12)
    seed = (8, 8)
    previous = None
    for g in (0.05, 0.1, 0.2, 0.4, 0.8):
        grown = grow_cluster(img, roi, seed, ClusterParams(granularity=g, max_region_fraction=1.0))
        if previous is not None:
            assert not (previous & ~grown).any()  # previous subset of grown
        previous = grown


def test_matches_reference_bfs(rng):
    img = rng.random((15, 15))
    roi = Roi(3, 1, 11, 12)
    params = ClusterParams(granularity=0.25, max_region_fraction=1.0)
    for _ in range(20):
        sx = int(rng.integers(roi.x, roi.x + roi.w))
        sy = int(rng.integers(roi.y, roi.y + roi.h))
        assert np.array_equal(
            grow_cluster(img, roi, (sx, sy), params), bfs_cluster(img, roi, (sx, sy), params)
        )


def test_seed_outside_roi_rejected():
    img = np.zeros((10, 10))
    with pytest.raises(ValueError):
        grow_cluster(img, Roi(2, 2, 4, 4), (0, 0), ClusterParams())


def test_capped_cluster_connected(rng):
    img = np.full((12, 12), 0.4)
    roi = full_roi(img)
    grown = grow_cluster(img, roi, (6, 6), ClusterParams(granularity=0.5, max_region_fraction=0.2))
    assert grown.sum() == int(0.2 * 144)
    from scipy import ndimage

    _, count = ndimage.label(grown, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]]))
    assert count == 1
