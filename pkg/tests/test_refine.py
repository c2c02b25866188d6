from __future__ import annotations

import numpy as np
import pytest
from scipy import ndimage

from langseg.cluster import ClusterParams
from langseg.grid import Direction, Roi, dice
from langseg.refine import (
    BoundaryOp,
    EtaTrace,
    RefineParams,
    TraceEntry,
    highlight_boundary,
    refine,
    refine_step,
    sample_point_pairs,
)

from conftest import disk_mask, full_roi, two_tone


def eroded_right_fixture():
    """Two-tone disk image with the prediction eroded on the right side."""
    gt = disk_mask((48, 48), (24, 24), 14)
    img = two_tone(gt)
    pred = gt.copy()
    ys, xs = np.mgrid[0:48, 0:48]
    pred &= ~((xs >= 30) & gt)  # carve a false-negative band on the right
    roi = Roi(14, 10, 30, 28)
    return img, gt, pred, roi


# ----------------------------------------------------------- highlighting


def test_highlight_overall_is_full_boundary():
    m = disk_mask((32, 32), (16, 16), 8)
    roi = full_roi(m)
    from langseg.grid import extract_boundary

    assert set(highlight_boundary(m, roi, Direction.OVERALL)) == extract_boundary(m, roi)


def test_highlight_right_is_right_arc():
    m = disk_mask((32, 32), (16, 16), 8)
    roi = full_roi(m)
    pts = highlight_boundary(m, roi, Direction.RIGHT)
    assert pts, "right arc must be nonempty"
    for x, y in pts:
        assert x > 16  # strictly on the right of the centroid
        assert abs(y - 16) <= abs(x - 16)  # within +-45 deg of due right


def test_highlight_vertical_edge_of_half_plane():
    m = np.zeros((20, 20), dtype=bool)
    m[:, :10] = True
    roi = Roi(0, 0, 20, 20)
    pts = highlight_boundary(m, roi, Direction.RIGHT)
    # Centroid sits at (4.5, 9.5); the vertical edge column x=9 faces right.
    xs = {x for x, _ in pts}
    assert xs == {9}
    # Rows inside the half-open 45-degree sector: |9.5 - y| < 4.5 * tan(22.5).
    ys = sorted(y for _, y in pts)
    assert ys == [8, 9, 10, 11]


def test_highlight_empty_foreground():
    m = np.zeros((10, 10), dtype=bool)
    assert highlight_boundary(m, full_roi(m), Direction.OVERALL) == []


def test_highlight_ordered_by_angle():
    m = disk_mask((32, 32), (16, 16), 9)
    pts = highlight_boundary(m, full_roi(m), Direction.OVERALL)
    from langseg.grid import angle_deg_between, foreground_centroid

    c = foreground_centroid(m, full_roi(m))
    angles = [angle_deg_between(c, p) for p in pts]
    assert angles == sorted(angles)


# --------------------------------------------------------------- sampling


def test_sample_count_arithmetic():
    m = disk_mask((64, 64), (32, 32), 20)
    img = two_tone(m)
    roi = full_roi(m)
    highlighted = highlight_boundary(m, roi, Direction.OVERALL)
    # Force the highlighted list to exactly 40 entries for the arithmetic check.
    highlighted = highlighted[:40]
    pairs = sample_point_pairs(m, img, roi, highlighted, RefineParams(sample_percent=20, offset=2))
    assert len(pairs) <= 8
    picks = {((p_in[0] + p_out[0]) // 2, (p_in[1] + p_out[1]) // 2) for p_in, p_out in pairs}
    assert len(picks) == len(pairs)


def test_sample_pairs_thin_strip_discarded():
    # Full-width 1-px strip: displaced points either stay on the strip
    # (p_out not background) or leave the roi, so every pair is discarded.
    m = np.zeros((16, 16), dtype=bool)
    m[8, :] = True
    img = np.full((16, 16), 0.5)
    img[8, :] = 0.9
    roi = full_roi(m)
    highlighted = highlight_boundary(m, roi, Direction.OVERALL)
    pairs = sample_point_pairs(m, img, roi, highlighted, RefineParams(sample_percent=100, offset=2))
    assert pairs == []


def test_sample_pairs_disk_all_valid():
    m = disk_mask((40, 40), (20, 20), 10)
    img = two_tone(m)
    roi = full_roi(m)
    highlighted = highlight_boundary(m, roi, Direction.OVERALL)
    pairs = sample_point_pairs(m, img, roi, highlighted, RefineParams(sample_percent=20, offset=2))
    assert pairs
    for (ix, iy), (ox, oy) in pairs:
        assert m[iy, ix]
        assert not m[oy, ox]


# ------------------------------------------------------------------ steps


def test_step_disjoint_clusters_give_eta_zero():
    # Perfect prediction on a sharp two-tone edge: inner/outer clusters disjoint.
    gt = disk_mask((40, 40), (20, 20), 12)
    img = two_tone(gt)
    roi = full_roi(gt)
    out = refine_step(gt, img, roi, Direction.OVERALL, BoundaryOp.EXPAND, RefineParams())
    assert out.eta == 0.0
    assert np.array_equal(out.mask, gt)


def test_step_identical_clusters_give_eta_one():
    # Flat image: every cluster is the same capped region around its seed.
    m = disk_mask((30, 30), (15, 15), 8)
    img = np.full((30, 30), 0.5)
    roi = full_roi(m)
    params = RefineParams(cluster=ClusterParams(granularity=0.5, max_region_fraction=1.0))
    out = refine_step(m, img, roi, Direction.OVERALL, BoundaryOp.EXPAND, params)
    assert out.eta == 1.0


def test_step_no_boundary_warns_unchanged():
    m = np.zeros((12, 12), dtype=bool)
    img = np.full((12, 12), 0.5)
    out = refine_step(m, img, full_roi(m), Direction.OVERALL, BoundaryOp.EXPAND, RefineParams())
    assert out.warning is not None
    assert out.eta == 1.0
    assert not out.mask.any()


def test_step_expand_rejoins_fn_band():
    img, gt, pred, roi = eroded_right_fixture()
    out = refine_step(pred, img, roi, Direction.RIGHT, BoundaryOp.EXPAND, RefineParams())
    gained = out.mask & ~pred
    assert gained.any()
    assert (gained & gt).sum() == gained.sum()  # only true-foreground regained


# ------------------------------------------------------------------ refine


def test_refine_expand_monotone_and_local():
    img, gt, pred, roi = eroded_right_fixture()
    result = refine(pred, img, roi, Direction.RIGHT, BoundaryOp.EXPAND, RefineParams())
    outside = np.ones_like(pred)
    outside[roi.rows, roi.cols] = False
    assert np.array_equal(result.mask[outside], pred[outside])
    assert not (pred & ~result.mask).any()  # expansion never loses pixels


def test_refine_improves_dice_on_fixture():
    img, gt, pred, roi = eroded_right_fixture()
    result = refine(pred, img, roi, Direction.RIGHT, BoundaryOp.EXPAND, RefineParams())
    before = dice(pred[roi.rows, roi.cols], gt[roi.rows, roi.cols])
    after = dice(result.mask[roi.rows, roi.cols], gt[roi.rows, roi.cols])
    assert after > before


def test_refine_shrink_removes_fp_band():
    gt = disk_mask((48, 48), (24, 24), 12)
    img = two_tone(gt)
    pred = gt | disk_mask((48, 48), (36, 24), 7)  # false-positive lobe on the right
    roi = Roi(24, 10, 24, 28)
    result = refine(pred, img, roi, Direction.RIGHT, BoundaryOp.SHRINK, RefineParams())
    before = dice(pred[roi.rows, roi.cols], gt[roi.rows, roi.cols])
    after = dice(result.mask[roi.rows, roi.cols], gt[roi.rows, roi.cols])
    assert after > before
    assert not (result.mask & ~pred).any()  # shrinking never adds pixels


def test_refine_trace_bounds_and_argmin():
    img, gt, pred, roi = eroded_right_fixture()
    result = refine(pred, img, roi, Direction.RIGHT, BoundaryOp.EXPAND, RefineParams())
    etas = [e.eta for e in result.trace.entries]
    assert all(0.0 <= e <= 1.0 for e in etas)
    best = min(range(len(etas)), key=lambda i: (etas[i], i))
    assert result.best_iter == best + 1


def test_refine_zero_granularity_returns_input():
    img, gt, pred, roi = eroded_right_fixture()
    rng = np.random.default_rng(3)
    noisy = np.clip(img + rng.uniform(-1e-4, 1e-4, img.shape), 0, 1)  # all-distinct
    params = RefineParams(cluster=ClusterParams(granularity=1e-12, max_region_fraction=1.0))
    result = refine(pred, noisy, roi, Direction.RIGHT, BoundaryOp.EXPAND, params)
    assert np.array_equal(result.mask, pred)
    assert result.trace.entries[-1].eta == 0.0


def test_trace_csv_and_tie_break():
    trace = EtaTrace(entries=(TraceEntry(1, 0.5), TraceEntry(2, 0.25), TraceEntry(3, 0.25)))
    assert trace.argmin() == 2
    csv = trace.to_csv()
    assert csv.splitlines()[0] == "t,eta"
    assert csv.splitlines()[2] == "2,0.25"


def test_refine_monotone_chains_seeded():
    # Expansion snapshots are nondecreasing, shrink snapshots nonincreasing.
    rng = np.random.default_rng(42)
    for _ in range(10):
        cx, cy = rng.integers(18, 30, size=2)
        r = int(rng.integers(8, 13))
        gt = disk_mask((48, 48), (int(cx), int(cy)), r)
        img = two_tone(gt)
        img = np.clip(img + rng.normal(0, 0.01, img.shape), 0, 1)
        pred = ndimage.binary_erosion(gt, iterations=2)
        roi = Roi(6, 6, 36, 36)
        prev = pred
        for op, direction in ((BoundaryOp.EXPAND, Direction.OVERALL),):
            params = RefineParams(max_iters=6)
            res = refine(prev, img, roi, direction, op, params)
            cur = prev
            for t in range(1, len(res.trace.entries) + 1):
                step = refine_step(cur, img, roi, direction, op, params)
                assert not (cur & ~step.mask).any()
                cur = step.mask
