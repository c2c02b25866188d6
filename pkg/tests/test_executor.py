from __future__ import annotations

import numpy as np
import pytest

from langseg.commands import parse_command
from langseg.executor import ExecConfig, ExecEnv, apply_patch, execute
from langseg.grid import Direction, Roi, dice

from conftest import disk_mask, full_roi, two_tone


def run(command: str, image, mask, roi, config=None):
    env = ExecEnv(image=image, initial_mask=mask, roi=roi, config=config or ExecConfig())
    return execute(parse_command(command), env)


def test_foreground_fills_roi_only():
    img = np.full((20, 20), 0.5)
    mask = np.zeros((20, 20), dtype=bool)
    roi = Roi(4, 6, 8, 5)
    out, log = run("mark as foreground", img, mask, roi)
    assert out[roi.rows, roi.cols].all()
    outside = np.ones_like(mask)
    outside[roi.rows, roi.cols] = False
    assert not out[outside].any()
    assert len(log) == 2  # FOREGROUND + RESULT


def test_background_then_foreground_last_writer_wins():
    img = np.full((16, 16), 0.5)
    mask = np.ones((16, 16), dtype=bool)
    roi = Roi(2, 2, 6, 6)
    out, _ = run("mark as foreground and mark as background", img, mask, roi)
    assert not out[roi.rows, roi.cols].any()


def test_fill_overall_fills_hole():
    gt = disk_mask((24, 24), (12, 12), 7)
    pred = gt.copy()
    pred[12, 12] = False
    img = two_tone(gt)
    roi = full_roi(pred)
    out, _ = run("fill up the holes", img, pred, roi)
    assert out[12, 12]
    assert (out & ~gt).sum() == 0 or dice(out, gt) >= dice(pred, gt)


def test_remove_small_fragments_overall():
    mask = disk_mask((32, 32), (16, 16), 8)
    mask[2, 2] = True
    mask[28, 29] = True
    img = two_tone(mask)
    roi = full_roi(mask)
    out, _ = run("remove the small fragments", img, mask, roi)
    assert not out[2, 2] and not out[28, 29]
    assert out[16, 16]


def test_remove_directional_only_bottom():
    mask = np.zeros((40, 40), dtype=bool)
    mask[18:23, 18:23] = True          # main body at the center (area 25)
    mask[35, 20] = True                # bottom fragment
    mask[4, 20] = True                 # top fragment
    img = two_tone(mask)
    roi = full_roi(mask)
    out, _ = run("remove the fragments at the bottom", img, mask, roi)
    assert not out[35, 20]
    assert out[4, 20]
    assert out[20, 20]


def test_smooth_removes_jag():
    mask = np.zeros((30, 30), dtype=bool)
    mask[8:22, 8:22] = True
    mask[5, 14] = True  # isolated spike above the block
    img = two_tone(mask)
    out, _ = run("smooth the overall boundary", img, mask, full_roi(mask))
    assert not out[5, 14]
    assert out[14, 14]


def test_smooth_directional_confined_to_wedge():
    mask = np.zeros((30, 30), dtype=bool)
    mask[8:22, 8:22] = True
    mask[14, 4] = True   # spike left of the block
    mask[14, 25] = True  # spike right of the block
    img = two_tone(mask)
    out, _ = run("smooth the right border", img, mask, full_roi(mask))
    assert not out[14, 25]  # right wedge smoothed
    assert out[14, 4]       # left wedge untouched


def test_compound_pipeline_improves_roi_dice():
    gt = disk_mask((48, 48), (22, 26), 12)
    img = two_tone(gt)
    pred = gt.copy()
    ys, xs = np.mgrid[0:48, 0:48]
    # false-negative notch at the top-right of the disk
    pred &= ~((xs >= 26) & (ys <= 22) & gt)
    pred[44, 40] = True  # spurious fragment near the bottom
    roi = Roi(8, 6, 36, 40)
    out, log = run(
        "Expand the boundary at the top-right corner, remove the fragments at "
        "the bottom, and smooth the overall boundary.",
        img,
        pred,
        roi,
    )
    before = dice(pred[roi.rows, roi.cols], gt[roi.rows, roi.cols])
    after = dice(out[roi.rows, roi.cols], gt[roi.rows, roi.cols])
    assert after > before
    assert len(log) == 4
    assert log[0].eta_trace is not None


def test_execute_locality_and_determinism():
    rng = np.random.default_rng(11)
    gt = disk_mask((40, 40), (20, 20), 10)
    img = np.clip(two_tone(gt) + rng.normal(0, 0.02, (40, 40)), 0, 1)
    pred = disk_mask((40, 40), (18, 20), 9)
    roi = Roi(6, 6, 26, 26)
    cmd = "expand to the right and smooth the boundary"
    out1, log1 = run(cmd, img, pred, roi)
    out2, log2 = run(cmd, img, pred, roi)
    assert np.array_equal(out1, out2)
    assert [r.to_dict() for r in log1] == [r.to_dict() for r in log2]
    outside = np.ones_like(pred)
    outside[roi.rows, roi.cols] = False
    assert np.array_equal(out1[outside], pred[outside])


def test_step_failure_passes_through(monkeypatch):
    import langseg.executor as executor_mod

    def boom(*args, **kwargs):
        raise RuntimeError("synthetic failure")

    monkeypatch.setattr(executor_mod, "morph_close", boom)
    img = np.full((16, 16), 0.5)
    mask = disk_mask((16, 16), (8, 8), 4)
    out, log = run("fill up the holes", img, mask, full_roi(mask))
    assert np.array_equal(out, mask)
    assert any("failed" in w for w in log[0].warnings)


# --------------------------------------------------------------- applyPatch


def test_apply_patch_identity():
    labels = np.zeros((12, 12), dtype=int)
    labels[3:6, 3:6] = 1
    roi = Roi(2, 2, 6, 6)
    patch = (labels == 1)[roi.rows, roi.cols]
    assert np.array_equal(apply_patch(labels, roi, patch, 1, 2), labels)


def test_apply_patch_all_zero_clears_roi():
    labels = np.ones((10, 10), dtype=int)
    roi = Roi(1, 1, 4, 4)
    out = apply_patch(labels, roi, np.zeros((4, 4), dtype=bool), 1, 2)
    assert (out[roi.rows, roi.cols] == 0).all()
    outside = np.ones_like(labels, dtype=bool)
    outside[roi.rows, roi.cols] = False
    assert (out[outside] == 1).all()


def test_apply_patch_commutes_on_disjoint_rois():
    rng = np.random.default_rng(5)
    labels = rng.integers(0, 2, size=(20, 20))
    r1, r2 = Roi(1, 1, 6, 6), Roi(10, 10, 7, 5)
    p1 = rng.random((6, 6)) < 0.5
    p2 = rng.random((5, 7)) < 0.5
    a = apply_patch(apply_patch(labels, r1, p1, 1, 2), r2, p2, 1, 2)
    b = apply_patch(apply_patch(labels, r2, p2, 1, 2), r1, p1, 1, 2)
    assert np.array_equal(a, b)


def test_apply_patch_rejects_bad_class():
    labels = np.zeros((8, 8), dtype=int)
    with pytest.raises(ValueError):
        apply_patch(labels, Roi(0, 0, 4, 4), np.zeros((4, 4), dtype=bool), 5, 2)
