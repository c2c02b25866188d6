"""Expert feedback synthesis from ground truth, for headless runs.

A roi is diagnosed by comparing the prediction against ground truth:
uniform ground truth short-circuits to FOREGROUND/BACKGROUND; otherwise
the dominant error type (false negatives vs false positives) picks EXPAND
or SHRINK with a direction derived from the boundary-centroid-to-error-
centroid vector, followed by fragment, hole, and roughness checks.  The
rendered command is guaranteed to parse back to the same operations.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .commands import Op, parse_command
from .grid import (
    Direction,
    Roi,
    angle_deg_between,
    as_mask,
    boundary_mask,
    connected_components,
    direction_of,
    perimeter_edges,
)


@dataclass(frozen=True)
class FeedbackConfig:
    """Thresholds of the diagnosis rules.

    dominance_min_area: minimum FN/FP pixel count before EXPAND/SHRINK fires.
    frag_max_area: fragment size bound in pixels; None means 5% of roi area.
    roughness_thresh: multiple of the ground-truth isoperimetric roughness
        above which SMOOTH is suggested.
    seed: seeds the phrasing templates, not the diagnosis.
    """

    dominance_min_area: int = 4
    frag_max_area: int | None = None
    roughness_thresh: float = 1.5
    seed: int = 0


@dataclass(frozen=True)
class FeedbackItem:
    op: Op
    direction: Direction
    evidence: dict = field(default_factory=dict, compare=False)


def _error_direction(pred: np.ndarray, roi: Roi, error: np.ndarray) -> Direction:
    """Direction from the prediction-boundary centroid to the error centroid."""
    ys, xs = np.nonzero(boundary_mask(pred, roi))
    if len(xs) == 0:
        origin = roi.center
    else:
        origin = (float(xs.mean()), float(ys.mean()))
    eys, exs = np.nonzero(error)
    target = (float(exs.mean()) + roi.x, float(eys.mean()) + roi.y)
    if math.hypot(target[0] - origin[0], target[1] - origin[1]) < 1e-9:
        return Direction.OVERALL
    return direction_of(angle_deg_between(origin, target))


def _roughness(area: int, perimeter: int) -> float:
    """Isoperimetric ratio perimeter^2 / (4 pi area); 1 for an ideal disk."""
    if area == 0:
        return 0.0
    return perimeter * perimeter / (4.0 * math.pi * area)


def analyze_roi(
    pred: np.ndarray,
    gt: np.ndarray,
    img: np.ndarray,
    roi: Roi,
    cfg: FeedbackConfig | None = None,
) -> list[FeedbackItem]:
    """Diagnose the roi and return the suggested operations in order.

    Returns [] when the prediction already matches ground truth there.
    """
    cfg = cfg or FeedbackConfig()
    pred = as_mask(pred)
    gt = as_mask(gt)
    if pred.shape != gt.shape:
        raise ValueError("prediction and ground truth dimensions must match")
    roi.validate(pred.shape)
    pw = pred[roi.rows, roi.cols]
    gw = gt[roi.rows, roi.cols]

    if np.array_equal(pw, gw):
        return []
    if gw.all():
        return [FeedbackItem(Op.FOREGROUND, Direction.OVERALL, {"uniform": "foreground"})]
    if not gw.any():
        return [FeedbackItem(Op.BACKGROUND, Direction.OVERALL, {"uniform": "background"})]

    items: list[FeedbackItem] = []
    fn = gw & ~pw
    fp = pw & ~gw
    fn_area = int(fn.sum())
    fp_area = int(fp.sum())
    if fn_area > fp_area and fn_area >= cfg.dominance_min_area:
        direction = _error_direction(pred, roi, fn)
        items.append(FeedbackItem(Op.EXPAND, direction, {"fn": fn_area, "fp": fp_area}))
    elif fp_area > fn_area and fp_area >= cfg.dominance_min_area:
        direction = _error_direction(pred, roi, fp)
        items.append(FeedbackItem(Op.SHRINK, direction, {"fn": fn_area, "fp": fp_area}))
    # exact FN/FP tie: neither dominates, skip the boundary operation

    frag_bound = cfg.frag_max_area if cfg.frag_max_area is not None else 0.05 * roi.area
    frag_sectors: list[Direction] = []
    frag_total = 0
    for comp in connected_components(pred, roi, connectivity=8):
        if comp.area >= frag_bound:
            continue
        if any(gt[y, x] for x, y in comp.pixels):
            continue  # true structure, not an artifact
        frag_sectors.append(direction_of(angle_deg_between(roi.center, comp.centroid)))
        frag_total += comp.area
    if frag_sectors:
        unique = set(frag_sectors)
        direction = unique.pop() if len(unique) == 1 else Direction.OVERALL
        items.append(FeedbackItem(Op.REMOVE, direction, {"fragments": len(frag_sectors), "area": frag_total}))

    filled = ndimage.binary_fill_holes(pw)
    holes = filled & ~pw
    if holes.any():
        labeled, count = ndimage.label(holes)
        hole_gt = 0
        for lbl in range(1, count + 1):
            sel = labeled == lbl
            if gw[sel].sum() * 2 > sel.sum():  # majority ground-truth foreground
                hole_gt += 1
        if hole_gt:
            items.append(FeedbackItem(Op.FILL, Direction.OVERALL, {"holes": hole_gt}))

    pred_area = int(pw.sum())
    gt_area = int(gw.sum())
    if pred_area and gt_area:
        rough_pred = _roughness(pred_area, perimeter_edges(pred, roi))
        rough_gt = _roughness(gt_area, perimeter_edges(gt, roi))
        if rough_gt > 0 and rough_pred > cfg.roughness_thresh * rough_gt:
            items.append(
                FeedbackItem(Op.SMOOTH, Direction.OVERALL, {"pred": rough_pred, "gt": rough_gt})
            )
    return items


# phrasing templates; every variant must parse back to its own (op, direction)
_DIR_PHRASES = {
    Direction.TOP: ("top",),
    Direction.BOTTOM: ("bottom",),
    Direction.LEFT: ("left",),
    Direction.RIGHT: ("right",),
    Direction.TOP_LEFT: ("top-left corner", "top-left"),
    Direction.TOP_RIGHT: ("top-right corner", "top-right"),
    Direction.BOTTOM_LEFT: ("bottom-left corner", "bottom-left"),
    Direction.BOTTOM_RIGHT: ("bottom-right corner", "bottom-right"),
}

_TEMPLATES: dict[Op, dict[bool, tuple[str, ...]]] = {
    Op.EXPAND: {
        True: ("expand the boundary", "grow the region"),
        False: (
            "expand the boundary at the {d}",
            "expand to the {d}",
            "grow the region toward the {d}",
            "enlarge the boundary at the {d}",
        ),
    },
    Op.SHRINK: {
        True: ("shrink the boundary", "contract the region"),
        False: (
            "shrink the boundary at the {d}",
            "shrink to the {d}",
            "contract the boundary at the {d}",
            "reduce the region toward the {d}",
        ),
    },
    Op.REMOVE: {
        True: ("remove the small fragments", "delete the small fragments"),
        False: (
            "remove the fragments at the {d}",
            "delete the fragments at the {d}",
            "erase the fragments at the {d}",
        ),
    },
    Op.FILL: {
        True: ("fill up the holes", "fill the holes"),
        False: ("fill the holes at the {d}",),
    },
    Op.SMOOTH: {
        True: ("smooth the overall boundary", "smooth the boundary"),
        False: ("smooth the {d} border", "smooth the boundary at the {d}"),
    },
    Op.FOREGROUND: {
        True: ("mark the whole region as foreground", "mark the region as foreground"),
        False: (),
    },
    Op.BACKGROUND: {
        True: ("mark the whole region as background", "mark the region as background"),
        False: (),
    },
}


def render_feedback(items: list[FeedbackItem], cfg: FeedbackConfig | None = None) -> str:
    """Phrase the items as one expert-style command; parse-closure holds."""
    if not items:
        raise ValueError("cannot render empty feedback")
    cfg = cfg or FeedbackConfig()
    rng = random.Random(cfg.seed)
    parts = []
    for item in items:
        overall = item.direction is Direction.OVERALL
        variants = _TEMPLATES[item.op][overall]
        template = rng.choice(variants)
        if overall:
            parts.append(template)
        else:
            parts.append(template.format(d=rng.choice(_DIR_PHRASES[item.direction])))
    if len(parts) == 1:
        sentence = parts[0]
    elif len(parts) == 2:
        sentence = f"{parts[0]} and {parts[1]}"
    else:
        sentence = ", ".join(parts[:-1]) + f", and {parts[-1]}"
    return sentence[0].upper() + sentence[1:] + "."


def feedback_command(
    pred: np.ndarray,
    gt: np.ndarray,
    img: np.ndarray,
    roi: Roi,
    cfg: FeedbackConfig | None = None,
) -> tuple[str | None, list[FeedbackItem]]:
    """Convenience wrapper: diagnose and phrase; None when nothing to fix."""
    items = analyze_roi(pred, gt, img, roi, cfg)
    if not items:
        return None, []
    command = render_feedback(items, cfg)
    parsed = parse_command(command)
    rendered = [(s.op, s.direction) for s in parsed.steps if s.op is not Op.RESULT]
    wanted = [(i.op, i.direction) for i in items]
    if rendered != wanted:  # pragma: no cover - template closure guarantee
        raise AssertionError(f"feedback phrasing drifted: {command!r} -> {rendered}")
    return command, items
