"""Budgeted region-of-interest selection for the active rounds.

Scoring is pluggable: any callable mapping a probability map to a per-pixel
score grid can drive `select_rois`.  Entropy scoring and seeded random
selection ship here; window means are compared, not sums, so roi-size
scaling studies stay fair.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import Roi, as_probs

ScoreFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class BudgetPlan:
    """Per-image annotation budget split evenly across active rounds."""

    budget_percent: float
    rounds: int
    roi_w: int
    roi_h: int

    def __post_init__(self) -> None:
        if not 0.0 < self.budget_percent <= 100.0:
            raise ValueError("budget_percent must lie in (0, 100]")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.roi_w < 1 or self.roi_h < 1:
            raise ValueError("roi dimensions must be >= 1")

    @property
    def per_round_percent(self) -> float:
        return self.budget_percent / self.rounds

    @property
    def roi_area(self) -> int:
        return self.roi_w * self.roi_h


def entropy_map(probs: np.ndarray) -> np.ndarray:
    """Per-pixel Shannon entropy -sum_c p ln p, with 0 ln 0 = 0."""
    p = as_probs(probs)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, p * np.log(p), 0.0)
    return -terms.sum(axis=0)


def _window_means(score: np.ndarray, roi_h: int, roi_w: int) -> np.ndarray:
    """Mean score of every roi-sized window, via an integral image."""
    integral = np.zeros((score.shape[0] + 1, score.shape[1] + 1))
    integral[1:, 1:] = score.cumsum(axis=0).cumsum(axis=1)
    sums = (
        integral[roi_h:, roi_w:]
        - integral[:-roi_h, roi_w:]
        - integral[roi_h:, :-roi_w]
        + integral[:-roi_h, :-roi_w]
    )
    # quantize: structurally equal windows must tie exactly despite cumsum noise
    return np.round(sums / (roi_h * roi_w), 10)


def _roi_count(plan: BudgetPlan, width: int, height: int, excluded: list[Roi]) -> int:
    count = int(plan.per_round_percent / 100.0 * width * height / plan.roi_area)
    if count == 0:
        # Minimum-one floor so tiny images still adapt, suppressed once the
        # accumulated selections have spent the plan's total budget.
        spent = sum(r.area for r in excluded)
        if spent <= plan.budget_percent / 100.0 * width * height:
            count = 1
    return count


def _invalidate(valid: np.ndarray, roi: Roi, roi_h: int, roi_w: int) -> None:
    """Mark all window origins whose rectangle would overlap the roi."""
    y0 = max(0, roi.y - roi_h + 1)
    x0 = max(0, roi.x - roi_w + 1)
    valid[y0 : roi.y + roi.h, x0 : roi.x + roi.w] = False


def select_rois(score: np.ndarray, plan: BudgetPlan, excluded: list[Roi] | None = None) -> list[Roi]:
    """Greedy max-mean-score windows, disjoint from each other and `excluded`.

    Ties resolve to the smallest (y, x) origin.  May return fewer windows
    than budgeted when no disjoint candidate remains.
    """
    score = np.asarray(score, dtype=float)
    height, width = score.shape
    if plan.roi_w > width or plan.roi_h > height:
        raise ValueError("roi does not fit in image")
    excluded = list(excluded or [])
    budget = _roi_count(plan, width, height, excluded)

    means = _window_means(score, plan.roi_h, plan.roi_w)
    valid = np.ones_like(means, dtype=bool)
    for roi in excluded:
        _invalidate(valid, roi, plan.roi_h, plan.roi_w)

    picked: list[Roi] = []
    neg_inf = -np.inf
    while len(picked) < budget and valid.any():
        flat = np.where(valid, means, neg_inf)
        idx = int(flat.argmax())  # first occurrence = smallest (y, x)
        y, x = divmod(idx, means.shape[1])
        roi = Roi(x, y, plan.roi_w, plan.roi_h)
        picked.append(roi)
        _invalidate(valid, roi, plan.roi_h, plan.roi_w)
    return picked


def random_rois(
    width: int,
    height: int,
    plan: BudgetPlan,
    excluded: list[Roi] | None = None,
    seed: int = 0,
) -> list[Roi]:
    """Uniformly random disjoint windows from a seeded generator."""
    if plan.roi_w > width or plan.roi_h > height:
        raise ValueError("roi does not fit in image")
    excluded = list(excluded or [])
    budget = _roi_count(plan, width, height, excluded)
    rng = np.random.default_rng(seed)

    valid = np.ones((height - plan.roi_h + 1, width - plan.roi_w + 1), dtype=bool)
    for roi in excluded:
        _invalidate(valid, roi, plan.roi_h, plan.roi_w)

    picked: list[Roi] = []
    while len(picked) < budget:
        candidates = np.flatnonzero(valid)
        if len(candidates) == 0:
            break
        idx = int(candidates[rng.integers(len(candidates))])
        y, x = divmod(idx, valid.shape[1])
        roi = Roi(x, y, plan.roi_w, plan.roi_h)
        picked.append(roi)
        _invalidate(valid, roi, plan.roi_h, plan.roi_w)
    return picked


ACQUISITIONS: dict[str, ScoreFn | None] = {
    "entropy": entropy_map,
    "random": None,  # bypasses scoring; handled by random_rois
}
