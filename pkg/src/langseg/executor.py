"""Program execution against an image / mask / roi environment.

Each step reads the previous step's output variable and writes a fresh
one; a failing step logs a warning and passes its input through unchanged
so a single bad clause cannot destroy the rest of the program.  All
operations touch roi pixels only.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .commands import Op, Program, UnboundVariable
from .grid import (
    Direction,
    Roi,
    angle_deg_between,
    as_image,
    as_labels,
    as_mask,
    connected_components,
    direction_of,
    gaussian_smooth_threshold,
    morph_close,
    sector_wedge,
)
from .refine import BoundaryOp, RefineParams, refine


@dataclass(frozen=True)
class ExecConfig:
    """Per-operation parameter defaults, overridable via the flat config file."""

    refine: RefineParams = field(default_factory=RefineParams)
    fill_radius: int = 3
    smooth_sigma: float = 2.0
    smooth_thresh: float = 0.5
    frag_area_fraction: float = 0.05


@dataclass
class StepRecord:
    op: str
    direction: str | None
    out_var: str
    warnings: list[str] = field(default_factory=list)
    eta_trace: list[tuple[int, float]] | None = None

    def to_dict(self) -> dict:
        return {
            "op": self.op,
            "direction": self.direction,
            "outVar": self.out_var,
            "warnings": list(self.warnings),
            "etaTrace": [[t, eta] for t, eta in self.eta_trace] if self.eta_trace else None,
        }


@dataclass
class ExecEnv:
    image: np.ndarray
    initial_mask: np.ndarray
    roi: Roi
    config: ExecConfig = field(default_factory=ExecConfig)
    bindings: dict[str, np.ndarray] = field(init=False)
    log: list[StepRecord] = field(init=False)

    def __post_init__(self) -> None:
        self.image = as_image(self.image)
        self.initial_mask = as_mask(self.initial_mask)
        if self.image.shape != self.initial_mask.shape:
            raise ValueError("image and mask dimensions must match")
        self.roi.validate(self.image.shape)
        self.bindings = {"MASK": self.initial_mask.copy()}
        self.log = []


def _remove_fragments(mask: np.ndarray, roi: Roi, direction: Direction, cfg: ExecConfig) -> np.ndarray:
    threshold = cfg.frag_area_fraction * roi.area
    out = mask.copy()
    center = roi.center
    for comp in connected_components(mask, roi, connectivity=8):
        if comp.area >= threshold:
            continue
        if direction is not Direction.OVERALL:
            angle = angle_deg_between(center, comp.centroid)
            if direction_of(angle) is not direction:
                continue
        for x, y in comp.pixels:
            out[y, x] = False
    return out


def _fill_holes(mask: np.ndarray, roi: Roi, direction: Direction, cfg: ExecConfig) -> np.ndarray:
    closed = morph_close(mask, roi, cfg.fill_radius)
    if direction is Direction.OVERALL:
        return closed
    added = closed & ~mask
    out = mask.copy()
    center = roi.center
    for comp in connected_components(added, roi, connectivity=8):
        angle = angle_deg_between(center, comp.centroid)
        if direction_of(angle) is not direction:
            continue
        for x, y in comp.pixels:
            out[y, x] = True
    return out


def _smooth(mask: np.ndarray, roi: Roi, direction: Direction, cfg: ExecConfig) -> np.ndarray:
    smoothed = gaussian_smooth_threshold(mask, roi, cfg.smooth_sigma, cfg.smooth_thresh)
    if direction is Direction.OVERALL:
        return smoothed
    wedge = sector_wedge(roi, direction)
    out = mask.copy()
    window = out[roi.rows, roi.cols]
    window[wedge] = smoothed[roi.rows, roi.cols][wedge]
    out[roi.rows, roi.cols] = window
    return out


def _set_region(mask: np.ndarray, roi: Roi, value: bool) -> np.ndarray:
    out = mask.copy()
    out[roi.rows, roi.cols] = value
    return out


def execute(program: Program, env: ExecEnv) -> tuple[np.ndarray, list[StepRecord]]:
    """Run the program; returns the refined full-image mask and the step log.

    The returned mask equals the initial mask outside the roi.  Step-level
    failures are recorded as warnings and the offending step passes its
    input mask through unchanged; only unbound variables abort execution.
    """
    program.validate()
    cfg = env.config
    result_var = None
    for step in program.steps:
        if step.src not in env.bindings:
            raise UnboundVariable(step.src)
        src = env.bindings[step.src]
        record = StepRecord(
            op=step.op.value,
            direction=step.direction.value if step.direction else None,
            out_var=step.out,
        )
        if step.op is Op.RESULT:
            env.bindings[step.out] = src
            result_var = step.out
            env.log.append(record)
            continue
        try:
            if step.op in (Op.EXPAND, Op.SHRINK):
                bop = BoundaryOp.EXPAND if step.op is Op.EXPAND else BoundaryOp.SHRINK
                res = refine(src, env.image, env.roi, step.direction, bop, cfg.refine)
                out = res.mask
                record.eta_trace = [(e.iteration, e.eta) for e in res.trace.entries]
                record.warnings.extend(res.warnings)
            elif step.op is Op.REMOVE:
                out = _remove_fragments(src, env.roi, step.direction, cfg)
            elif step.op is Op.FILL:
                out = _fill_holes(src, env.roi, step.direction, cfg)
            elif step.op is Op.SMOOTH:
                out = _smooth(src, env.roi, step.direction, cfg)
            elif step.op is Op.FOREGROUND:
                out = _set_region(src, env.roi, True)
            elif step.op is Op.BACKGROUND:
                out = _set_region(src, env.roi, False)
            else:  # pragma: no cover - vocabulary is closed
                raise ValueError(f"unexpected op {step.op}")
        except Exception as exc:  # noqa: BLE001 - per-step failure tolerance
            record.warnings.append(f"{step.op.value} failed: {exc}")
            out = src.copy()
        env.bindings[step.out] = out
        env.log.append(record)

    final = env.initial_mask.copy()
    refined = env.bindings[result_var]
    final[env.roi.rows, env.roi.cols] = refined[env.roi.rows, env.roi.cols]
    return final, env.log


def apply_patch(
    labels: np.ndarray, roi: Roi, patch: np.ndarray, class_id: int, class_count: int
) -> np.ndarray:
    """Write a binary roi patch into a label map.

    Inside the roi, pixels become class_id where the patch is set and
    background elsewhere; pixels outside the roi are untouched.  The patch
    may be roi-sized or full-sized (read roi-restricted).
    """
    labels = as_labels(labels, class_count)
    roi.validate(labels.shape)
    if not 0 <= class_id < class_count:
        raise ValueError(f"class_id {class_id} out of range for {class_count} classes")
    patch = as_mask(patch)
    if patch.shape == labels.shape:
        window = patch[roi.rows, roi.cols]
    elif patch.shape == (roi.h, roi.w):
        window = patch
    else:
        raise ValueError(f"patch shape {patch.shape} matches neither roi nor image")
    out = labels.copy()
    out[roi.rows, roi.cols] = np.where(window, class_id, 0)
    return out
