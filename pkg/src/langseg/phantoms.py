"""Synthetic phantom generation with optional domain shift, plus the
prediction-perturbation families used to manufacture erroneous masks.

Everything here is byte-deterministic under a fixed seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import Direction, as_mask, sector_index, _SECTORS


@dataclass(frozen=True)
class PhantomSpec:
    width: int = 128
    height: int = 128
    blob_count: int = 3
    blob_radius: tuple[int, int] = (10, 26)
    boundary_blur_sigma: float = 1.0
    class_intensity: tuple[float, ...] = (0.25, 0.75)
    noise_sigma: float = 0.015
    domain_shift: str = "none"  # none | intensity
    seed: int = 0

    def __post_init__(self) -> None:
        if self.width < 32 or self.height < 32:
            raise ValueError("phantom dimensions must be at least 32")
        if self.domain_shift not in ("none", "intensity"):
            raise ValueError(f"unknown domain shift {self.domain_shift!r}")
        if len(self.class_intensity) < 2:
            raise ValueError("need an intensity level per class (>= 2)")

    @property
    def class_count(self) -> int:
        return len(self.class_intensity)


@dataclass(frozen=True)
class DatasetItem:
    image: np.ndarray
    labels: np.ndarray
    tag: str  # source | target-train | target-test


# Monotone remap applied to target-domain intensities before extra noise.
# The compression pushes the bright class just below the midpoint a
# source-trained classifier settles on, so source-only predictions degrade
# visibly until the model is adapted.
_SHIFT_OFFSET = 0.25
_SHIFT_SCALE = 0.30
_SHIFT_EXTRA_NOISE = 0.01


def _one_phantom(spec: PhantomSpec, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    h, w = spec.height, spec.width
    labels = np.zeros((h, w), dtype=np.int64)
    ys, xs = np.mgrid[0:h, 0:w]
    lo, hi = spec.blob_radius
    for i in range(spec.blob_count):
        cls = 1 + i % (spec.class_count - 1)
        a = float(rng.uniform(lo, hi))
        b = float(rng.uniform(lo, hi))
        theta = float(rng.uniform(0, np.pi))
        cx = float(rng.uniform(hi, w - hi))
        cy = float(rng.uniform(hi, h - hi))
        u = (xs - cx) * np.cos(theta) + (ys - cy) * np.sin(theta)
        v = -(xs - cx) * np.sin(theta) + (ys - cy) * np.cos(theta)
        blob = (u / a) ** 2 + (v / b) ** 2 <= 1.0
        labels[blob] = cls

    levels = np.asarray(spec.class_intensity, dtype=float)
    image = levels[labels]
    if spec.boundary_blur_sigma > 0:
        image = ndimage.gaussian_filter(image, spec.boundary_blur_sigma, mode="nearest")
    if spec.domain_shift == "intensity":
        image = _SHIFT_OFFSET + _SHIFT_SCALE * np.clip(image, 0.0, 1.0)
        image = image + rng.normal(0.0, _SHIFT_EXTRA_NOISE, size=image.shape)
    if spec.noise_sigma > 0:
        image = image + rng.normal(0.0, spec.noise_sigma, size=image.shape)
    return np.clip(image, 0.0, 1.0), labels


def generate_phantoms(spec: PhantomSpec, n: int, tag: str = "source") -> list[DatasetItem]:
    """n seeded phantoms; regenerating with the same spec gives identical bytes."""
    rng = np.random.default_rng(spec.seed)
    items = []
    for _ in range(n):
        image, labels = _one_phantom(spec, rng)
        items.append(DatasetItem(image=image, labels=labels, tag=tag))
    return items


def benchmark_shift(seed: int = 20240601) -> dict[str, list[DatasetItem]]:
    """The shipped seeded synthetic-shift dataset.

    20 source / 20 target-train / 10 target-test images, 128x128, two
    classes, target domain under a monotone intensity remap plus noise.
    """
    source_spec = PhantomSpec(seed=seed)
    train_spec = PhantomSpec(seed=seed + 1, domain_shift="intensity")
    test_spec = PhantomSpec(seed=seed + 2, domain_shift="intensity")
    return {
        "source": generate_phantoms(source_spec, 20, "source"),
        "target-train": generate_phantoms(train_spec, 20, "target-train"),
        "target-test": generate_phantoms(test_spec, 10, "target-test"),
    }


# ----------------------------------------------------------- perturbations


@dataclass(frozen=True)
class PerturbSpec:
    """Four corruption families for synthesizing erroneous predictions.

    erode/dilate lobes act only on the sector of the mask-centroid wedge
    facing their direction (None = everywhere), creating directional FN/FP
    bands.  Zero strengths everywhere make the perturbation an identity.
    """

    erode_radius: int = 0
    erode_direction: Direction | None = None
    dilate_radius: int = 0
    dilate_direction: Direction | None = None
    hole_count: int = 0
    hole_radius: int = 2
    fragment_count: int = 0
    fragment_radius: int = 2
    jitter: float = 0.0
    seed: int = 0


def _direction_wedge(shape: tuple[int, int], center: tuple[float, float], direction: Direction | None) -> np.ndarray:
    if direction is None or direction is Direction.OVERALL:
        return np.ones(shape, dtype=bool)
    h, w = shape
    ys, xs = np.mgrid[0:h, 0:w]
    cx, cy = center
    angles = np.degrees(np.arctan2(cy - ys, xs - cx))
    return sector_index(angles) == _SECTORS.index(direction)


def _mask_centroid(mask: np.ndarray) -> tuple[float, float]:
    ys, xs = np.nonzero(mask)
    if len(xs) == 0:
        return ((mask.shape[1] - 1) / 2.0, (mask.shape[0] - 1) / 2.0)
    return (float(xs.mean()), float(ys.mean()))


def perturb_mask(gt: np.ndarray, spec: PerturbSpec) -> np.ndarray:
    """Corrupt a ground-truth mask into an erroneous 'prediction'."""
    gt = as_mask(gt)
    rng = np.random.default_rng(spec.seed)
    out = gt.copy()
    center = _mask_centroid(gt)

    if spec.erode_radius > 0:
        eroded = ndimage.binary_erosion(gt, iterations=spec.erode_radius)
        removed = gt & ~eroded
        wedge = _direction_wedge(gt.shape, center, spec.erode_direction)
        out &= ~(removed & wedge)

    if spec.dilate_radius > 0:
        dilated = ndimage.binary_dilation(gt, iterations=spec.dilate_radius)
        added = dilated & ~gt
        wedge = _direction_wedge(gt.shape, center, spec.dilate_direction)
        out |= added & wedge

    if spec.hole_count > 0:
        interior = ndimage.binary_erosion(out, iterations=spec.hole_radius + 1)
        iys, ixs = np.nonzero(interior)
        if len(ixs):
            for _ in range(spec.hole_count):
                k = int(rng.integers(len(ixs)))
                ys_g, xs_g = np.mgrid[0 : gt.shape[0], 0 : gt.shape[1]]
                hole = (xs_g - ixs[k]) ** 2 + (ys_g - iys[k]) ** 2 <= spec.hole_radius**2
                out &= ~hole

    if spec.fragment_count > 0:
        # spray small blobs well clear of the foreground
        distance = ndimage.distance_transform_edt(~gt)
        margin = spec.fragment_radius + 3
        fys, fxs = np.nonzero(distance > margin)
        if len(fxs):
            for _ in range(spec.fragment_count):
                k = int(rng.integers(len(fxs)))
                ys_g, xs_g = np.mgrid[0 : gt.shape[0], 0 : gt.shape[1]]
                blob = (xs_g - fxs[k]) ** 2 + (ys_g - fys[k]) ** 2 <= spec.fragment_radius**2
                out |= blob

    if spec.jitter > 0:
        band = ndimage.binary_dilation(out) & ~ndimage.binary_erosion(out)
        flips = band & (rng.random(out.shape) < spec.jitter)
        out ^= flips

    return out
