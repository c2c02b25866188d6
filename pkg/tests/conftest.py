from __future__ import annotations

import numpy as np
import pytest

from langseg.grid import Roi


def disk_mask(shape: tuple[int, int], center: tuple[int, int], radius: float) -> np.ndarray:
    """Boolean disk: pixels within Euclidean radius of center (x, y)."""
    h, w = shape
    ys, xs = np.mgrid[0:h, 0:w]
    cx, cy = center
    return (xs - cx) ** 2 + (ys - cy) ** 2 <= radius * radius


def ellipse_mask(
    shape: tuple[int, int], center: tuple[int, int], a: float, b: float, angle_deg: float = 0.0
) -> np.ndarray:
    h, w = shape
    ys, xs = np.mgrid[0:h, 0:w]
    cx, cy = center
    t = np.deg2rad(angle_deg)
    u = (xs - cx) * np.cos(t) + (ys - cy) * np.sin(t)
    v = -(xs - cx) * np.sin(t) + (ys - cy) * np.cos(t)
    return (u / a) ** 2 + (v / b) ** 2 <= 1.0


def two_tone(mask: np.ndarray, fg: float = 0.75, bg: float = 0.25) -> np.ndarray:
    """Intensity image that is fg on the mask and bg elsewhere."""
    return np.where(mask, fg, bg).astype(float)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)


def random_mask(rng: np.random.Generator, shape=(24, 24), p: float = 0.4) -> np.ndarray:
    return rng.random(shape) < p


def full_roi(arr: np.ndarray) -> Roi:
    return Roi(0, 0, arr.shape[1], arr.shape[0])
