"""Linear softmax pixel classifier trained by seeded mini-batch gradient
descent on a small fixed feature vector.

Features per pixel: intensity, 3x3 mean, 7x7 mean, gradient magnitude,
normalized x, normalized y, and a bias term.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import as_image

FEATURE_NAMES = ("intensity", "mean3", "mean7", "gradmag", "norm_x", "norm_y", "bias")
N_FEATURES = len(FEATURE_NAMES)


class TrainingDiverged(RuntimeError):
    def __init__(self, step: int, loss: float):
        super().__init__(f"loss became non-finite at step {step}: {loss}")
        self.step = step


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 2.0
    epochs: int = 30
    batch_size: int = 4096
    seed: int = 0


@dataclass
class PixelClassifier:
    weights: np.ndarray  # (N_FEATURES, class_count)
    class_count: int
    final_loss: float | None = None

    def copy(self) -> "PixelClassifier":
        return PixelClassifier(self.weights.copy(), self.class_count, self.final_loss)


def featurize(img: np.ndarray) -> np.ndarray:
    """Per-pixel feature matrix of shape (h*w, N_FEATURES)."""
    img = as_image(img)
    h, w = img.shape
    mean3 = ndimage.uniform_filter(img, size=3, mode="nearest")
    mean7 = ndimage.uniform_filter(img, size=7, mode="nearest")
    gy, gx = np.gradient(img)
    gradmag = np.hypot(gx, gy)
    norm_x = np.broadcast_to(np.linspace(0.0, 1.0, w), (h, w))
    norm_y = np.broadcast_to(np.linspace(0.0, 1.0, h)[:, None], (h, w))
    bias = np.ones((h, w))
    stack = np.stack([img, mean3, mean7, gradmag, norm_x, norm_y, bias], axis=-1)
    return stack.reshape(-1, N_FEATURES)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    eps = 1e-12
    return float(-np.log(probs[np.arange(len(labels)), labels] + eps).mean())


def sgd_fit(
    features: np.ndarray,
    labels: np.ndarray,
    class_count: int,
    cfg: TrainConfig,
    init: np.ndarray | None = None,
) -> PixelClassifier:
    """Seeded mini-batch gradient descent on the softmax cross-entropy."""
    if len(features) == 0:
        raise ValueError("no training pixels")
    rng = np.random.default_rng(cfg.seed)
    weights = np.zeros((N_FEATURES, class_count)) if init is None else init.copy()
    n = len(features)
    step = 0
    loss = float("nan")
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            x = features[batch]
            y = labels[batch]
            probs = _softmax(x @ weights)
            loss = cross_entropy(probs, y)
            if not np.isfinite(loss):
                raise TrainingDiverged(step, loss)
            grad = x.T @ (probs - np.eye(class_count)[y]) / len(batch)
            weights -= cfg.learning_rate * grad
            step += 1
    return PixelClassifier(weights=weights, class_count=class_count, final_loss=loss)


def train_source(items, cfg: TrainConfig, class_count: int | None = None) -> PixelClassifier:
    """Fit the classifier on fully labeled items (image, labels)."""
    if not items:
        raise ValueError("need at least one source item")
    if class_count is None:
        class_count = int(max(item.labels.max() for item in items)) + 1
        class_count = max(class_count, 2)
    features = np.concatenate([featurize(item.image) for item in items])
    labels = np.concatenate([item.labels.ravel() for item in items])
    return sgd_fit(features, labels, class_count, cfg)


def predict_probs(clf: PixelClassifier, img: np.ndarray) -> np.ndarray:
    """Softmax class probabilities, shape (class_count, h, w)."""
    img = as_image(img)
    h, w = img.shape
    probs = _softmax(featurize(img) @ clf.weights)
    return probs.T.reshape(clf.class_count, h, w)


def predict_labels(clf: PixelClassifier, img: np.ndarray) -> np.ndarray:
    return predict_probs(clf, img).argmax(axis=0)
