"""Multi-class linear SVM with the single-worst-competitor hinge loss, trained
by seeded stochastic subgradient descent with iterate averaging."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SvmModel:
    weights: np.ndarray        # float32 (n_classes, dim)
    class_labels: list[str]
    alpha: float
    epochs: int
    final_objective: float
    seed: int
    objective_history: tuple[float, ...] = field(default=(), compare=False)

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


def svm_objective(weights: np.ndarray, features: np.ndarray, labels: np.ndarray,
                  alpha: float) -> float:
    """sum_j ||w_j||^2 + alpha * sum_i max(0, 1 + s_worst - s_true)."""
    scores = features @ weights.T
    m = len(features)
    true = scores[np.arange(m), labels]
    rival = scores.copy()
    rival[np.arange(m), labels] = -np.inf
    worst = rival.max(axis=1)
    hinge = np.maximum(0.0, 1.0 + worst - true)
    return float((weights * weights).sum() + alpha * hinge.sum())


def svm_subgradient(weights: np.ndarray, features: np.ndarray, labels: np.ndarray,
                    alpha: float) -> np.ndarray:
    """Subgradient of :func:`svm_objective` (worst competitor by argmax, ties to
    the lowest class index)."""
    grad = 2.0 * weights
    scores = features @ weights.T
    m = len(features)
    true = scores[np.arange(m), labels]
    rival = scores.copy()
    rival[np.arange(m), labels] = -np.inf
    worst = rival.argmax(axis=1)
    violated = 1.0 + rival[np.arange(m), worst] - true > 0
    for i in np.nonzero(violated)[0]:
        grad[worst[i]] += alpha * features[i]
        grad[labels[i]] -= alpha * features[i]
    return grad


def train(features: np.ndarray, labels: np.ndarray, class_labels: list[str],
          alpha: float = 10.0, seed: int = 0, epochs: int = 200) -> SvmModel:
    """Stochastic subgradient descent with 1/(lambda*t) steps (lambda = 2, the
    modulus of the squared-norm regularizer) and averaged iterates.
    Deterministic given the data order and seed."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    n_classes = len(class_labels)
    if n_classes < 2 or len(np.unique(y)) < 2:
        raise ValueError("training needs at least two distinct classes")
    m, dim = x.shape
    rng = np.random.default_rng(seed)

    w = np.zeros((n_classes, dim))
    avg = np.zeros_like(w)
    t = 0
    history = []
    for _ in range(epochs):
        for i in rng.permutation(m):
            t += 1
            eta = 1.0 / (2.0 * t)
            scores = w @ x[i]
            true_score = scores[y[i]]
            scores[y[i]] = -np.inf
            worst = int(np.argmax(scores))
            w *= 1.0 - 2.0 * eta
            if 1.0 + scores[worst] - true_score > 0:
                step = eta * alpha * m
                w[worst] -= step * x[i]
                w[y[i]] += step * x[i]
            avg += (w - avg) / t
        history.append(svm_objective(avg, x, y, alpha))
    return SvmModel(weights=avg.astype(np.float32), class_labels=list(class_labels),
                    alpha=alpha, epochs=epochs, final_objective=history[-1], seed=seed,
                    objective_history=tuple(history))


def decision_scores(model: SvmModel, vector: np.ndarray) -> np.ndarray:
    v = np.asarray(vector, dtype=np.float64)
    if v.shape[-1] != model.dim:
        raise ValueError(f"feature dimension {v.shape[-1]} does not match model dim {model.dim}")
    return model.weights.astype(np.float64) @ v


def predict(model: SvmModel, vector: np.ndarray) -> int:
    """Class index with the highest linear score, ties to the lowest index."""
    return int(np.argmax(decision_scores(model, vector)))
