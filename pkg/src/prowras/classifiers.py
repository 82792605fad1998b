"""Small deterministic classifiers used by the benchmark harness."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .neighbors import NeighborIndex

logger = logging.getLogger(__name__)


class ClassifierError(RuntimeError):
    pass


@dataclass(frozen=True)
class KnnModel:
    points: np.ndarray
    is_minority: np.ndarray
    minority_label: str
    majority_label: str
    k: int = 5

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        nn = NeighborIndex(self.points).query(X, self.k)
        votes = self.is_minority[nn].sum(axis=1)
        # a tied vote goes to the minority class
        return np.where(2 * votes >= self.k, self.minority_label, self.majority_label)


def knn_fit(train: Dataset, k: int = 5) -> KnnModel:
    if not 1 <= k <= train.n_samples:
        raise ValueError(f"k={k} but only {train.n_samples} training samples")
    return KnnModel(train.features, train.minority_mask, train.minority_label,
                    train.majority_label, k)


def knn_predict(model: KnnModel, X) -> np.ndarray:
    return model.predict(X)


@dataclass(frozen=True)
class LogRegModel:
    weights: np.ndarray
    bias: float
    l2: float
    minority_label: str
    majority_label: str
    n_iter: int = 0
    converged: bool = True
    degenerate: bool = False  # training data had a single class

    def decision_function(self, X) -> np.ndarray:
        return np.atleast_2d(np.asarray(X, dtype=float)) @ self.weights + self.bias

    def predict_proba(self, X) -> np.ndarray:
        """Probability of the minority class."""
        return 1.0 / (1.0 + np.exp(-self.decision_function(X)))

    def predict(self, X) -> np.ndarray:
        return np.where(self.decision_function(X) >= 0.0, self.minority_label, self.majority_label)


def logreg_objective(params: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float):
    """Mean negative log-likelihood plus ``l2 / (2n) * |w|^2``; returns ``(loss, grad)``.

    ``params`` is ``[w..., b]``; the bias is not penalized. ``y`` is 0/1.
    """
    n = len(y)
    w, b = params[:-1], params[-1]
    z = X @ w + b
    loss = np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 / n * (w @ w)
    r = 1.0 / (1.0 + np.exp(-z)) - y
    grad = np.empty_like(params)
    grad[:-1] = X.T @ r / n + l2 / n * w
    grad[-1] = r.mean()
    return float(loss), grad


def logreg_fit(train: Dataset, l2: float = 1.0, max_iter: int = 1000,
               tol: float = 1e-6, record_losses: list | None = None) -> LogRegModel:
    """Gradient descent with Armijo backtracking on :func:`logreg_objective`."""
    X = train.features
    y = train.minority_mask.astype(float)
    n_min = int(y.sum())
    if n_min in (0, len(y)):
        # Dataset validation forbids this; kept for hand-built inputs.
        logger.warning("logistic regression trained on a single class; constant predictor")
        return LogRegModel(np.zeros(X.shape[1]), np.inf if n_min else -np.inf, l2,
                           train.minority_label, train.majority_label, degenerate=True)

    params = np.zeros(X.shape[1] + 1)
    loss, grad = logreg_objective(params, X, y, l2)
    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        gnorm2 = grad @ grad
        if np.sqrt(gnorm2) < tol:
            converged = True
            break
        accepted = False
        while step >= 1e-20:
            cand = params - step * grad
            new_loss, new_grad = logreg_objective(cand, X, y, l2)
            if np.isfinite(new_loss) and new_loss <= loss - 0.5 * step * gnorm2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            if not np.isfinite(loss):
                raise ClassifierError("logistic regression diverged (non-finite loss)")
            # no descent possible at floating-point resolution
            converged = True
            break
        if record_losses is not None:
            record_losses.append(new_loss)
        params, loss, grad = cand, new_loss, new_grad
        step *= 2.0
    if not np.all(np.isfinite(params)):
        raise ClassifierError("logistic regression diverged (non-finite weights)")
    return LogRegModel(params[:-1], float(params[-1]), l2, train.minority_label,
                       train.majority_label, n_iter=it, converged=converged)


def logreg_predict(model: LogRegModel, X) -> np.ndarray:
    return model.predict(X)


CLASSIFIERS = ("knn", "logreg")


def fit_classifier(name: str, train: Dataset, **params):
    if name == "knn":
        return knn_fit(train, **params)
    if name == "logreg":
        return logreg_fit(train, **params)
    raise ValueError(f"unknown classifier {name!r}")
