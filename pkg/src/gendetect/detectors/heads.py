"""Logistic regression head with built-in feature standardization."""

import numpy as np

from ..errors import NotFittedError
from ..validation import check_feature_matrix


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class LogisticHead:
    """Binary logistic regression trained by full-batch gradient descent.

    Features are z-scored with statistics fitted on the training data
    (std floored at 1e-8); the weight vector carries L2 regularization, the
    bias does not.  Deterministic: zero init, fixed iteration count.
    """

    def __init__(self, l2=1e-4, lr=0.1, iterations=500):
        self.l2 = l2
        self.lr = lr
        self.iterations = iterations
        self.mean_ = None
        self.std_ = None
        self.weight_ = None
        self.bias_ = None

    def get_params(self):
        return {"l2": self.l2, "lr": self.lr, "iterations": self.iterations}

    @property
    def is_fitted(self):
        return self.weight_ is not None

    def fit(self, X, y):
        X, y = check_feature_matrix(X, y)
        if len(np.unique(y)) < 2:
            raise ValueError("logistic head needs at least one sample of each label")
        self.mean_ = X.mean(axis=0)
        self.std_ = np.maximum(X.std(axis=0), 1e-8)
        Xs = (X - self.mean_) / self.std_
        n, d = Xs.shape
        w = np.zeros(d)
        b = 0.0
        t = y.astype(np.float64)
        for _ in range(self.iterations):
            p = _sigmoid(Xs @ w + b)
            err = (p - t) / n
            w -= self.lr * (Xs.T @ err + self.l2 * w)
            b -= self.lr * float(err.sum())
        self.weight_ = w
        self.bias_ = b
        return self

    def decision_function(self, X):
        if not self.is_fitted:
            raise NotFittedError("logistic head used before fit")
        X = check_feature_matrix(X)
        return ((X - self.mean_) / self.std_) @ self.weight_ + self.bias_

    def predict_proba(self, X):
        """Probability of label 1 per row, in [0,1]."""
        return _sigmoid(self.decision_function(X))

    def to_state(self):
        if not self.is_fitted:
            raise NotFittedError("cannot serialize an unfitted head")
        return {
            "l2": self.l2,
            "lr": self.lr,
            "iterations": self.iterations,
            "mean": self.mean_.tolist(),
            "std": self.std_.tolist(),
            "weight": self.weight_.tolist(),
            "bias": self.bias_,
        }

    @classmethod
    def from_state(cls, state):
        head = cls(l2=state["l2"], lr=state["lr"], iterations=state["iterations"])
        head.mean_ = np.asarray(state["mean"], dtype=np.float64)
        head.std_ = np.asarray(state["std"], dtype=np.float64)
        head.weight_ = np.asarray(state["weight"], dtype=np.float64)
        head.bias_ = float(state["bias"])
        return head
