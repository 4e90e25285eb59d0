"""Multinomial logistic regression with an L2 penalty."""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(params: np.ndarray, X: np.ndarray, Y: np.ndarray, alpha: float):
    """Penalized negative log-likelihood and its gradient.

    ``params`` is the flattened ``(d + 1, K)`` weight matrix whose last row
    holds the intercepts (not penalized); ``Y`` is one-hot ``(n, K)``.
    """
    n, d = X.shape
    K = Y.shape[1]
    W = params.reshape(d + 1, K)
    Z = X @ W[:d] + W[d]
    Zmax = Z.max(axis=1, keepdims=True)
    logsum = Zmax[:, 0] + np.log(np.exp(Z - Zmax).sum(axis=1))
    nll = float(np.sum(logsum - np.sum(Y * Z, axis=1)))
    loss = nll + 0.5 * alpha * float(np.sum(W[:d] ** 2))
    R = softmax(Z) - Y
    grad = np.empty_like(W)
    grad[:d] = X.T @ R + alpha * W[:d]
    grad[d] = R.sum(axis=0)
    return loss, grad.ravel()


class LogisticRegression:
    """L2-penalized softmax regression fitted with L-BFGS.

    Features are standardized with training statistics before fitting.
    ``alpha`` is the penalty weight on the summed (not averaged) loss.
    """

    def __init__(self, alpha: float = 1.0, tol: float = 1e-6, max_iter: int = 500):
        self.alpha = alpha
        self.tol = tol
        self.max_iter = max_iter
        self.coef_ = None

    def fit(self, X, y, n_classes: int | None = None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        K = int(n_classes if n_classes is not None else y.max() + 1)
        self.mean_ = X.mean(axis=0)
        scale = X.std(axis=0)
        self.scale_ = np.where(scale > 0, scale, 1.0)
        Xs = (X - self.mean_) / self.scale_
        Y = np.eye(K)[y]
        x0 = np.zeros((X.shape[1] + 1) * K)
        res = minimize(loss_and_grad, x0, args=(Xs, Y, self.alpha), jac=True,
                       method="L-BFGS-B",
                       options={"gtol": self.tol, "maxiter": self.max_iter, "ftol": 0.0})
        self.coef_ = res.x.reshape(X.shape[1] + 1, K)
        self.n_iter_ = int(res.nit)
        self.converged_ = bool(res.success)
        return self

    def decision_function(self, X) -> np.ndarray:
        if self.coef_ is None:
            raise RuntimeError("model is not trained")
        Xs = (np.asarray(X, dtype=float) - self.mean_) / self.scale_
        d = Xs.shape[1]
        return Xs @ self.coef_[:d] + self.coef_[d]

    def predict_proba(self, X) -> np.ndarray:
        return softmax(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.decision_function(X), axis=1)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "tol": self.tol, "max_iter": self.max_iter,
                "mean": self.mean_.tolist(), "scale": self.scale_.tolist(),
                "coef": self.coef_.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticRegression":
        m = cls(d["alpha"], d["tol"], d["max_iter"])
        m.mean_ = np.asarray(d["mean"], dtype=float)
        m.scale_ = np.asarray(d["scale"], dtype=float)
        m.coef_ = np.asarray(d["coef"], dtype=float)
        return m
