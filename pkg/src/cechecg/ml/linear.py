"""L2-regularised multinomial logistic regression and feature standardisation."""
import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp, softmax

from ..errors import TrainingError, ValidationError


class Standardizer:
    """Zero-mean, unit-variance scaling with parameters frozen at fit time."""

    def fit(self, x):
        x = np.asarray(x, dtype=np.float64)
        self.mean_ = x.mean(axis=0)
        scale = x.std(axis=0)
        scale[scale == 0] = 1.0
        self.scale_ = scale
        return self

    def transform(self, x):
        return (np.asarray(x, dtype=np.float64) - self.mean_) / self.scale_

    def fit_transform(self, x):
        return self.fit(x).transform(x)


def _unpack(theta, p, k):
    return theta[: p * k].reshape(p, k), theta[p * k:]


def logistic_loss_and_grad(theta, x, onehot, c):
    """Summed cross-entropy plus ||W||^2 / (2C); intercepts are not penalised."""
    p, k = x.shape[1], onehot.shape[1]
    w, b = _unpack(theta, p, k)
    z = x @ w + b
    lse = logsumexp(z, axis=1)
    loss = float(np.sum(lse - np.sum(onehot * z, axis=1)) + 0.5 / c * np.sum(w * w))
    resid = np.exp(z - lse[:, None]) - onehot
    gw = x.T @ resid + w / c
    gb = resid.sum(axis=0)
    return loss, np.concatenate([gw.ravel(), gb])


class LogisticRegression:
    def __init__(self, C=5.0, max_iter=180, tol=1e-6, penalty="l2"):
        if penalty != "l2":
            raise ValueError(f"only l2 penalty is supported, got {penalty!r}")
        if not C > 0:
            raise ValueError("C must be positive")
        self.C, self.max_iter, self.tol = C, max_iter, tol

    def fit(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise ValidationError("non-finite feature values")
        self.classes_, codes = np.unique(np.asarray(y), return_inverse=True)
        if len(self.classes_) < 2:
            raise TrainingError("need at least two classes")
        self.scaler_ = Standardizer().fit(x)
        xs = self.scaler_.transform(x)
        onehot = np.eye(len(self.classes_))[codes]
        p, k = xs.shape[1], onehot.shape[1]
        res = minimize(logistic_loss_and_grad, np.zeros(p * k + k), args=(xs, onehot, self.C),
                       jac=True, method="L-BFGS-B",
                       options={"maxiter": self.max_iter, "gtol": self.tol})
        self.coef_, self.intercept_ = _unpack(res.x, p, k)
        self.n_iter_ = int(res.nit)
        self.converged_ = bool(np.max(np.abs(res.jac)) < self.tol)
        return self

    def decision_function(self, x):
        return self.scaler_.transform(x) @ self.coef_ + self.intercept_

    def predict_proba(self, x):
        return softmax(self.decision_function(x), axis=1)

    def predict(self, x):
        return self.classes_[np.argmax(self.decision_function(x), axis=1)]
