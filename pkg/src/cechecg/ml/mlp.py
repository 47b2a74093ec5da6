"""Feed-forward ReLU network with dropout, softmax output and Adam updates."""
import numpy as np
from scipy.special import logsumexp

from ..errors import DivergenceError, TrainingError, ValidationError
from .linear import Standardizer


def init_params(sizes, rng):
    """He-normal weights, zero biases. ``sizes`` = [inputs, hidden..., outputs]."""
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        params.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
        params.append(np.zeros(fan_out))
    return params


def dropout_masks(params, n, rate, rng):
    """Inverted-dropout masks for every hidden layer."""
    masks = []
    for w in params[0:-2:2]:
        keep = rng.random((n, w.shape[1])) >= rate
        masks.append(keep / (1.0 - rate))
    return masks


def loss_and_grad(params, x, onehot, masks=None):
    """Mean cross-entropy and its gradient. ``masks`` (one per hidden layer)
    applies dropout; None means evaluation mode."""
    n_layers = len(params) // 2
    acts, pre = [x], []
    h = x
    for layer in range(n_layers):
        w, b = params[2 * layer], params[2 * layer + 1]
        z = h @ w + b
        pre.append(z)
        if layer < n_layers - 1:
            h = np.maximum(z, 0.0)
            if masks is not None:
                h = h * masks[layer]
            acts.append(h)
    lse = logsumexp(z, axis=1)
    n = len(x)
    loss = float(np.mean(lse - np.sum(onehot * z, axis=1)))
    delta = (np.exp(z - lse[:, None]) - onehot) / n
    grads = [None] * len(params)
    for layer in range(n_layers - 1, -1, -1):
        grads[2 * layer] = acts[layer].T @ delta
        grads[2 * layer + 1] = delta.sum(axis=0)
        if layer > 0:
            delta = delta @ params[2 * layer].T
            if masks is not None:
                delta = delta * masks[layer - 1]
            delta = delta * (pre[layer - 1] > 0)
    return loss, grads


def forward(params, x):
    h = x
    n_layers = len(params) // 2
    for layer in range(n_layers):
        z = h @ params[2 * layer] + params[2 * layer + 1]
        h = np.maximum(z, 0.0) if layer < n_layers - 1 else z
    return h


class MLPClassifier:
    def __init__(self, hidden=(256, 64, 32), lr=1e-3, dropout=0.25, epochs=200,
                 batch_size=32, seed=0, beta1=0.9, beta2=0.999, eps=1e-8):
        self.hidden = tuple(hidden)
        self.lr, self.dropout = lr, dropout
        self.epochs, self.batch_size, self.seed = epochs, batch_size, seed
        self.beta1, self.beta2, self.eps = beta1, beta2, eps

    def fit(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise ValidationError("non-finite feature values")
        self.classes_, codes = np.unique(np.asarray(y), return_inverse=True)
        if len(self.classes_) < 2:
            raise TrainingError("need at least two classes")
        rng = np.random.default_rng(self.seed)
        self.scaler_ = Standardizer().fit(x)
        xs = self.scaler_.transform(x)
        onehot = np.eye(len(self.classes_))[codes]
        params = init_params([xs.shape[1], *self.hidden, len(self.classes_)], rng)
        m = [np.zeros_like(p) for p in params]
        v = [np.zeros_like(p) for p in params]
        step = 0
        self.loss_history_ = []
        n = len(xs)
        for epoch in range(self.epochs):
            order = rng.permutation(n)
            total = 0.0
            for start in range(0, n, self.batch_size):
                batch = order[start:start + self.batch_size]
                masks = (dropout_masks(params, len(batch), self.dropout, rng)
                         if self.dropout > 0 else None)
                loss, grads = loss_and_grad(params, xs[batch], onehot[batch], masks)
                if not np.isfinite(loss):
                    raise DivergenceError("training loss is not finite", epoch=epoch)
                total += loss * len(batch)
                step += 1
                for i, g in enumerate(grads):
                    m[i] = self.beta1 * m[i] + (1 - self.beta1) * g
                    v[i] = self.beta2 * v[i] + (1 - self.beta2) * g * g
                    mhat = m[i] / (1 - self.beta1 ** step)
                    vhat = v[i] / (1 - self.beta2 ** step)
                    params[i] = params[i] - self.lr * mhat / (np.sqrt(vhat) + self.eps)
            self.loss_history_.append(total / n)
        self.params_ = params
        return self

    def predict_proba(self, x):
        z = forward(self.params_, self.scaler_.transform(x))
        return np.exp(z - logsumexp(z, axis=1, keepdims=True))

    def predict(self, x):
        return self.classes_[np.argmax(self.predict_proba(x), axis=1)]
