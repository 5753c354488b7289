"""One-vs-rest linear SVM trained by averaged stochastic subgradient descent."""

from dataclasses import dataclass

import numpy as np

STD_FLOOR = 1e-8


@dataclass
class LinearModel:
    weights: np.ndarray  # (classes, d)
    biases: np.ndarray  # (classes,)
    feature_mean: np.ndarray
    feature_std: np.ndarray

    @property
    def classes(self):
        return self.weights.shape[0]

    @property
    def d(self):
        return self.weights.shape[1]

    def decision_function(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.d:
            raise ValueError(f"feature length {X.shape[-1]} does not match model ({self.d})")
        Z = (X - self.feature_mean) / self.feature_std
        return Z @ self.weights.T + self.biases


def fit_svm(features, labels, reg=1e-4, epochs=20, seed=0, batch_size=32, classes=None):
    """Train one binary hinge-loss classifier per class.

    Minimizes reg/2 ||w_k||^2 + mean_i max(0, 1 - s_ik (w_k . z_i + b_k))
    with s_ik = +1 for class k and -1 otherwise, on standardized features
    z.  Step size 1 / (reg * (t + t0)); the returned weights are the
    running average of the iterates.  Class k's problem only ever sees
    its own column, so relabelling classes permutes the result exactly.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels).astype(np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("features must be (samples, d) with one label per sample")
    if not np.all(np.isfinite(X)):
        raise ValueError("features contain non-finite values")
    if classes is None:
        classes = int(y.max()) + 1
    if np.unique(y).size < 2:
        raise ValueError("need at least 2 classes")
    if X.shape[0] < classes:
        raise ValueError("fewer samples than classes")
    if reg <= 0:
        raise ValueError("reg must be > 0")

    mean = X.mean(axis=0)
    std = np.maximum(X.std(axis=0), STD_FLOOR)
    Z = (X - mean) / std
    N, d = Z.shape
    S = np.where(y[:, None] == np.arange(classes)[None, :], 1.0, -1.0)

    W = np.zeros((classes, d))
    b = np.zeros(classes)
    W_avg = np.zeros_like(W)
    b_avg = np.zeros_like(b)
    # t0 keeps the first steps from being enormous when reg is small
    t0 = 1.0 / reg
    rng = np.random.default_rng(seed)
    t = 0
    for _ in range(epochs):
        order = rng.permutation(N)
        for start in range(0, N, batch_size):
            batch = order[start:start + batch_size]
            Zb, Sb = Z[batch], S[batch]
            margins = Sb * (Zb @ W.T + b)
            viol = (margins < 1.0) * Sb
            eta = 1.0 / (reg * (t + t0))
            W -= eta * (reg * W - viol.T @ Zb / len(batch))
            b += eta * viol.mean(axis=0)
            t += 1
            W_avg += (W - W_avg) / t
            b_avg += (b - b_avg) / t
    return LinearModel(W_avg, b_avg, mean, std)


def predict(model, features):
    """Class ids by argmax of the decision function; ties go to the lowest id."""
    scores = model.decision_function(features)
    return np.argmax(scores, axis=-1)


def evaluate(model, features, labels):
    labels = np.asarray(labels)
    features = np.asarray(features)
    if labels.shape[0] == 0:
        raise ValueError("cannot evaluate on an empty set")
    if features.shape[0] != labels.shape[0]:
        raise ValueError("features and labels differ in length")
    return float(np.mean(predict(model, features) == labels))


def per_class_accuracy(model, features, labels):
    labels = np.asarray(labels)
    pred = predict(model, features)
    return np.array([
        np.mean(pred[labels == k] == k) if np.any(labels == k) else np.nan
        for k in range(model.classes)
    ])


def tune_svm(features, labels, regs=(1e-5, 1e-4, 1e-3, 1e-2), epochs=20, seed=0,
             holdout=0.1, classes=None):
    """Pick ``reg`` on a random holdout, then refit on all data.

    Returns (model, chosen_reg, {reg: holdout_accuracy}).
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(y))
    n_hold = max(1, int(round(holdout * len(y))))
    hold, fit = perm[:n_hold], perm[n_hold:]
    scores = {}
    for reg in regs:
        m = fit_svm(X[fit], y[fit], reg, epochs, seed, classes=classes)
        scores[reg] = evaluate(m, X[hold], y[hold])
    best = max(regs, key=lambda r: (scores[r], -r))
    return fit_svm(X, y, best, epochs, seed, classes=classes), best, scores
