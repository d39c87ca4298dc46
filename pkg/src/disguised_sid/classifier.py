"""One-vs-rest kernel SVM trained with sequential minimal optimization.

The pooled-statistics embedding plus this classifier stands in for a CNN-SVM
backend. ``SMOClassifier`` follows the scikit-learn estimator protocol.
"""

from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import ConvergenceWarning
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ParameterError, TrainingError
from .features.base import pool_utterance  # noqa: F401  re-exported
from .persistence import load_arrays, save_arrays

_STD_FLOOR = 1e-8


def linear_kernel(A, B):
    return A @ B.T


def rbf_kernel(A, B, gamma):
    sq = np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :] - 2.0 * (A @ B.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


def smo_solve(K, y, C, tol=1e-3, max_iter=10_000):
    """Solve the binary soft-margin SVM dual for a precomputed kernel.

    min 1/2 a'Qa - e'a  s.t.  y'a = 0, 0 <= a_i <= C,  Q_ij = y_i y_j K_ij.

    Uses maximal-violating-pair selection with second-order choice of the
    second index. Returns ``(alpha, rho, n_iter, converged)``; the decision
    function is ``sum_i alpha_i y_i K(x_i, x) - rho``.
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)
    diag = np.diag(K).copy()
    tau = 1e-12
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        v = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            converged = True
            break
        v_up = np.where(up, v, -np.inf)
        i = int(np.argmax(v_up))
        g_max = v_up[i]
        g_min = np.min(np.where(low, v, np.inf))
        if g_max - g_min < tol:
            converged = True
            break
        b = g_max - v
        cand = low & (b > 0)
        a = np.maximum(diag[i] + diag - 2.0 * K[i], tau)
        j = int(np.argmin(np.where(cand, -(b * b) / a, np.inf)))

        old_i, old_j = alpha[i], alpha[j]
        quad = max(diag[i] + diag[j] - 2.0 * K[i, j], tau)
        if y[i] != y[j]:
            delta = (-grad[i] - grad[j]) / quad
            diff = old_i - old_j
            ai, aj = old_i + delta, old_j + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            delta = (grad[i] - grad[j]) / quad
            total = old_i + old_j
            ai, aj = old_i - delta, old_j + delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        grad += y * (y[i] * (ai - old_i) * K[:, i] + y[j] * (aj - old_j) * K[:, j])

    rho = _compute_rho(alpha, grad, y, C)
    return alpha, rho, it, converged


def _compute_rho(alpha, grad, y, C):
    yg = y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        return float(np.mean(yg[free]))
    at_upper = alpha >= C
    ub_mask = (at_upper & (y < 0)) | (~at_upper & (y > 0))
    lb_mask = ~ub_mask
    ub = np.min(yg[ub_mask]) if ub_mask.any() else np.inf
    lb = np.max(yg[lb_mask]) if lb_mask.any() else -np.inf
    if not np.isfinite(ub):
        return float(lb)
    if not np.isfinite(lb):
        return float(ub)
    return float((ub + lb) / 2.0)


class SMOClassifier(ClassifierMixin, BaseEstimator):
    """Multiclass kernel SVM (one-vs-rest) with built-in standardization.

    Parameters
    ----------
    C : float
        Box constraint on the dual weights.
    kernel : {"rbf", "linear"}
    gamma : "scale" or float
        RBF width. ``"scale"`` uses ``1 / (n_features * X_std.var())`` where
        ``X_std`` is the standardized training data.
    tol : float
        Stop when the maximal KKT violation drops below this value.
    max_iter : int
        Cap on pair updates for each binary problem.
    random_state : int
        Seeds the order in which training points are presented to the solver.
    """

    def __init__(self, C=10.0, kernel="rbf", gamma="scale", tol=1e-3, max_iter=10_000, random_state=0):
        self.C = C
        self.kernel = kernel
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def _kernel(self, A, B):
        if self.kernel == "linear":
            return linear_kernel(A, B)
        return rbf_kernel(A, B, self.gamma_)

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ParameterError("X must be 2-D")
        bad = np.flatnonzero(~np.all(np.isfinite(X), axis=1))
        if bad.size:
            raise TrainingError(f"non-finite embedding at row {bad[0]}")
        y = np.asarray(y)
        if y.shape[0] != X.shape[0]:
            raise ParameterError("X and y lengths differ")
        if self.C <= 0:
            raise ParameterError("C must be positive")
        if self.kernel not in ("rbf", "linear"):
            raise ParameterError(f"unknown kernel {self.kernel!r}")
        self.classes_ = np.unique(y)
        if self.classes_.shape[0] < 2:
            raise TrainingError("need at least two classes")

        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale_ = np.where(std > _STD_FLOOR, std, 1.0)
        Xs = (X - self.mean_) / self.scale_
        if self.gamma == "scale":
            var = Xs.var()
            self.gamma_ = 1.0 / (X.shape[1] * var) if var > 0 else 1.0
        else:
            self.gamma_ = float(self.gamma)

        order = np.random.default_rng(self.random_state).permutation(X.shape[0])
        Xs, y = Xs[order], y[order]
        K = self._kernel(Xs, Xs)

        n_cls = self.classes_.shape[0]
        coef = np.zeros((n_cls, X.shape[0]))
        self.intercept_ = np.zeros(n_cls)
        self.n_iter_ = np.zeros(n_cls, dtype=int)
        for c, label in enumerate(self.classes_):
            yb = np.where(y == label, 1.0, -1.0)
            alpha, rho, n_iter, ok = smo_solve(K, yb, float(self.C), self.tol, self.max_iter)
            if not ok:
                warnings.warn(
                    f"SMO for class {label!r} stopped at max_iter={self.max_iter}",
                    ConvergenceWarning, stacklevel=2,
                )
            coef[c] = alpha * yb
            self.intercept_[c] = -rho
            self.n_iter_[c] = n_iter
        keep = np.any(coef != 0, axis=0)
        self.support_vectors_ = Xs[keep]
        self.dual_coef_ = coef[:, keep]
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "dual_coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ParameterError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        Xs = (X - self.mean_) / self.scale_
        return self._kernel(Xs, self.support_vectors_) @ self.dual_coef_.T + self.intercept_

    def predict(self, X) -> np.ndarray:
        # argmax picks the first maximum, i.e. the lexicographically smallest label
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]

    def save(self, path) -> None:
        check_is_fitted(self, "dual_coef_")
        save_arrays(
            path, "svm", self.n_features_in_,
            classes=self.classes_.astype(str), mean=self.mean_, scale=self.scale_,
            support_vectors=self.support_vectors_, dual_coef=self.dual_coef_,
            intercept=self.intercept_, gamma=np.array(self.gamma_),
            params=np.array([self.C, self.tol, self.max_iter, self.random_state], dtype=float),
            kernel=np.array(self.kernel),
        )

    @classmethod
    def load(cls, path, expected_dim: int | None = None) -> "SMOClassifier":
        dim, arr = load_arrays(path, "svm", expected_dim)
        C, tol, max_iter, seed = arr["params"]
        model = cls(C=C, kernel=str(arr["kernel"]), gamma=float(arr["gamma"]), tol=tol,
                    max_iter=int(max_iter), random_state=int(seed))
        model.classes_ = arr["classes"]
        model.mean_, model.scale_ = arr["mean"], arr["scale"]
        model.support_vectors_ = arr["support_vectors"]
        model.dual_coef_, model.intercept_ = arr["dual_coef"], arr["intercept"]
        model.gamma_ = float(arr["gamma"])
        model.n_features_in_ = dim
        for name in ("mean_", "scale_"):
            if getattr(model, name).shape != (dim,):
                raise ParameterError(f"{path}: {name} does not match dim {dim}")
        if model.support_vectors_.shape[1] != dim:
            raise ParameterError(f"{path}: support vectors do not match dim {dim}")
        return model


def train_svm(embeddings, labels, kernel="rbf", C=10.0, seed=0, **kwargs) -> SMOClassifier:
    return SMOClassifier(C=C, kernel=kernel, random_state=seed, **kwargs).fit(embeddings, labels)


def svm_predict(model: SMOClassifier, embedding) -> tuple[str, list[float]]:
    """Predicted label and the one-vs-rest decision value of every class."""
    x = np.asarray(embedding, dtype=np.float64).reshape(1, -1)
    if x.shape[1] != model.n_features_in_:
        raise ParameterError(f"embedding length {x.shape[1]} != model dim {model.n_features_in_}")
    scores = model.decision_function(x)[0]
    return model.classes_[int(np.argmax(scores))], scores.tolist()
