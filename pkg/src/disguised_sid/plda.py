"""Two-covariance PLDA: EM training and same-vs-different likelihood-ratio scoring.

Model: w = mu + y + e with y ~ N(0, phi_b) shared by a speaker's utterances
and e ~ N(0, phi_w) drawn per utterance.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ModelStateError, ParameterError, TrainingError
from .persistence import load_arrays, save_arrays

EIG_FLOOR = 1e-8
_LOG_2PI = np.log(2.0 * np.pi)


def _sym(a):
    return 0.5 * (a + a.T)


def floor_eigenvalues(cov: np.ndarray, floor: float = EIG_FLOOR) -> np.ndarray:
    vals, vecs = np.linalg.eigh(_sym(cov))
    return _sym((vecs * np.maximum(vals, floor)) @ vecs.T)


def _logdet(a):
    sign, val = np.linalg.slogdet(a)
    if sign <= 0:
        raise np.linalg.LinAlgError("matrix is not positive definite")
    return val


@dataclass
class PldaModel:
    mu: np.ndarray
    phi_b: np.ndarray
    phi_w: np.ndarray
    enrolled: dict = field(default_factory=dict)
    log_likelihoods: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    @cached_property
    def _scoring(self):
        """Quadratic-form terms so that score = a'Qa/2 + b'Qb/2 + a'Pb + const."""
        d = self.dim
        total = self.phi_b + self.phi_w
        joint = np.block([[total, self.phi_b], [self.phi_b, total]])
        joint_inv = np.linalg.inv(joint)
        total_inv = np.linalg.inv(total)
        Q = _sym(total_inv - _sym(joint_inv[:d, :d]))
        P = _sym(-joint_inv[:d, d:])
        const = -0.5 * _logdet(joint) + _logdet(total)
        return Q, P, const

    def enroll(self, speaker_id, embeddings) -> None:
        e = np.atleast_2d(np.asarray(embeddings, dtype=np.float64))
        if e.shape[1] != self.dim:
            raise ParameterError(f"embedding dim {e.shape[1]} != model dim {self.dim}")
        self.enrolled[str(speaker_id)] = e.mean(axis=0)


def speaker_log_likelihood(x: np.ndarray, phi_b: np.ndarray, phi_w: np.ndarray) -> float:
    """Exact marginal log-likelihood of one speaker's centered embeddings (n, d)."""
    n, d = x.shape
    xbar = x.mean(axis=0)
    dev = x - xbar
    pooled = phi_w + n * phi_b
    w_inv = np.linalg.inv(phi_w)
    quad = np.sum((dev @ w_inv) * dev) + n * xbar @ np.linalg.solve(pooled, xbar)
    return -0.5 * (n * d * _LOG_2PI + (n - 1) * _logdet(phi_w) + _logdet(pooled) + quad)


def total_log_likelihood(groups, phi_b, phi_w) -> float:
    return float(sum(speaker_log_likelihood(x, phi_b, phi_w) for x in groups))


def _group(embeddings, labels):
    X = np.asarray(embeddings, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 1:
        raise TrainingError("embeddings must be a (n, dim >= 1) matrix")
    labels = np.asarray(labels)
    if labels.shape[0] != X.shape[0]:
        raise ParameterError("embeddings and labels lengths differ")
    speakers = sorted(set(labels.tolist()), key=str)
    if len(speakers) < 2:
        raise TrainingError("PLDA training needs at least two speakers")
    groups = []
    for spk in speakers:
        rows = X[labels == spk]
        if rows.shape[0] < 2:
            raise TrainingError(f"speaker {spk!r} has fewer than 2 embeddings")
        groups.append(rows)
    return X, speakers, groups


def train_plda(embeddings, labels, n_iter: int = 20, floor: float = EIG_FLOOR, enroll: bool = True) -> PldaModel:
    """Fit mu, phi_b, phi_w by EM, starting from phi_b = phi_w = cov / 2.

    With ``enroll`` every training speaker is enrolled with its mean embedding.
    """
    X, speakers, groups = _group(embeddings, labels)
    d = X.shape[1]
    mu = X.mean(axis=0)
    centered = [g - mu for g in groups]

    cov = np.cov(X, rowvar=False, bias=True).reshape(d, d)
    vals = np.linalg.eigvalsh(cov)
    if vals.min() <= 1e-10 * max(1.0, vals.max()):
        warnings.warn("sample covariance is singular; adding 1e-6 ridge", RuntimeWarning, stacklevel=2)
        cov = cov + 1e-6 * np.eye(d)
    phi_b = floor_eigenvalues(cov / 2.0, floor)
    phi_w = floor_eigenvalues(cov / 2.0, floor)

    counts = np.array([g.shape[0] for g in centered])
    sums = [g.sum(axis=0) for g in centered]
    scatter = sum(g.T @ g for g in centered)
    n_total, n_spk = counts.sum(), len(centered)

    history = [total_log_likelihood(centered, phi_b, phi_w)]
    for _ in range(n_iter):
        b_inv = np.linalg.inv(phi_b)
        w_inv = np.linalg.inv(phi_w)
        post_cov = {}
        for n in np.unique(counts):
            post_cov[n] = _sym(np.linalg.inv(b_inv + n * w_inv))
        acc_b = np.zeros((d, d))
        acc_w = scatter.copy()
        for n, f in zip(counts, sums):
            c = post_cov[n]
            m = c @ (w_inv @ f)
            mm = np.outer(m, m)
            acc_b += mm + c
            fm = np.outer(f, m)
            acc_w += -fm - fm.T + n * (mm + c)
        phi_b = floor_eigenvalues(acc_b / n_spk, floor)
        phi_w = floor_eigenvalues(acc_w / n_total, floor)
        history.append(total_log_likelihood(centered, phi_b, phi_w))

    model = PldaModel(mu, phi_b, phi_w, log_likelihoods=history)
    if enroll:
        for spk, g in zip(speakers, groups):
            model.enroll(spk, g)
    return model


def plda_score(model: PldaModel, w_target, w_test) -> float:
    """log P(target, test | same speaker) - log P(target) P(test)."""
    a = np.asarray(w_target, dtype=np.float64)
    b = np.asarray(w_test, dtype=np.float64)
    if a.shape != (model.dim,) or b.shape != (model.dim,):
        raise ParameterError(f"embeddings must have dim {model.dim}")
    Q, P, const = model._scoring
    a = a - model.mu
    b = b - model.mu
    return float(0.5 * a @ Q @ a + 0.5 * b @ Q @ b + a @ P @ b + const)


def score_matrix(model: PldaModel, targets: np.ndarray, tests: np.ndarray) -> np.ndarray:
    """Scores of every (target, test) pair, shape (n_targets, n_tests)."""
    Q, P, const = model._scoring
    A = np.atleast_2d(targets) - model.mu
    B = np.atleast_2d(tests) - model.mu
    qa = 0.5 * np.einsum("ij,jk,ik->i", A, Q, A)
    qb = 0.5 * np.einsum("ij,jk,ik->i", B, Q, B)
    return qa[:, None] + qb[None, :] + A @ P @ B.T + const


def plda_identify(model: PldaModel, w_test) -> tuple[str, list[float]]:
    """Best enrolled speaker and the scores against all enrolled speakers (sorted ids)."""
    if not model.enrolled:
        raise ModelStateError("no speakers enrolled")
    w = np.asarray(w_test, dtype=np.float64)
    if w.shape != (model.dim,):
        raise ParameterError(f"embedding must have dim {model.dim}")
    ids = sorted(model.enrolled)
    means = np.stack([model.enrolled[s] for s in ids])
    scores = score_matrix(model, means, w[None, :])[:, 0]
    return ids[int(np.argmax(scores))], scores.tolist()


def save_plda(model: PldaModel, path) -> None:
    ids = sorted(model.enrolled)
    means = np.stack([model.enrolled[s] for s in ids]) if ids else np.zeros((0, model.dim))
    save_arrays(path, "plda", model.dim, mu=model.mu, phi_b=model.phi_b, phi_w=model.phi_w,
                speakers=np.array(ids, dtype=str), means=means)


def load_plda(path, expected_dim: int | None = None) -> PldaModel:
    dim, arr = load_arrays(path, "plda", expected_dim)
    if arr["mu"].shape != (dim,) or arr["phi_b"].shape != (dim, dim) or arr["phi_w"].shape != (dim, dim):
        raise ParameterError(f"{path}: parameter shapes do not match dim {dim}")
    if arr["means"].shape[1:] != (dim,):
        raise ParameterError(f"{path}: enrolled means do not match dim {dim}")
    enrolled = {str(s): m for s, m in zip(arr["speakers"], arr["means"])}
    return PldaModel(arr["mu"], arr["phi_b"], arr["phi_w"], enrolled)


class PLDAClassifier(ClassifierMixin, BaseEstimator):
    """Closed-set identification by PLDA scoring against enrolled speaker means."""

    def __init__(self, n_iter=20, floor=EIG_FLOOR):
        self.n_iter = n_iter
        self.floor = floor

    def fit(self, X, y):
        self.model_ = train_plda(X, y, n_iter=self.n_iter, floor=self.floor)
        self.classes_ = np.unique(y)
        self.n_features_in_ = self.model_.dim
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ParameterError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        means = np.stack([self.model_.enrolled[str(c)] for c in self.classes_])
        return score_matrix(self.model_, means, X).T

    def predict(self, X) -> np.ndarray:
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]
