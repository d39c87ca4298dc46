import numpy as np
import pytest
from sklearn.svm import SVC

from disguised_sid.classifier import (
    SMOClassifier,
    linear_kernel,
    rbf_kernel,
    smo_solve,
    svm_predict,
    train_svm,
)
from disguised_sid.exceptions import ParameterError, TrainingError
from disguised_sid.features import pool_utterance


def blobs(rng, n_cls=3, per=15, dim=2, sep=6.0):
    centers = rng.normal(scale=sep, size=(n_cls, dim))
    X = np.concatenate([c + rng.normal(size=(per, dim)) for c in centers])
    return X, np.repeat([f"c{i}" for i in range(n_cls)], per)


def test_pool_utterance():
    single = pool_utterance(np.array([[1.0, 2.0, 3.0]]))
    np.testing.assert_array_equal(single, [1, 2, 3, 0, 0, 0])
    same = pool_utterance(np.tile([4.0, -1.0], (7, 1)))
    np.testing.assert_array_equal(same, [4, -1, 0, 0])
    assert pool_utterance(np.zeros((5, 39))).shape == (78,)
    with pytest.raises(ParameterError):
        pool_utterance(np.zeros((0, 3)))


def test_separable_linear():
    X = np.array([[0, 0], [0, 1], [1, 0], [4, 4], [4, 5], [5, 4]], dtype=float)
    y = np.array(["a"] * 3 + ["b"] * 3)
    clf = train_svm(X, y, kernel="linear")
    assert (clf.predict(X) == y).all()
    label, scores = svm_predict(clf, X[4])
    assert label == "b" and len(scores) == 2


@pytest.mark.parametrize("kernel", ["linear", "rbf"])
def test_smo_matches_libsvm_dual(rng, kernel):
    X = rng.normal(size=(40, 3))
    y = np.where(X[:, 0] + 0.3 * rng.normal(size=40) > 0, 1.0, -1.0)
    K = linear_kernel(X, X) if kernel == "linear" else rbf_kernel(X, X, 0.5)
    alpha, rho, _, ok = smo_solve(K, y, C=1.0, tol=1e-6, max_iter=100_000)
    assert ok
    ref = SVC(C=1.0, kernel="precomputed", tol=1e-6).fit(K, y)
    dual = np.zeros(40)
    dual[ref.support_] = ref.dual_coef_[0]
    # libsvm orders the classes (-1, +1), so its decision sign is flipped
    ours = K @ (alpha * y) - rho
    theirs = ref.decision_function(K)
    np.testing.assert_allclose(ours, theirs * np.sign(theirs @ ours), atol=1e-3)


def test_dual_feasibility_and_kkt(rng):
    X, y = blobs(rng, sep=2.0)
    clf = SMOClassifier(C=2.0).fit(X, y)
    alpha = np.abs(clf.dual_coef_)
    assert np.all(alpha <= 2.0 + 1e-12)
    # KKT check on the first binary problem
    order = np.random.default_rng(0).permutation(len(y))
    Xs = (X[order] - clf.mean_) / clf.scale_
    yb = np.where(y[order] == clf.classes_[0], 1.0, -1.0)
    K = rbf_kernel(Xs, Xs, clf.gamma_)
    a, rho, _, _ = smo_solve(K, yb, 2.0)
    f = K @ (a * yb) - rho
    m = yb * f
    ok = np.where(a <= 1e-12, m >= 1 - 1e-2, np.where(a >= 2.0 - 1e-12, m <= 1 + 1e-2, np.abs(m - 1) <= 1e-2))
    assert ok.mean() >= 0.99


def test_duplicate_conflicting_point():
    X = np.array([[0.0, 0.0], [0.0, 0.0], [3.0, 3.0], [3.0, 2.0], [-3.0, -3.0]])
    y = np.array(["a", "b", "b", "b", "a"])
    clf = SMOClassifier(kernel="linear").fit(X, y)
    assert np.all(np.isfinite(clf.dual_coef_))
    pred = clf.predict(X[:2])
    assert (pred != y[:2]).sum() <= 1


def test_determinism(rng):
    X, y = blobs(rng)
    a = SMOClassifier(random_state=7).fit(X, y)
    b = SMOClassifier(random_state=7).fit(X, y)
    np.testing.assert_array_equal(a.dual_coef_, b.dual_coef_)
    np.testing.assert_array_equal(a.intercept_, b.intercept_)


def test_scale_invariance(rng):
    X, y = blobs(rng, n_cls=4)
    T = rng.normal(size=(30, 2)) * 5
    p1 = SMOClassifier().fit(X, y).predict(T)
    p2 = SMOClassifier().fit(X * 250.0, y).predict(T * 250.0)
    assert np.array_equal(p1, p2)


def test_tie_breaks_to_first_label():
    clf = SMOClassifier(kernel="linear").fit(np.array([[0.0], [1.0], [2.0], [3.0]]), ["b", "b", "a", "a"])
    clf.dual_coef_ = np.zeros_like(clf.dual_coef_)
    clf.intercept_ = np.zeros(2)
    assert clf.predict([[5.0]])[0] == "a"


def test_errors(rng):
    X, y = blobs(rng)
    with pytest.raises(TrainingError):
        SMOClassifier().fit(X, ["only"] * len(y))
    bad = X.copy()
    bad[7, 1] = np.nan
    with pytest.raises(TrainingError, match="row 7"):
        SMOClassifier().fit(bad, y)
    clf = SMOClassifier().fit(X, y)
    with pytest.raises(ParameterError):
        svm_predict(clf, np.zeros(3))
    with pytest.raises(ParameterError):
        SMOClassifier(C=0).fit(X, y)


def test_sklearn_protocol(rng):
    from sklearn.base import clone
    clf = SMOClassifier(C=3.0, kernel="linear")
    assert clone(clf).get_params()["C"] == 3.0
    X, y = blobs(rng)
    assert clf.fit(X, y).score(X, y) == 1.0


def test_save_load(tmp_path, rng):
    X, y = blobs(rng)
    clf = SMOClassifier().fit(X, y)
    p = tmp_path / "svm.npz"
    clf.save(p)
    back = SMOClassifier.load(p, expected_dim=2)
    np.testing.assert_allclose(back.decision_function(X), clf.decision_function(X))
    with pytest.raises(ParameterError):
        SMOClassifier.load(p, expected_dim=5)
