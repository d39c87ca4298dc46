import warnings

import numpy as np
import pytest
from scipy.stats import multivariate_normal

from disguised_sid.exceptions import ModelStateError, ParameterError, TrainingError
from disguised_sid.plda import (
    PLDAClassifier,
    PldaModel,
    load_plda,
    plda_identify,
    plda_score,
    save_plda,
    score_matrix,
    speaker_log_likelihood,
    train_plda,
)


def clustered(rng, n_spk=6, per=12, dim=3, spread=4.0, noise=0.5):
    centers = rng.normal(scale=spread, size=(n_spk, dim))
    X = np.concatenate([c + noise * rng.normal(size=(per, dim)) for c in centers])
    y = np.repeat([f"s{i}" for i in range(n_spk)], per)
    return X, y


def random_model(rng, dim=4):
    A = rng.normal(size=(dim, dim))
    B = rng.normal(size=(dim, dim))
    return PldaModel(rng.normal(size=dim), A @ A.T, B @ B.T + 0.5 * np.eye(dim))


def joint_oracle(model, a, b):
    """Same-speaker log-likelihood ratio from dense multivariate normal densities."""
    d = model.dim
    tot = model.phi_b + model.phi_w
    joint = np.block([[tot, model.phi_b], [model.phi_b, tot]])
    mu2 = np.concatenate([model.mu, model.mu])
    num = multivariate_normal(mu2, joint).logpdf(np.concatenate([a, b]))
    den = multivariate_normal(model.mu, tot).logpdf(a) + multivariate_normal(model.mu, tot).logpdf(b)
    assert d == a.size
    return num - den


def test_score_matches_dense_oracle(rng):
    m = random_model(rng)
    for _ in range(20):
        a, b = rng.normal(size=(2, 4)) * 2
        assert plda_score(m, a, b) == pytest.approx(joint_oracle(m, a, b), abs=1e-8)


def test_score_symmetry(rng):
    m = random_model(rng, 5)
    A = rng.normal(size=(1000, 5)) * 3
    B = rng.normal(size=(1000, 5)) * 3
    for a, b in zip(A, B):
        assert abs(plda_score(m, a, b) - plda_score(m, b, a)) < 1e-9


def test_zero_between_covariance_gives_zero_scores(rng):
    m = random_model(rng)
    m = PldaModel(m.mu, np.zeros((4, 4)), m.phi_w)
    S = score_matrix(m, rng.normal(size=(30, 4)), rng.normal(size=(40, 4)))
    np.testing.assert_allclose(S, 0.0, atol=1e-9)


def test_scores_shrink_as_within_grows(rng):
    m = random_model(rng, 3)
    pairs = rng.normal(size=(10, 2, 3))
    prev = None
    for k in (10.0, 100.0, 1e3, 1e4, 1e5):
        mk = PldaModel(m.mu, m.phi_b, m.phi_w * k)
        cur = np.array([abs(plda_score(mk, a, b)) for a, b in pairs])
        if prev is not None:
            assert np.all(cur <= prev + 1e-12)
        prev = cur
    assert prev.max() < 1e-3


def test_speaker_log_likelihood_brute_force(rng):
    m = random_model(rng, 2)
    x = rng.normal(size=(3, 2))
    # stack the utterances: covariance is phi_w on the diagonal blocks plus phi_b everywhere
    big = np.kron(np.ones((3, 3)), m.phi_b) + np.kron(np.eye(3), m.phi_w)
    ref = multivariate_normal(np.zeros(6), big).logpdf(x.ravel())
    assert speaker_log_likelihood(x, m.phi_b, m.phi_w) == pytest.approx(ref, abs=1e-9)


def test_em_monotone(rng):
    X = rng.normal(size=(60, 4)) + np.repeat(rng.normal(size=(10, 4)), 6, axis=0)
    y = np.repeat(np.arange(10), 6)
    ll = train_plda(X, y, n_iter=15).log_likelihoods
    assert len(ll) == 16
    for a, b in zip(ll, ll[1:]):
        assert b >= a - 1e-6 * max(1.0, abs(a))


def test_between_covariance_aligns_with_separation(rng):
    direction = np.array([3.0, 1.0]) / np.sqrt(10.0)
    X, y = [], []
    for s in range(8):
        center = direction * (10.0 if s % 2 else -10.0) + rng.normal(scale=0.05, size=2)
        X.append(center + 0.3 * rng.normal(size=(20, 2)))
        y += [s] * 20
    m = train_plda(np.vstack(X), y)
    vals, vecs = np.linalg.eigh(m.phi_b)
    assert abs(vecs[:, -1] @ direction) >= 0.99


def test_same_cluster_scores_higher(rng):
    X, y = clustered(rng)
    m = train_plda(X, y)
    S = score_matrix(m, X, X)
    same = y[:, None] == y[None, :]
    assert S[same].mean() > S[~same].mean()


def test_covariance_invariants(rng):
    X, y = clustered(rng)
    m = train_plda(X, y)
    assert np.linalg.eigvalsh(m.phi_w).min() > 1e-8
    assert np.linalg.eigvalsh(m.phi_b).min() >= 0
    np.testing.assert_allclose(m.phi_b, m.phi_b.T)


def test_identical_embeddings_do_not_crash():
    X = np.ones((8, 3))
    y = np.repeat(["a", "b"], 4)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        m = train_plda(X, y, n_iter=3)
    assert np.isfinite(plda_score(m, X[0], X[1]))


def test_singular_covariance_warns(rng):
    base = rng.normal(size=(12, 1))
    X = np.hstack([base, base])
    with pytest.warns(RuntimeWarning, match="ridge"):
        train_plda(X, np.repeat([0, 1, 2], 4), n_iter=2)


def test_training_errors(rng):
    X = rng.normal(size=(5, 2))
    with pytest.raises(TrainingError, match="'lonely'"):
        train_plda(X, ["a", "a", "b", "b", "lonely"])
    with pytest.raises(TrainingError):
        train_plda(X, ["a"] * 5)


def test_identify(rng):
    X, y = clustered(rng)
    m = train_plda(X, y)
    for spk in ("s0", "s3"):
        label, scores = plda_identify(m, m.enrolled[spk])
        assert label == spk
        assert len(scores) == 6


def test_identify_single_and_empty(rng):
    X, y = clustered(rng, n_spk=2)
    m = train_plda(X, y, enroll=False)
    with pytest.raises(ModelStateError):
        plda_identify(m, X[0])
    m.enroll("only", X[:3])
    for x in X[::5]:
        assert plda_identify(m, x)[0] == "only"


def test_dimension_mismatch(rng):
    m = random_model(rng, 3)
    with pytest.raises(ParameterError):
        plda_score(m, np.zeros(3), np.zeros(4))


def test_save_load(tmp_path, rng):
    X, y = clustered(rng)
    m = train_plda(X, y)
    p = tmp_path / "m.npz"
    save_plda(m, p)
    back = load_plda(p, expected_dim=3)
    np.testing.assert_array_equal(back.phi_b, m.phi_b)
    assert plda_identify(back, X[0]) == plda_identify(m, X[0])
    with pytest.raises(ParameterError):
        load_plda(p, expected_dim=4)


def test_classifier_estimator(rng):
    X, y = clustered(rng)
    clf = PLDAClassifier().fit(X, y)
    assert clf.score(X, y) == 1.0
    assert clf.get_params() == {"n_iter": 20, "floor": 1e-8}
    # argmax is unchanged by a constant offset on all scores
    S = clf.decision_function(X)
    assert np.array_equal(np.argmax(S, axis=1), np.argmax(S + 123.0, axis=1))
