import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_dataset
from shapfair import surrogate
from shapfair._tree import Tree, presort
from shapfair.adaboost import (
    DegenerateEnsembleError,
    EnforceConfig,
    ShapEnforceModel,
    TrainingError,
    fit_weak_learner,
    predict_score,
    train_shapenforce,
    weight_update,
)
from shapfair.data import Dataset


def _stump(value_left, value_right, thr=0.0):
    return Tree(
        feature=np.array([0, -1, -1]),
        threshold=np.array([thr, 0.0, 0.0]),
        left=np.array([1, -1, -1]),
        right=np.array([2, -1, -1]),
        value=np.array([0.0, value_left, value_right]),
    )


def test_weight_update_all_correct_is_unchanged():
    omega = np.array([0.1, 0.2, 0.3, 0.4])
    y = np.array([0, 1, 1, 0])
    np.testing.assert_allclose(weight_update(omega, y, y, 1.7, None, 0.0), omega, rtol=1e-15)


def test_weight_update_pure_penalty_example():
    out = weight_update([0.5, 0.5], [1, 1], [1, 1], 2.0, np.array([0.3, -0.3]), 1.0)
    np.testing.assert_allclose(out, [0.6457, 0.3543], atol=1e-4)
    np.testing.assert_allclose(out, np.exp([0.3, -0.3]) / np.exp([0.3, -0.3]).sum(), rtol=1e-15)


def test_weight_update_gives_misclassified_half_the_mass():
    omega = np.full(10, 0.1)
    y = np.zeros(10, int)
    yhat = y.copy()
    yhat[:3] = 1
    e = 0.3
    out = weight_update(omega, yhat, y, np.log((1 - e) / e), None, 0.0)
    assert out[:3].sum() == pytest.approx(0.5, rel=1e-12)


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lam=st.floats(0, 1), alpha=st.floats(-12, 12))
def test_weight_update_stays_a_distribution(seed, lam, alpha):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 30))
    omega = rng.dirichlet(np.ones(n))
    y = rng.integers(0, 2, n)
    yhat = rng.integers(0, 2, n)
    P = np.where(y == 1, rng.uniform(-1, 1, n), 0.0)
    out = weight_update(omega, yhat, y, alpha, P, lam)
    assert (out >= 0).all()
    assert out.sum() == pytest.approx(1.0, abs=1e-12)


def test_weight_update_degenerate_raises():
    with pytest.raises(TrainingError):
        weight_update([0.0, 0.0], [0, 1], [0, 1], 1.0, None, 0.0)


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_penalty_only_update_favours_negative_attribution_group(seed):
    rng = np.random.default_rng(seed)
    n = 30
    z = rng.integers(0, 2, n)
    y = rng.integers(0, 2, n)
    y[:2], z[:2] = 1, [0, 1]
    ybar = rng.uniform(0, 1, n)
    phi_model = surrogate.fit(z, ybar, mask=y == 1)
    if phi_model.beta == 0:
        return
    P = surrogate.penalty(z, y, ybar)
    omega = rng.dirichlet(np.ones(n))
    out = weight_update(omega, (ybar >= 0.5).astype(int), y, 0.7, P, 1.0)
    # with beta > 0 the z = 0 group carries negative phi
    neg_group = (y == 1) & (z == (0 if phi_model.beta > 0 else 1))
    assert out[neg_group].sum() >= omega[neg_group].sum() - 1e-15


def _classical_adaboost(ds, rounds, depth, eps=1e-6):
    """Discrete AdaBoost in its +-1 exponential-loss form, sharing only the weak learner."""
    X = ds.features
    order = presort(X)
    ypm = np.where(ds.y == 1, 1.0, -1.0)
    w = np.full(ds.n_rows, 1.0 / ds.n_rows)
    alphas, trees = [], []
    for _ in range(rounds):
        tree = fit_weak_learner(X, order, ds.y.astype(np.float64), w, depth)
        hpm = np.where(tree.predict(X) >= 0.5, 1.0, -1.0)
        err = float(w[hpm != ypm].sum())
        e = min(max(err, eps), 1 - eps)
        alphas.append(float(np.log((1 - e) / e)))
        trees.append(tree)
        if err <= eps:
            break
        w = w * np.exp(-(0.5 * alphas[-1]) * (ypm * hpm))
        w = w / w.sum()
    return alphas, trees, w


def test_lambda_zero_is_classical_adaboost_bitwise():
    ds = random_dataset(np.random.default_rng(0), 500, 4, ties=True)
    seen = []
    model = train_shapenforce(ds, EnforceConfig(lam=0.0, rounds=30, seed=0),
                              callback=lambda m, w: seen.append(w.copy()))
    alphas, trees, w = _classical_adaboost(ds, 30, 3)
    assert model.alphas == alphas
    for a, b in zip(model.learners, trees):
        assert a.to_dict() == b.to_dict()
    np.testing.assert_array_equal(seen[-1], w)


def test_separable_two_points_reach_zero_error():
    ds = Dataset(np.array([[0.0], [1.0]]), [0, 1], [0, 1], ("x",))
    model = train_shapenforce(ds, EnforceConfig(lam=0.0, rounds=3, weak_max_depth=1))
    assert len(model.stages) <= 3
    labels = (model.predict_score(ds.features) >= 0.5).astype(int)
    np.testing.assert_array_equal(labels, ds.y)


def test_predict_score_examples():
    X = np.array([[-1.0], [1.0]])
    one = ShapEnforceModel([1.0], [_stump(0.2, 0.9)], ("x",))
    np.testing.assert_allclose(predict_score(one, X), [0.2, 0.9])
    two = ShapEnforceModel([0.7, 0.7], [_stump(0.2, 0.9)] * 2, ("x",))
    np.testing.assert_allclose(predict_score(two, X), predict_score(one, X), rtol=1e-15)
    mixed = ShapEnforceModel([1.0, 3.0], [_stump(0.0, 1.0), _stump(1.0, 0.0)], ("x",))
    np.testing.assert_allclose(predict_score(mixed, X), [0.75, 0.25])
    labels = ShapEnforceModel([1.0], [_stump(0.2, 0.9)], ("x",), score_mode="label")
    np.testing.assert_array_equal(predict_score(labels, X), [0.0, 1.0])


def test_predict_score_degenerate():
    X = np.zeros((1, 1))
    with pytest.raises(DegenerateEnsembleError):
        predict_score(ShapEnforceModel([], [], ("x",)), X)
    with pytest.raises(DegenerateEnsembleError):
        predict_score(ShapEnforceModel([1.0, -1.0], [_stump(0, 1)] * 2, ("x",)), X)


def test_scores_lie_in_unit_interval():
    ds = random_dataset(np.random.default_rng(1), 400, 3)
    model = train_shapenforce(ds, EnforceConfig(lam=0.5, rounds=20))
    if all(a > 0 for a in model.alphas):
        s = model.predict_score(ds.features)
        assert (s >= 0).all() and (s <= 1).all()


def test_weight_invariants_over_many_rounds():
    rounds = 0
    for seed in range(12):
        rng = np.random.default_rng(seed)
        ds = random_dataset(rng, int(rng.integers(30, 200)), 3, ties=bool(seed % 2))
        lam = float(rng.uniform(0, 1))

        def check(m, w):
            nonlocal rounds
            rounds += 1
            assert (w >= 0).all()
            assert abs(w.sum() - 1.0) <= 1e-12

        train_shapenforce(ds, EnforceConfig(lam=lam, rounds=100, weak_max_depth=int(rng.integers(1, 4))),
                          callback=check)
    assert rounds >= 1000


def test_training_is_deterministic():
    ds = random_dataset(np.random.default_rng(2), 300, 3, ties=True)
    a = train_shapenforce(ds, EnforceConfig(lam=0.6, rounds=15))
    b = train_shapenforce(ds, EnforceConfig(lam=0.6, rounds=15))
    assert a.to_json() == b.to_json()


def test_serialization_round_trip():
    ds = random_dataset(np.random.default_rng(3), 300, 3)
    model = train_shapenforce(ds, EnforceConfig(lam=0.3, rounds=10))
    again = ShapEnforceModel.from_json(model.to_json())
    np.testing.assert_array_equal(again.predict_score(ds.features), model.predict_score(ds.features))
    assert again.config == model.config
    with pytest.raises(ValueError):
        ShapEnforceModel.from_json(model.to_json().replace('"version": 1', '"version": 2'))


def test_degenerate_favourable_subset_is_rejected():
    ds = Dataset(np.arange(6.0)[:, None], [1, 1, 0, 0, 1, 0], [1, 1, 0, 0, 1, 0], ("x",))
    with pytest.raises(surrogate.DegenerateFitError):
        train_shapenforce(ds, EnforceConfig(lam=0.5, rounds=2))
    train_shapenforce(ds, EnforceConfig(lam=0.0, rounds=2))


def test_config_validation():
    with pytest.raises(ValueError):
        EnforceConfig(lam=-0.1)
    with pytest.raises(ValueError):
        EnforceConfig(rounds=0)
    with pytest.raises(ValueError):
        EnforceConfig(weak_max_depth=0)
    with pytest.raises(ValueError):
        EnforceConfig(score_mode="margin")
