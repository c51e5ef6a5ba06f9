import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shapfair import metrics, surrogate
from shapfair.surrogate import DegenerateFitError


def binary_z(n, rng):
    z = rng.integers(0, 2, n)
    z[0], z[1] = 0, 1
    return z


def test_fit_two_points():
    s = surrogate.fit([0, 1], [0.2, 0.8])
    assert s.beta == pytest.approx(0.6, abs=1e-15)
    assert s.alpha == pytest.approx(0.2, abs=1e-15)
    assert s.z_mean == 0.5
    assert s.s_zz == 0.5


def test_fit_constant_scores():
    s = surrogate.fit([0, 1, 1, 0, 1], np.full(5, 0.37))
    assert s.beta == 0.0
    assert s.alpha == pytest.approx(0.37, abs=1e-15)


def test_fit_single_class_under_mask_is_degenerate():
    z = np.array([1, 1, 0, 1])
    with pytest.raises(DegenerateFitError):
        surrogate.fit(z, [0.1, 0.2, 0.3, 0.4], mask=z == 1)
    with pytest.raises(DegenerateFitError):
        surrogate.fit([1, 1], [0.1, 0.2])


def test_shap_values_examples():
    s = surrogate.LinearSurrogate(beta=0.6, alpha=0.2, z_mean=0.5, s_zz=0.5, fit_count=2)
    np.testing.assert_allclose(surrogate.shap_values(s, [0, 1]), [-0.3, 0.3], atol=1e-15)
    zero = surrogate.LinearSurrogate(beta=0.0, alpha=0.2, z_mean=0.5, s_zz=0.5, fit_count=2)
    np.testing.assert_array_equal(surrogate.shap_values(zero, [0, 1, 1]), 0.0)


def test_regularizer_example():
    r = surrogate.regularizer([0, 1], [0.2, 0.8], C=1.0)
    assert r.value == pytest.approx(0.18, abs=1e-15)
    np.testing.assert_allclose(r.grad, [-0.6, 0.6], atol=1e-15)


def test_regularizer_at_zero_beta():
    r = surrogate.regularizer([0, 1, 0, 1], np.full(4, 0.4), C=3.0)
    assert r.value == 0.0
    np.testing.assert_array_equal(r.grad, 0.0)


def test_regularizer_degenerate_z_propagates():
    with pytest.raises(DegenerateFitError):
        surrogate.regularizer([0, 0, 0], [0.1, 0.2, 0.3], C=1.0)


def _regularizer_draw(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 40))
    z = binary_z(n, rng)
    ybar = rng.uniform(0, 1, n)
    C = float(10 ** rng.uniform(-1, 1))
    return z, ybar, C


def fd_gradient(f, x, eps):
    g = np.empty_like(x)
    for k in range(x.size):
        up, dn = x.copy(), x.copy()
        up[k] += eps
        dn[k] -= eps
        g[k] = (f(up) - f(dn)) / (2 * eps)
    return g


def fd_second_diag(f, x, eps):
    h = np.empty_like(x)
    f0 = f(x)
    for k in range(x.size):
        up, dn = x.copy(), x.copy()
        up[k] += eps
        dn[k] -= eps
        h[k] = (f(up) - 2 * f0 + f(dn)) / eps**2
    return h


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


@pytest.mark.parametrize("seed", range(100))
def test_regularizer_gradient_matches_finite_differences(seed):
    z, ybar, C = _regularizer_draw(seed)
    r = surrogate.regularizer(z, ybar, C)
    value = lambda yb: surrogate.regularizer(z, yb, C).value  # noqa: E731
    fd = fd_gradient(value, ybar, 1e-6)
    if np.linalg.norm(r.grad) == 0.0:
        assert np.abs(fd).max() < 1e-8
    else:
        assert rel_err(fd, r.grad) <= 1e-5


@pytest.mark.parametrize("seed", range(100))
def test_regularizer_hessian_matches_second_differences(seed):
    z, ybar, C = _regularizer_draw(seed)
    r = surrogate.regularizer(z, ybar, C)
    value = lambda yb: surrogate.regularizer(z, yb, C).value  # noqa: E731
    fd = fd_second_diag(value, ybar, 1e-3)
    assert rel_err(fd, r.hess_diag) <= 1e-4
    assert (r.hess_diag >= 0).all()


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 60))
def test_surrogate_identities(seed, n):
    rng = np.random.default_rng(seed)
    z = binary_z(n, rng)
    ybar = rng.uniform(0, 1, n)
    s = surrogate.fit(z, ybar)
    phi = surrogate.shap_values(s, z)
    zbar = z.mean()
    # FE = |beta|, SFE = |beta| * 2 zbar (1 - zbar)
    assert metrics.fe(phi, z) == pytest.approx(abs(s.beta), rel=1e-12, abs=1e-15)
    assert metrics.sfe(phi) == pytest.approx(abs(s.beta) * 2 * zbar * (1 - zbar), rel=1e-12, abs=1e-15)
    assert abs(phi.sum()) <= 1e-12 * max(1.0, n)
    assert abs(phi.mean()) <= 1e-12
    np.testing.assert_allclose(s.alpha_shap + phi, s.predict(z), rtol=0, atol=1e-12)
    assert len(np.unique(phi)) == (1 if s.beta == 0 else 2)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-5, 5), b=st.floats(-5, 5))
def test_fit_is_scale_consistent(seed, a, b):
    rng = np.random.default_rng(seed)
    z = binary_z(30, rng)
    ybar = rng.uniform(0, 1, 30)
    base = surrogate.fit(z, ybar).beta
    assert surrogate.fit(z, a + b * ybar).beta == pytest.approx(b * base, abs=1e-12)


def test_refit_is_bit_identical():
    rng = np.random.default_rng(0)
    z = binary_z(1000, rng)
    ybar = rng.uniform(0, 1, 1000)
    assert surrogate.fit(z, ybar) == surrogate.fit(z.copy(), ybar.copy())


def test_regularizer_invariants():
    rng = np.random.default_rng(5)
    z = binary_z(200, rng)
    ybar = rng.uniform(0, 1, 200)
    r = surrogate.regularizer(z, ybar, C=2.5)
    assert r.value >= 0
    assert abs(r.grad.sum()) < 1e-12
    assert r.value == pytest.approx(2.5 * (surrogate.shap_values(r.surrogate, z) ** 2).sum(), rel=1e-12)


def test_penalty_examples():
    # y == 0 rows get no penalty regardless of z
    z = np.array([0, 1, 0, 1, 0, 1])
    y = np.array([1, 1, 0, 0, 1, 1])
    ybar = np.array([0.2, 0.8, 0.9, 0.1, 0.2, 0.8])
    P = surrogate.penalty(z, y, ybar)
    assert P[2] == 0.0 and P[3] == 0.0
    # on the y == 1 rows: beta = 0.6, mean z = 0.5
    np.testing.assert_allclose(P[[0, 1, 4, 5]], [0.3, -0.3, 0.3, -0.3], atol=1e-15)


def test_penalty_zero_beta():
    z = np.array([0, 1, 0, 1])
    y = np.array([1, 1, 1, 0])
    P = surrogate.penalty(z, y, np.full(4, 0.5))
    np.testing.assert_array_equal(P, 0.0)


def test_penalty_uses_favourable_mean():
    z = np.array([0, 1, 1, 1, 0, 0])
    y = np.array([1, 1, 1, 0, 0, 0])
    ybar = np.array([0.1, 0.9, 0.7, 0.5, 0.5, 0.5])
    s = surrogate.fit(z, ybar, mask=y == 1)
    assert s.z_mean == pytest.approx(2 / 3)
    P = surrogate.penalty(z, y, ybar)
    np.testing.assert_allclose(P[:3], -s.beta * (z[:3] - 2 / 3))


def test_penalty_degenerate_mask():
    with pytest.raises(DegenerateFitError):
        surrogate.penalty([1, 1, 0], [1, 1, 0], [0.2, 0.3, 0.4])
