import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from abelfun import thetafn as tf
from abelfun.validation import ValidationError


def direct_theta_1d(z, tau, N=30):
    n = np.arange(-N, N + 1)
    return np.sum(np.exp(1j * np.pi * n * n * tau + 2j * np.pi * n * z))


def test_value_at_origin_genus_one():
    pm = tf.PeriodMatrix(np.array([[1j]]))
    expected = sum(np.exp(-np.pi * n * n) for n in range(-30, 31))
    assert abs(tf.theta([0.0], pm) - expected) < 1e-14
    assert abs(tf.theta([0.0], pm) - 1.086434811213308) < 1e-14


def test_matches_direct_sum_genus_one(rng):
    tau = 0.3 + 1.1j
    pm = tf.PeriodMatrix(np.array([[tau]]))
    for z in rng.random(5) + tau * rng.random(5):
        assert abs(tf.theta([z], pm) - direct_theta_1d(z, tau)) < 1e-12 * abs(direct_theta_1d(z, tau)) + 1e-13


def test_matches_direct_sum_genus_two(period_matrices):
    pm = period_matrices[2]
    z = np.array([0.3 + 0.2j, -0.1 + 0.4j])
    rng_ = range(-12, 13)
    direct = sum(
        np.exp(1j * np.pi * n @ pm.tau @ n + 2j * np.pi * n @ z)
        for n in (np.array([a, b]) for a in rng_ for b in rng_)
    )
    assert abs(tf.theta(z, pm) - direct) < 1e-12


def test_odd_characteristic_vanishes_at_origin(period_matrices):
    for g, pm in period_matrices.items():
        char = tf.Characteristic.half((1,) * g, (1,) * g) if g % 2 else tf.Characteristic.half((1,) + (0,) * (g - 1), (1,) + (0,) * (g - 1))
        assert abs(tf.theta(np.zeros(g), pm, char)) < 1e-14


def test_period_matrix_validation():
    with pytest.raises(ValidationError):
        tf.PeriodMatrix(np.array([[1j, 0.5j], [0.4j, 1j]]))
    with pytest.raises(ValidationError):
        tf.PeriodMatrix(np.array([[1.0 + 0j]]))
    with pytest.raises(ValidationError):
        tf.PeriodMatrix.from_pairs([[0, 1]])


def test_pair_round_trip(period_matrices):
    pm = period_matrices[3]
    assert np.array_equal(tf.PeriodMatrix.from_pairs(pm.to_pairs()).tau, pm.tau)


def test_truncation_radius():
    pm = tf.PeriodMatrix(np.array([[1j]]))
    assert tf.truncation_radius(pm, 0, 1e-12) <= 4
    radii = [tf.truncation_radius(pm, k, 1e-12) for k in range(0, 9, 2)]
    assert radii == sorted(radii)
    thin = tf.PeriodMatrix(np.array([[1e-4j]]))
    with pytest.raises(tf.TruncationError):
        tf.truncation_radius(thin, 0, 1e-12, max_radius=40)


def test_quasi_periodicity_identity_shift(period_matrices):
    pm = period_matrices[2]
    assert tf.quasiperiodicity_residual(np.array([0.1, 0.2j]), (0, 0), (0, 0), pm) == 0.0


def test_quasi_periodicity_diagonal():
    pm = tf.PeriodMatrix(np.diag([1j, 2j]))
    z = np.array([0.3 + 0.1j, -0.2 + 0.5j])
    assert tf.quasiperiodicity_residual(z, (1, 0), (0, 0), pm) < 1e-10


@pytest.mark.parametrize("g", [1, 2, 3, 4])
def test_quasi_periodicity_random(g, period_matrices, rng):
    pm = period_matrices[g]
    for z in tf.sample_cell(pm, 5, rng):
        p = rng.integers(-2, 3, g)
        q = rng.integers(-2, 3, g)
        assert tf.quasiperiodicity_residual(z, p, q, pm) < 1e-9


@pytest.mark.parametrize("g", [1, 2, 3])
def test_derivatives_match_finite_differences(g, period_matrices, rng):
    pm = period_matrices[g]
    Z = tf.sample_cell(pm, 5, rng)
    h = 1e-5
    for i in range(g):
        e = np.zeros(g)
        e[i] = h
        d = tuple(int(j == i) for j in range(g))
        dd = tuple(2 * x for x in d)
        f = lambda W: tf.theta_derivatives(W, pm, [(0,) * g, d])
        fd1 = (f(Z + e)[:, 0] - f(Z - e)[:, 0]) / (2 * h)
        fd2 = (f(Z + e)[:, 1] - f(Z - e)[:, 1]) / (2 * h)
        exact = tf.theta_derivatives(Z, pm, [d, dd])
        assert np.max(np.abs(fd1 - exact[:, 0]) / np.abs(exact[:, 0])) < 1e-6
        assert np.max(np.abs(fd2 - exact[:, 1]) / np.abs(exact[:, 1])) < 1e-6


@pytest.mark.parametrize("g", [1, 2, 3, 4])
def test_radius_doubling_is_stable(g, period_matrices, rng):
    pm = period_matrices[g]
    Z = tf.sample_cell(pm, 10, rng)
    idx = tf.multi_indices(g, 2)
    a = tf.theta_derivatives(Z, pm, idx, normalized=True)
    b = tf.theta_derivatives(Z, pm, idx, cfg=tf.ThetaEvalConfig(radius_scale=2.0), normalized=True)
    assert np.max(np.abs(a - b)) <= 1e-12


def test_normalized_and_raw_agree(period_matrices, rng):
    pm = period_matrices[2]
    Z = tf.sample_cell(pm, 4, rng)
    raw = tf.theta_derivatives(Z, pm, [(0, 0)])[:, 0]
    norm = tf.theta_derivatives(Z, pm, [(0, 0)], normalized=True)[:, 0]
    y = Z.imag
    factor = np.exp(np.pi * np.einsum("ij,jk,ik->i", y, pm.Yinv, y))
    assert np.allclose(raw, norm * factor, rtol=1e-13)


def test_theta_is_even(period_matrices, rng):
    pm = period_matrices[3]
    Z = tf.sample_cell(pm, 4, rng) - 0.5
    a = tf.theta_derivatives(Z, pm, [(0, 0, 0)])[:, 0]
    b = tf.theta_derivatives(-Z, pm, [(0, 0, 0)])[:, 0]
    assert np.allclose(a, b, rtol=1e-12)


def test_order_n_basis_size_and_constant(period_matrices, rng):
    pm = period_matrices[2]
    (f,) = tf.order_n_basis(pm, 1)
    Z = tf.sample_cell(pm, 4, rng)
    assert np.allclose(f(Z), 1.0)
    assert len(tf.order_n_basis(pm, 2)) == 4
    assert len(tf.order_n_basis(period_matrices[3], 2)) == 8
    with pytest.raises(ValidationError):
        tf.order_n_basis(pm, 0)


@pytest.mark.parametrize("g, n", [(2, 2), (2, 3), (3, 2)])
def test_order_n_quotients_are_periodic(g, n, period_matrices, rng):
    pm = period_matrices[g]
    z = tf.sample_cell(pm, 1, rng)[0]
    for f in tf.order_n_basis(pm, n):
        assert tf.order_n_residual(f, z, rng.integers(-1, 2, g), rng.integers(-1, 2, g)) < 1e-9


def test_multi_indices():
    assert tf.multi_indices(2, 2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_transformer(period_matrices, rng):
    pm = period_matrices[2]
    est = tf.ThetaTransformer(tau=pm.tau, derivs=[(0, 0), (1, 0)])
    assert est.get_params()["derivs"] == [(0, 0), (1, 0)]
    with pytest.raises(NotFittedError):
        clone(est).transform(np.zeros((1, 2)))
    Z = tf.sample_cell(pm, 3, rng)
    out = est.fit(Z).transform(Z)
    assert out.shape == (3, 2)
    assert np.allclose(out, tf.theta_derivatives(Z, pm, [(0, 0), (1, 0)]))
    with pytest.raises(ValidationError):
        est.transform(np.zeros((2, 3)))
