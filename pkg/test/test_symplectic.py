import sys
import os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
import numpy as np
import pytest
from numpy.testing import assert_allclose

from gauss_stein.errors import InvalidArgumentError, PureStateDomainError
from gauss_stein.states import product_state, random_state, thermal_state, tmsv
from gauss_stein.symplectic import (
    arcoth,
    g_matrix,
    g_matrix_direct,
    is_symplectic,
    log_partition_function,
    matrix_arcoth_2iVOmega,
    nu_roundoff,
    omega,
    partition_function,
    symplectic_eigenvalues,
    symplectic_form,
    williamson,
)


@pytest.fixture(scope="module")
def random_covariances():
    rng = np.random.default_rng(20240611)
    return [random_state(rng, n_modes=1 + k % 3).cov for k in range(500)]


def test_symplectic_form_examples():
    assert_allclose(symplectic_form(1).matrix, [[0, 1], [-1, 0]])
    assert_allclose(
        symplectic_form(2).matrix,
        [[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]],
    )
    for n in (1, 2, 3, 5):
        om = omega(n)
        assert_allclose(om @ om.T, np.eye(2 * n))


def test_symplectic_form_rejects_bad_mode_count():
    with pytest.raises(InvalidArgumentError):
        symplectic_form(0)
    with pytest.raises(InvalidArgumentError):
        symplectic_form(1.5)


def test_is_symplectic_examples():
    assert is_symplectic(np.eye(2))
    assert is_symplectic(omega(1))
    assert not is_symplectic(np.diag([2.0, 1.0]))


def test_williamson_vacuum_and_thermal_are_normal_forms():
    vac = williamson(0.5 * np.eye(2))
    assert_allclose(vac.nu, [0.5])
    assert_allclose(vac.S, np.eye(2), atol=1e-12)

    th = williamson(thermal_state(0.5).cov)
    assert_allclose(th.nu, [1.0])
    assert_allclose(th.S, np.eye(2), atol=1e-12)


def test_williamson_tmsv_is_pure():
    V = tmsv(1.0).cov
    dec = williamson(V)
    assert_allclose(dec.nu, [0.5, 0.5], atol=1e-10)
    d2 = np.concatenate([dec.nu, dec.nu])
    assert_allclose((dec.S * d2) @ dec.S.T, V, atol=1e-10)


def test_williamson_bright_tmsv_roundoff():
    V = tmsv(1e4).cov
    dec = williamson(V)
    assert dec.roundoff == pytest.approx(nu_roundoff(V))
    assert 1e-7 < dec.roundoff < 1e-5
    assert dec.pure_modes(1e-10).all()
    assert nu_roundoff(0.5 * np.eye(2)) < 1e-14
    assert not williamson(thermal_state(1e-6).cov).pure_modes(1e-10).any()
    with pytest.raises(PureStateDomainError):
        g_matrix(V)


def test_williamson_standard_form_eigenvalues():
    # (a, b, c) = (2, 1, 0.5): y = 8
    V = np.array([
        [2.0, 0.5, 0.0, 0.0],
        [0.5, 1.0, 0.0, 0.0],
        [0.0, 0.0, 2.0, -0.5],
        [0.0, 0.0, -0.5, 1.0],
    ])
    expected = [(np.sqrt(8.0) - 1.0) / 2.0, (np.sqrt(8.0) + 1.0) / 2.0]
    assert_allclose(williamson(V).nu, expected, rtol=1e-12)
    assert_allclose(symplectic_eigenvalues(V), expected, rtol=1e-12)


def test_williamson_rejects_unphysical_covariance():
    with pytest.raises(InvalidArgumentError, match="uncertainty"):
        williamson(0.4 * np.eye(2))
    with pytest.raises(InvalidArgumentError, match="symmetric"):
        williamson(np.array([[1.0, 0.2], [0.0, 1.0]]))
    with pytest.raises(InvalidArgumentError, match="even"):
        williamson(np.eye(3))


def test_williamson_residuals_on_random_states(random_covariances):
    for V in random_covariances:
        dec = williamson(V)
        n = dec.n_modes
        om = omega(n)
        d2 = np.concatenate([dec.nu, dec.nu])
        assert np.all(np.diff(dec.nu) >= 0)
        assert np.max(np.abs(dec.S @ om @ dec.S.T - om)) <= 1e-9
        assert np.max(np.abs((dec.S * d2) @ dec.S.T - V)) <= 1e-9 * max(1.0, np.max(np.abs(V)))
        assert dec.residuals["pairing"] <= 1e-10 * max(1.0, dec.nu[-1])
        assert dec.residuals["symplectic"] <= 1e-9


def test_g_matrix_routes_agree(random_covariances):
    for V in random_covariances:
        G = g_matrix(V).matrix
        G_direct = g_matrix_direct(V).matrix
        scale = max(1.0, np.max(np.abs(G)))
        assert np.max(np.abs(G - G_direct)) <= 1e-10 * scale
        assert_allclose(G, G.T, atol=1e-12 * scale)
        assert abs(np.trace(G @ omega(V.shape[0] // 2))) <= 1e-10 * scale


def test_g_matrix_thermal():
    for n_b in (0.1, 1.0, 20.0):
        G = g_matrix(thermal_state(n_b).cov).matrix
        assert_allclose(G, 2.0 * arcoth(2.0 * n_b + 1.0) * np.eye(2), rtol=1e-12, atol=1e-14)


def test_matrix_arcoth_scalar_and_vacuum():
    assert arcoth(2.0) == pytest.approx(0.5 * np.log(3.0), rel=1e-14)
    # thermal N = 0.5: arcoth(2iV(Omega)) = i arcoth(2) Omega
    K = matrix_arcoth_2iVOmega(thermal_state(0.5).cov)
    assert_allclose(K, arcoth(2.0) * omega(1), atol=1e-12)
    with pytest.raises(PureStateDomainError):
        matrix_arcoth_2iVOmega(0.5 * np.eye(2))
    with pytest.raises(PureStateDomainError):
        g_matrix(tmsv(0.3).cov)


def test_partition_function_examples():
    assert abs(partition_function(0.5 * np.eye(2))) <= 1e-15
    assert partition_function(thermal_state(1.0).cov) == pytest.approx(2.0, rel=1e-12)
    two = product_state(thermal_state(1.0), thermal_state(2.0))
    assert partition_function(two.cov) == pytest.approx(12.0, rel=1e-12)
    assert log_partition_function(np.array([1.5, 2.5])) == pytest.approx(np.log(12.0), rel=1e-12)
    assert log_partition_function(np.array([0.5])) == -np.inf
