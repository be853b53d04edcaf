import sys
import os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gauss_stein.errors import InvalidArgumentError, StateValidationError
from gauss_stein.states import (
    GaussianState,
    apply_symplectic,
    displace,
    displaced_thermal,
    dump_state_json,
    extract_standard_form,
    from_standard_form,
    load_state,
    parse_state_json,
    phase_rotation,
    product_state,
    random_standard_form,
    random_state,
    require_valid,
    standard_form_params,
    thermal_state,
    tmsv,
    validate,
    von_neumann_entropy,
    xpxp_to_xxpp,
    xxpp_to_xpxp,
)
from gauss_stein.settings import get_numerics, with_overrides
from gauss_stein.symplectic import entropy_g


def _doc(cov, mean=None, **extra):
    n = len(cov) // 2
    doc = {"n_modes": n, "mean": mean or [0.0] * (2 * n), "cov": cov}
    doc.update(extra)
    return json.dumps(doc)


def test_thermal_state():
    assert_allclose(thermal_state(0).cov, 0.5 * np.eye(2))
    assert_allclose(thermal_state(1).cov, 1.5 * np.eye(2))
    with pytest.raises(InvalidArgumentError):
        thermal_state(-0.1)


def test_displaced_thermal_zero_shift_is_thermal():
    a, b = displaced_thermal(0.0, 0.0, 0.7), thermal_state(0.7)
    assert_allclose(a.cov, b.cov)
    assert_allclose(a.mean, b.mean)


def test_tmsv():
    assert_allclose(tmsv(0).cov, 0.5 * np.eye(4))
    V = tmsv(1.0).cov
    assert V[0, 0] == pytest.approx(1.5)
    assert V[0, 1] == pytest.approx(np.sqrt(2.0))
    assert V[2, 3] == pytest.approx(-np.sqrt(2.0))


def test_standard_form_construction():
    mu = 1.5
    state = from_standard_form(standard_form_params(mu, mu, np.sqrt(mu**2 - 0.25)))
    assert_allclose(state.cov, tmsv(1.0).cov, atol=1e-14)
    assert_allclose(from_standard_form(standard_form_params(0.5, 0.5, 0.0)).cov, 0.5 * np.eye(4))

    p = extract_standard_form(tmsv(1.0))
    assert (p.a, p.b) == pytest.approx((1.5, 1.5))
    assert p.c == pytest.approx(np.sqrt(2.0))

    with pytest.raises(InvalidArgumentError):
        standard_form_params(1.0, 1.0, 2.0)
    with pytest.raises(InvalidArgumentError):
        extract_standard_form(thermal_state(1.0))


@pytest.mark.parametrize("n_s", [0.0, 1.0, 1e2, 1e3, 3e3, 1e4])
def test_bright_tmsv_is_valid(n_s):
    report = validate(tmsv(n_s))
    assert report.passed, report.message
    assert report.min_symplectic_eigenvalue == pytest.approx(0.5, abs=1e-6)
    require_valid(tmsv(n_s))


def test_standard_form_slack_setting():
    c_max = np.sqrt(0.75)
    with pytest.raises(InvalidArgumentError):
        standard_form_params(1.0, 1.0, c_max + 1e-9)
    loose = with_overrides(get_numerics(), standard_form_slack=1e-8)
    assert standard_form_params(1.0, 1.0, c_max + 1e-9, loose).c == pytest.approx(c_max)
    with pytest.raises(InvalidArgumentError):
        standard_form_params(1.0, 1.0, c_max + 1e-7, loose)
    mu = 1e4 + 0.5
    p = standard_form_params(mu, mu, np.sqrt(1e4 * (1e4 + 1.0)))
    assert abs(p.c) <= p.c_max * (1.0 + 1e-12)


def test_validate_examples():
    vac = validate(thermal_state(0))
    assert vac.passed
    assert vac.min_symplectic_eigenvalue == pytest.approx(0.5)

    bad = validate(GaussianState.from_moments([0, 0], 0.4 * np.eye(2)))
    assert not bad.passed
    assert bad.min_symplectic_eigenvalue == pytest.approx(0.4)

    assert validate(tmsv(2.0)).passed

    skew = validate(GaussianState.from_moments([0, 0], [[1.0, 0.3], [0.0, 1.0]]))
    assert not skew.passed
    assert "symmetric" in skew.message

    with pytest.raises(StateValidationError):
        require_valid(GaussianState.from_moments([0, 0], 0.4 * np.eye(2)))


def test_gaussian_state_shape_checks():
    with pytest.raises(InvalidArgumentError):
        GaussianState.from_moments([0.0], np.eye(2))
    with pytest.raises(InvalidArgumentError):
        GaussianState.from_moments([0.0, np.nan], np.eye(2))
    state = thermal_state(1.0)
    with pytest.raises(ValueError):
        state.cov[0, 0] = 3.0


def test_symplectic_actions():
    th = thermal_state(0.8)
    assert_allclose(apply_symplectic(th, np.eye(2)).cov, th.cov)
    assert_allclose(apply_symplectic(th, phase_rotation(0.7)).cov, th.cov, atol=1e-14)

    coh = displace(thermal_state(0), [1.2, 0.0])
    assert_allclose(coh.cov, 0.5 * np.eye(2))
    assert_allclose(coh.mean, [1.2, 0.0])

    with pytest.raises(InvalidArgumentError, match="not symplectic"):
        apply_symplectic(th, np.diag([2.0, 1.0]))


def test_product_state_orders_modes_xxpp():
    s = product_state(displaced_thermal(1.0, 2.0, 1.0), thermal_state(2.0))
    assert s.n_modes == 2
    assert_allclose(s.mean, [1.0, 0.0, 2.0, 0.0])
    assert_allclose(s.cov, np.diag([1.5, 2.5, 1.5, 2.5]))


def test_ordering_conversion():
    mean, cov = xxpp_to_xpxp(tmsv(1.0).mean, tmsv(1.0).cov)
    assert cov[0, 2] == pytest.approx(np.sqrt(2.0))
    assert cov[1, 3] == pytest.approx(-np.sqrt(2.0))
    _, back = xpxp_to_xxpp(mean, cov)
    assert_allclose(back, tmsv(1.0).cov)


def test_random_generators_are_valid():
    rng = np.random.default_rng(7)
    for n in (1, 2, 3):
        assert validate(random_state(rng, n)).passed
    for _ in range(20):
        p = random_standard_form(rng)
        assert abs(p.c) <= p.c_max
        assert validate(from_standard_form(p)).passed


def test_von_neumann_entropy():
    assert von_neumann_entropy(tmsv(0.4)) == pytest.approx(0.0, abs=1e-9)
    assert von_neumann_entropy(thermal_state(2.0)) == pytest.approx(float(entropy_g(2.0)))


def test_state_json_round_trip():
    state = displace(tmsv(0.3), [0.1, -0.2, 0.3, 0.4])
    again = parse_state_json(dump_state_json(state))
    assert_allclose(again.mean, state.mean)
    assert_allclose(again.cov, state.cov)


def test_parse_state_json_errors():
    with pytest.raises(InvalidArgumentError, match=r"state\.json:2:"):
        parse_state_json('{"n_modes": 1,\n "mean": [0, 0,], "cov": []}', source="state.json")
    with pytest.raises(InvalidArgumentError, match="cov"):
        parse_state_json('{"n_modes": 1, "mean": [0, 0]}')
    with pytest.raises(InvalidArgumentError, match="ordering"):
        parse_state_json(_doc([[0.5, 0.0], [0.0, 0.5]], ordering="xpxp"))
    with pytest.raises(InvalidArgumentError):
        parse_state_json(_doc([[0.5, 0.0], [0.0, 0.5]], units="shot-noise"))
    with pytest.raises(StateValidationError, match="uncertainty"):
        parse_state_json(_doc([[0.4, 0.0], [0.0, 0.4]]))


def test_load_state(tmp_path):
    path = tmp_path / "thermal.json"
    path.write_text(_doc([[1.5, 0.0], [0.0, 1.5]]))
    assert_allclose(load_state(str(path)).cov, 1.5 * np.eye(2))
    with pytest.raises(InvalidArgumentError, match="cannot read"):
        load_state(str(tmp_path / "missing.json"))
