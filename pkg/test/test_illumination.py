import sys
import os
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
import math

import pandas as pd
import pytest
from numpy.testing import assert_allclose

from gauss_stein.divergence import divergence_report
from gauss_stein.errors import InvalidArgumentError, NotFullSupportError
from gauss_stein.illumination import (
    SWEEP_COLUMNS,
    advantage_table,
    coherent_closed_form,
    coherent_pair,
    comparison_sweep,
    crossover_trials,
    exact_divergences,
    hypothesis_pair,
    illumination_params,
    qi_leading_order_nb,
    qi_leading_order_ns,
    qi_pair,
    qi_standard_forms,
    sweep_async,
)
from gauss_stein.states import validate
from gauss_stein.stein import gaussian_approx_exponent

LOW_NOISE = illumination_params(10.0, 0.05, 0.1, 0.001)
BRIGHT_NOISE = illumination_params(0.01, 20.0, 0.01, 0.01)


@pytest.mark.parametrize("n_s", [0.01, 1.0, 10.0])
@pytest.mark.parametrize("n_b", [0.1, 1.0, 20.0])
@pytest.mark.parametrize("eta", [0.01, 0.1, 0.9])
def test_coherent_pair_matches_closed_form(n_s, n_b, eta):
    p = illumination_params(n_s, n_b, eta)
    D, V = exact_divergences(coherent_pair(p))
    D_ref, V_ref = coherent_closed_form(p)
    assert D == pytest.approx(D_ref, rel=1e-10)
    assert V == pytest.approx(V_ref, rel=1e-10)


def test_coherent_pair_has_equal_covariances():
    report = divergence_report(*_states(coherent_pair(illumination_params(1.0, 0.3, 0.5))))
    assert report.gamma_norm <= 1e-10


def test_coherent_closed_form_examples():
    D, V = coherent_closed_form(illumination_params(1.0, 1.0, 1.0))
    assert D == pytest.approx(math.log(2.0))
    assert V == pytest.approx(3.0 * math.log(2.0) ** 2)
    D, V = coherent_closed_form(illumination_params(0.5, 1.0, 1.0))
    assert V / D**2 == pytest.approx(6.0)
    assert coherent_closed_form(illumination_params(0.0, 1.0, 0.5)) == (0.0, 0.0)
    assert exact_divergences(coherent_pair(illumination_params(1.0, 1.0, 1.0)))[0] == pytest.approx(math.log(2.0))


def test_qi_states():
    pair = qi_pair(BRIGHT_NOISE)
    assert validate(pair.null_state).passed
    assert validate(pair.alt_state).passed
    null_p, alt_p = qi_standard_forms(BRIGHT_NOISE)
    assert (null_p.a, null_p.b, null_p.c) == pytest.approx((20.5, 0.51, 0.0))
    assert alt_p.a == pytest.approx(0.01 * 0.01 + 20.5)
    assert alt_p.c == pytest.approx(math.sqrt(0.01 * 0.01 * 1.01))
    assert_allclose(pair.alt_state.mean, 0.0)


def test_qi_without_signal_has_no_full_support():
    with pytest.raises(NotFullSupportError):
        exact_divergences(qi_pair(illumination_params(0.0, 1.0, 0.5)))


def test_invalid_parameters():
    with pytest.raises(InvalidArgumentError):
        illumination_params(1.0, 0.0, 0.5)
    with pytest.raises(InvalidArgumentError):
        illumination_params(1.0, 1.0, 1.5)
    with pytest.raises(InvalidArgumentError):
        illumination_params(1.0, 1.0, 0.5, epsilon=1.0)
    with pytest.raises(InvalidArgumentError, match="unknown transmitter"):
        hypothesis_pair("laser", LOW_NOISE)
    with pytest.raises(InvalidArgumentError):
        qi_leading_order_nb(illumination_params(0.0, 100.0, 0.1))


def test_lossless_channel_only_for_coherent_transmitter():
    p = illumination_params(10.0, 1.0, 1.0)
    for build in (qi_leading_order_ns, qi_leading_order_nb, qi_pair, qi_standard_forms):
        with pytest.raises(InvalidArgumentError, match="0 < eta < 1"):
            build(p)
    with pytest.raises(InvalidArgumentError):
        hypothesis_pair("qi", p)
    D, V = exact_divergences(coherent_pair(p))
    assert (D, V) == pytest.approx(coherent_closed_form(p), rel=1e-10)


def test_large_signal_expansion():
    p = illumination_params(1.0e4, 1.0, 0.1)
    D, V = exact_divergences(qi_pair(p))
    D_lead, V_lead = qi_leading_order_ns(p)
    assert abs(D / D_lead - 1.0) <= 0.02
    assert abs(V / V_lead - 1.0) <= 0.05


def test_large_noise_expansion():
    p = illumination_params(0.01, 1.0e4, 0.01)
    D, V = exact_divergences(qi_pair(p))
    D_lead, V_lead = qi_leading_order_nb(p)
    assert abs(D / D_lead - 1.0) <= 0.02
    assert abs(V / V_lead - 1.0) <= 0.05
    assert qi_leading_order_nb(illumination_params(0.01, 2.0e4, 0.01))[0] < D_lead


def test_large_signal_expansion_reduces_to_coherent_for_small_eta():
    eta = 1.0e-6
    p = illumination_params(1.0e4, 2.0, eta)
    coherent, _ = coherent_closed_form(p)
    assert qi_leading_order_ns(p)[0] == pytest.approx(coherent, rel=1e-5)


@pytest.mark.parametrize("p", [LOW_NOISE, BRIGHT_NOISE], ids=["low-noise", "bright-noise"])
def test_entangled_transmitter_advantage(p):
    D_coh, _ = exact_divergences(coherent_pair(p))
    D_qi, _ = exact_divergences(qi_pair(p))
    assert D_qi > D_coh


def test_low_noise_coherent_exponent():
    D_coh, _ = exact_divergences(coherent_pair(LOW_NOISE))
    assert D_coh == pytest.approx(math.log(21.0), rel=1e-10)


def test_crossover_low_noise():
    m_star = crossover_trials(LOW_NOISE, m_max=1_000_000)
    assert m_star is not None and 1 <= m_star <= 1_000_000
    D_coh, _ = exact_divergences(coherent_pair(LOW_NOISE))
    D_qi, V_qi = exact_divergences(qi_pair(LOW_NOISE))
    assert gaussian_approx_exponent(D_qi, V_qi, LOW_NOISE.epsilon, m_star).r_second > D_coh
    if m_star > 1:
        assert gaussian_approx_exponent(D_qi, V_qi, LOW_NOISE.epsilon, m_star - 1).r_second <= D_coh


def test_crossover_bright_noise_needs_more_trials():
    assert crossover_trials(BRIGHT_NOISE, m_max=1_000_000) is None
    m_star = crossover_trials(BRIGHT_NOISE, m_max=10**9)
    assert m_star is not None and m_star > 1_000_000


def test_comparison_sweep_layout():
    frame = comparison_sweep(BRIGHT_NOISE, [1, 10, 100])
    assert list(frame.columns) == SWEEP_COLUMNS
    assert frame["transmitter"].tolist() == ["coherent"] * 3 + ["qi"] * 3
    assert frame["M"].tolist() == [1, 10, 100] * 2
    qi_first = frame.loc[frame.transmitter == "qi", "R_first"].to_numpy()
    coh_first = frame.loc[frame.transmitter == "coherent", "R_first"].to_numpy()
    assert (qi_first > coh_first).all()


@pytest.mark.asyncio
async def test_sweep_async_is_order_independent():
    params = [BRIGHT_NOISE, LOW_NOISE, illumination_params(0.2, 0.3, 0.3, 0.01)]
    parallel = await sweep_async(params, [1, 100], workers=4)
    serial = await sweep_async(list(reversed(params)), [1, 100], workers=1)
    pd.testing.assert_frame_equal(parallel, serial)
    assert len(parallel) == 2 * len(params) * 2


def test_advantage_table():
    table = advantage_table([LOW_NOISE, BRIGHT_NOISE])
    assert {"D_coherent", "D_qi", "V_coherent", "V_qi", "D_ratio"} <= set(table.columns)
    assert (table["D_ratio"] > 1.0).all()


def _states(pair):
    return pair.null_state, pair.alt_state
