import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdbell.bell import (
    SQRT2,
    TSIRELSON,
    ChshSettings,
    chsh_S,
    correlation_E,
    s_limit_beta,
    s_limit_gd,
    s_limit_n,
    s_maclaurin,
)
from qdbell.errors import DegeneracyError, ParameterError
from qdbell.params import FILTERED, EmitterParams

# Close enough to n -> 0 that the O(n) loss of S is below 1e-7.
VANISHING_N = 1e-9


@pytest.fixture
def lossy():
    return EmitterParams.from_ghz(2.3, 0.85, gamma_d_ghz=0.05, delta_ghz=0.2, n=0.02, sigma_irf_ps=30)


def test_ideal_correlation_is_cosine_of_phase_sum(ideal):
    assert correlation_E(ideal(VANISHING_N), 0.0, math.pi / 4) == pytest.approx(1 / SQRT2, abs=1e-6)


def test_correlation_swap_symmetry(lossy):
    assert correlation_E(lossy, 0.3, 1.4) == pytest.approx(correlation_E(lossy, 1.4, 0.3), rel=1e-12)


def test_orthogonal_port_flips_sign(lossy):
    assert correlation_E(lossy, 0.3, 1.4 + math.pi) == pytest.approx(-correlation_E(lossy, 0.3, 1.4), rel=1e-12)


def test_undriven_correlation_is_degenerate():
    with pytest.raises(DegeneracyError):
        correlation_E(EmitterParams(1.0, 0.9), 0.0, 0.0)


def test_settings_validation_and_order():
    with pytest.raises(ParameterError):
        ChshSettings(phi_a=math.inf)
    signs = [sign for *_, sign in ChshSettings().pairs()]
    assert signs == [1, 1, -1, 1]


def test_ideal_limit_reaches_tsirelson(ideal):
    assert chsh_S(ideal(VANISHING_N)) == pytest.approx(TSIRELSON, abs=1e-6)


def test_operating_point_violates_bell_bound():
    S = chsh_S(FILTERED)
    assert 2.35 <= S <= 2.99


def test_quarter_photon_drive_kills_violation(ideal):
    assert chsh_S(ideal(0.25)) == pytest.approx(0.0, abs=1e-12)


def test_closed_form_special_values():
    assert s_limit_n(0.0) == s_limit_beta(1.0) == s_limit_gd(0.0, 2.0) == pytest.approx(TSIRELSON)
    assert s_limit_n(0.25) == 0
    assert s_limit_beta(0.5) == 0
    assert s_limit_gd(1.0, 2.0) == 0
    assert s_maclaurin(0.0, 1.0, 0.0, 3.0) == pytest.approx(TSIRELSON)


def test_closed_forms_reject_bad_domains():
    with pytest.raises(ParameterError):
        s_limit_n(-0.1)
    with pytest.raises(ParameterError):
        s_limit_beta(1.2)
    with pytest.raises(ParameterError):
        s_limit_gd(-0.1, 1.0)
    with pytest.raises(ParameterError):
        s_maclaurin(0.0, 1.0, 0.0, 0.0)


@pytest.mark.parametrize("n", [1e-4, 1e-3, 0.01, 0.05, 0.1])
def test_pipeline_matches_exact_photon_number_formula(ideal, n):
    assert chsh_S(ideal(n, gamma=1.0)) == pytest.approx(s_limit_n(n), rel=1e-6)


@pytest.mark.parametrize("beta", [1.0, 0.96, 0.92, 0.8, 0.6])
def test_pipeline_matches_exact_coupling_formula(beta):
    p = EmitterParams(1.0, beta, n_photons=VANISHING_N)
    assert chsh_S(p) == pytest.approx(s_limit_beta(beta), rel=1e-6)


@pytest.mark.parametrize("gd", [0.0, 0.005, 0.01, 0.05])
def test_pipeline_matches_exact_dephasing_formula(gd):
    p = EmitterParams(1.0, 1.0, gamma_d=gd, n_photons=VANISHING_N)
    assert chsh_S(p) == pytest.approx(s_limit_gd(gd, 1.0), rel=1e-6)


def test_photon_number_slope_matches_expansion(ideal):
    h = 1e-7
    slope = (chsh_S(ideal(2 * h, gamma=1.0)) - chsh_S(ideal(h, gamma=1.0))) / h
    expected = (s_maclaurin(1.0, 1.0, 0.0, 1.0) - TSIRELSON)  # coefficient of n
    assert expected == pytest.approx(-32 * SQRT2)
    assert slope == pytest.approx(expected, rel=1e-3)


def test_dephasing_slope_matches_exact_formula():
    gamma, h = 2.0, 1e-7
    base = EmitterParams(gamma, 1.0, n_photons=1e-20)
    slope = (chsh_S(base.replace(gamma_d=h)) - chsh_S(base)) / h
    assert slope == pytest.approx(-16 * SQRT2 / gamma, rel=1e-3)
    exact = (s_limit_gd(h, gamma) - s_limit_gd(0.0, gamma)) / h
    assert slope == pytest.approx(exact, rel=1e-3)


def test_quartic_robustness_to_coupling_loss():
    beta = np.array([0.95, 0.97, 0.99, 0.995, 0.999])
    loss = [TSIRELSON - chsh_S(EmitterParams(1.0, b, n_photons=1e-20)) for b in beta]
    slope = np.polyfit(np.log(1 - beta), np.log(loss), 1)[0]
    assert slope == pytest.approx(4.0, abs=0.1)


def test_violation_decreases_with_drive():
    ns = np.geomspace(0.002, 0.2, 9)
    S = [chsh_S(FILTERED.replace(n_photons=n)) for n in ns]
    assert np.all(np.diff(S) <= 1e-12)


@settings(max_examples=500, deadline=None)
@given(
    beta=st.floats(0.01, 1.0),
    gd=st.floats(0.0, 1.0),
    delta=st.floats(-2.0, 2.0),
    n=st.floats(1e-8, 2.0),
    sigma_sd=st.floats(0.0, 0.5),
    sigma_irf=st.floats(0.0, 0.3),
)
def test_tsirelson_bound_holds(beta, gd, delta, n, sigma_sd, sigma_irf):
    p = EmitterParams(1.0, beta, gamma_d=gd, delta=delta, n_photons=n, sigma_sd=sigma_sd, sigma_irf=sigma_irf)
    try:
        S = chsh_S(p)
    except DegeneracyError:
        return
    assert 0.0 <= S <= TSIRELSON + 1e-6
