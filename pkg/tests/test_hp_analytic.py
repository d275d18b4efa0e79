import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from dlmg import hp_analytic as hp
from dlmg.errors import CriticalPointError, CutoffError, InvalidParameterError, UnsupportedRegimeError

couplings = st.one_of(st.floats(0.0, 0.98), st.floats(1.02, 5.0))
temperatures = st.floats(0.5, 50.0)


def test_magnetization_symmetric_and_critical():
    assert hp.semiclassical_magnetization(0.5) == (0.0, (0.0, 0.0, 1.0))
    assert hp.semiclassical_magnetization(1.0)[0] == 0.0


def test_magnetization_broken():
    theta0, m = hp.semiclassical_magnetization(2.0)
    assert theta0 == pytest.approx(math.pi / 3)
    np.testing.assert_allclose(m, (math.sqrt(3) / 2, 0.0, 0.5), atol=1e-15)


def test_mode_frequency_values():
    assert hp.mode_frequency(0.5) == pytest.approx(0.70711, abs=1e-5)
    assert hp.mode_frequency(2.0) == pytest.approx(math.sqrt(3))
    with pytest.raises(CriticalPointError):
        hp.mode_frequency(1.0)
    with pytest.raises(CriticalPointError):
        hp.hp_params(1.0, 4.0)


def test_jump_coefficients_reference():
    p = hp.hp_params(0.1, 4.0)
    assert p.b_plus == pytest.approx(1.93163, abs=1e-5)
    assert p.b_minus == pytest.approx(2.17513, abs=1e-5)
    assert p.b_minus**2 - p.b_plus**2 == pytest.approx(1.0, abs=1e-12)


@given(couplings, temperatures)
@settings(max_examples=100, deadline=None)
def test_jump_coefficient_identities(coupling, T):
    p = hp.hp_params(coupling, T)
    assert abs(p.b_minus**2 - p.b_plus**2 - p.m_z) <= 1e-12 * max(1.0, p.b_minus**2)
    w = p.omega_b
    assert p.ratio == pytest.approx((4 * T - w) / (4 * T + w), rel=1e-12, abs=1e-14)


@given(couplings, temperatures)
@settings(max_examples=100, deadline=None)
def test_simplified_coefficients_equal_rotated_ones(coupling, T):
    p = hp.hp_params(coupling, T)
    bp, bm = hp.jump_coefficients_unsimplified(p.m_z, p.phi_b, T)
    assert bp == pytest.approx(p.b_plus, rel=1e-11, abs=1e-12)
    assert bm == pytest.approx(p.b_minus, rel=1e-11, abs=1e-12)


@given(couplings)
@settings(max_examples=50, deadline=None)
def test_bogoliubov_frequency(coupling):
    # omega_b = sqrt(omega_a^2 - 4 gamma_a^2) = omega_a sqrt(1 - eps^2)
    p = hp.hp_params(coupling, 1.0)
    assert p.omega_b == pytest.approx(math.sqrt(p.omega_a**2 - 4 * p.gamma_a**2), rel=1e-12)
    assert abs(p.epsilon) < 1


def test_eigenvalue_examples():
    assert hp.liouvillian_eigenvalue(0, 0, 0.5, 0.05) == 0
    lam = hp.liouvillian_eigenvalue(1, 0, 0.5, 0.05)
    assert lam.real == pytest.approx(-0.025, abs=1e-12)
    assert lam.imag == pytest.approx(0.70711, abs=1e-5)
    with pytest.raises(InvalidParameterError):
        hp.liouvillian_eigenvalue(1, -1, 0.5, 0.05)


@given(st.integers(-10, 10), st.integers(0, 10), couplings, st.floats(0, 1))
@settings(max_examples=60, deadline=None)
def test_eigenvalue_conjugate_pairs(delta, n, coupling, gamma):
    a = hp.liouvillian_eigenvalue(delta, n, coupling, gamma)
    b = hp.liouvillian_eigenvalue(-delta, n, coupling, gamma)
    assert a == pytest.approx(b.conjugate(), abs=1e-14)
    assert a.real <= 0


def test_eigenvalue_table_size():
    assert len(hp.eigenvalue_table(0.5, 0.1, 2, 3)) == 5 * 4


def test_stationary_temperature_values():
    exact, series = hp.stationary_temperature(0.1, 4.0)
    assert exact == pytest.approx(3.99531, abs=1e-5)
    assert abs(exact - series) < 2e-6
    assert hp.stationary_temperature(0.1, 0.5)[0] == pytest.approx(0.4599, abs=1e-4)


def test_stationary_temperature_high_t_limit():
    exact, _ = hp.stationary_temperature(0.3, 1e4)
    assert exact / 1e4 == pytest.approx(1.0, abs=1e-8)


def test_stationary_temperature_domain():
    w = hp.mode_frequency(0.1)
    with pytest.raises(InvalidParameterError):
        hp.stationary_temperature(0.1, w / 4)
    with pytest.raises(InvalidParameterError):
        hp.hp_params(0.1, 0.0)


@given(couplings, st.floats(2.0, 50.0))
@settings(max_examples=50, deadline=None)
def test_stationary_temperature_below_bath(coupling, T):
    p = hp.hp_params(coupling, T)
    assume(4 * T > 2 * p.omega_b)
    exact, _ = hp.stationary_temperature(coupling, T)
    assert 0 < exact < T
    # exp(-omega_b / T_ss) is the occupation ratio
    assert math.exp(-p.omega_b / exact) == pytest.approx(hp.occupation_ratio(coupling, T), rel=1e-12)


def test_hp_stationary_state_occupation():
    rho = hp.hp_stationary_state(0.1, 4.0, n_max=150)
    x = hp.occupation_ratio(0.1, 4.0)
    assert x == pytest.approx(0.7886368, abs=1e-7)
    n_mean = np.real(np.diag(rho)) @ np.arange(151)
    assert n_mean == pytest.approx(x / (1 - x), rel=1e-9)
    assert n_mean == pytest.approx(3.7311, abs=1e-4)


def test_hp_stationary_state_cold_limit():
    w = hp.mode_frequency(0.5)
    rho = hp.hp_stationary_state(0.5, w / 4 * (1 + 1e-9), n_max=8)
    assert rho[0, 0].real == pytest.approx(1.0, abs=1e-12)


def test_hp_stationary_state_cutoff_error():
    with pytest.raises(CutoffError):
        hp.hp_stationary_state(0.1, 4.0, n_max=20)


@given(st.floats(0.0, 0.9), st.floats(0.5, 8.0))
@settings(max_examples=30, deadline=None)
def test_hp_stationary_weights_decrease(coupling, T):
    x = hp.occupation_ratio(coupling, T)
    assume(x < 0.8)
    w = np.real(np.diag(hp.hp_stationary_state(coupling, T, n_max=200)))
    assert np.all(np.diff(w) <= 0)
    assert w.sum() == pytest.approx(1.0)


def test_a_plus_limits():
    p = hp.hp_params(0.1, 4.0)
    assert hp.a_plus(p, 0.1, 0.0) == 0.0
    assert hp.a_plus(p, 0.1, 1e4) == pytest.approx(0.7886368, abs=1e-7)
    assert hp.a_plus(p, 0.1, 1e4) == pytest.approx(p.ratio**2, abs=1e-14)
    # the alternative numerator does not reach the stationary ratio
    assert abs(hp.a_plus(p, 0.1, 1e4, "linear") - p.ratio**2) > 0.1
    with pytest.raises(InvalidParameterError):
        hp.a_plus(p, 0.1, 1.0, "other")


def test_squeeze_angle():
    f = hp.su11_factors(0.1, 4.0, 0.1, 1.0, 0.1, 150)
    assert math.tanh(f.psi) == pytest.approx(0.992993, abs=1e-6)


def test_broken_phase_dynamics_unsupported():
    with pytest.raises(UnsupportedRegimeError):
        hp.su11_factors(2.0, 4.0, 0.1, 1.0, 0.1, 100)
    with pytest.raises(UnsupportedRegimeError):
        hp.energy_expectation_hp(1.5, 4.0, 0.1, 1.0, 0.1, 100)


def test_temperature_at_ln2():
    coupling, T, gamma = 0.1, 4.0, 0.2
    w = hp.mode_frequency(coupling)
    t_ss = hp.stationary_temperature(coupling, T)[0]
    inv = hp.inverse_temperature_t(coupling, T, gamma, math.log(2) / gamma)
    assert inv == pytest.approx(math.log((math.exp(w / t_ss) - 0.5) / 0.5) / w, rel=1e-12)


@given(st.floats(0.0, 0.9), st.floats(1.0, 10.0), st.floats(0.01, 1.0), st.floats(0.01, 50.0))
@settings(max_examples=50, deadline=None)
def test_temperature_matches_a_plus(coupling, T, gamma, t):
    p = hp.hp_params(coupling, T)
    inv = hp.inverse_temperature_t(coupling, T, gamma, t)
    assert math.exp(-p.omega_b * inv) == pytest.approx(hp.a_plus(p, gamma, t), rel=1e-9, abs=1e-300)
    # heating from the vacuum is monotone towards T_ss
    assert hp.temperature_t(coupling, T, gamma, t) <= hp.stationary_temperature(coupling, T)[0] * (1 + 1e-12)


def test_temperature_at_zero_time():
    assert math.isinf(hp.inverse_temperature_t(0.1, 4.0, 0.1, 0.0))
    assert hp.temperature_t(0.1, 4.0, 0.1, 0.0) == 0.0
    with pytest.raises(InvalidParameterError):
        hp.inverse_temperature_t(0.1, 4.0, 0.1, -1.0)


def test_energy_limits():
    coupling, T, S = 0.1, 4.0, 150
    p = hp.hp_params(coupling, T)
    full, limit = hp.energy_expectation_hp(coupling, T, 0.1, 1e4, 0.1, 1e12)
    assert full == pytest.approx(p.ground_energy(1e12) / 1e12, abs=1e-11)
    assert limit == pytest.approx(-p.delta0_per_spin)
    t_ss = hp.stationary_temperature(coupling, T)[0]
    full, _ = hp.energy_expectation_hp(coupling, T, 0.1, 1e4, 0.0, S)
    w = p.omega_b
    assert full == pytest.approx(p.ground_energy(S) / S + w / (S * math.expm1(w / t_ss)), rel=1e-12)


def test_magnetization_limits():
    mx, my, _ = hp.magnetization_hp(0.1, 4.0, 0.15, 0.0, 0.08, 150)
    assert mx == pytest.approx(0.08)
    assert my == 0.0
    mx, my, mz = hp.magnetization_hp(0.1, 4.0, 0.15, 500.0, 0.08, 150)
    assert abs(mx) < 1e-15 and abs(my) < 1e-15
    assert 0 < mz < 1


def test_evolved_state_long_time_is_stationary():
    rho_t = hp.evolved_state_hp(0.1, 4.0, 0.2, 400.0, 0.1, 150, n_max=150)
    rho_ss = hp.hp_stationary_state(0.1, 4.0, n_max=150)
    assert np.abs(rho_t - rho_ss).max() < 1e-10


def test_evolved_state_without_tilt_is_diagonal():
    rho = hp.evolved_state_hp(0.5, 2.0, 0.1, 3.0, 0.0, 100, n_max=60)
    assert np.abs(rho - np.diag(np.diag(rho))).max() < 1e-14


def test_evolved_state_coherent_amplitude():
    coupling, T, gamma, t, theta, S = 0.5, 2.0, 0.1, 3.0, 0.2, 100
    rho = hp.evolved_state_hp(coupling, T, gamma, t, theta, S, n_max=80)
    b = np.diag(np.sqrt(np.arange(1, 81)), 1)
    f = hp.su11_factors(coupling, T, gamma, t, theta, S)
    w = hp.mode_frequency(coupling)
    assert np.trace(b @ rho) == pytest.approx(f.theta_second * np.exp(-1j * w * t), abs=1e-10)


def test_evolved_state_cutoff_error():
    with pytest.raises(CutoffError):
        hp.evolved_state_hp(0.1, 4.0, 0.2, 100.0, 0.1, 150, n_max=30)
