import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment

from dlmg import hp_analytic as hp
from dlmg import lmg_model as lm
from dlmg import spectral as spc
from dlmg import spin_algebra as sa
from dlmg.errors import ConvergenceError, InvalidParameterError


def full_spectrum(S=4, coupling=0.5, gamma=0.2, T=4.0, method="auto"):
    p = lm.ModelParams(S=S, coupling=coupling, gamma=gamma, T=T)
    return spc.diagonalize(lm.lindblad_superoperator(p), lm.parity_superoperator(S), method=method)


def restricted_spectrum(S, K, coupling, gamma=0.2, T=4.0):
    p = lm.ModelParams(S=S, coupling=coupling, gamma=gamma, T=T)
    so, basis = lm.restricted_superoperator(p, K)
    return spc.diagonalize(so, basis.parity_superoperator())


def test_unitary_real_parts_vanish():
    spec = full_spectrum(gamma=0.0)
    assert np.abs(spec.eigenvalues.real).max() < 1e-10


@given(st.integers(1, 10).map(lambda n: n / 2), st.floats(0, 3), st.floats(0.01, 1), st.floats(0.2, 10))
@settings(max_examples=20, deadline=None)
def test_spectrum_in_left_half_plane(S, coupling, gamma, T):
    spec = full_spectrum(S, coupling, gamma, T)
    assert spec.eigenvalues.real.max() <= 1e-8
    assert abs(spec.eigenvalues[0]) < 1e-8


@given(st.integers(1, 8).map(lambda n: n / 2), st.floats(0, 3), st.floats(0.01, 1))
@settings(max_examples=15, deadline=None)
def test_direct_and_sector_paths_agree(S, coupling, gamma):
    a = full_spectrum(S, coupling, gamma, method="direct")
    b = full_spectrum(S, coupling, gamma, method="sectors")
    dist = np.abs(a.eigenvalues[:, None] - b.eigenvalues[None, :])
    assert dist.min(axis=1).max() < 1e-8


def test_eigenvectors_satisfy_eigen_equation():
    spec = full_spectrum(S=3, coupling=1.5)
    m = spec.superop.matrix
    res = m @ spec.eigenvectors - spec.eigenvectors * spec.eigenvalues
    assert np.abs(res).max() < 1e-9


def test_sector_labels_are_parity_eigenvalues():
    spec = full_spectrum(S=3, coupling=2.0)
    par = lm.parity_superoperator(3).matrix
    pv = par @ spec.eigenvectors
    np.testing.assert_allclose(pv, spec.eigenvectors * spec.sector, atol=1e-9)


def test_sort_order():
    lam = np.array([-1 + 0j, 0j, -0.5 - 1j, -0.5 + 1j, -0.5 + 0j])
    np.testing.assert_array_equal(lam[spc.sort_order(lam)], [0, -0.5, -0.5 + 1j, -0.5 - 1j, -1])


def test_reported_drops_negative_imaginary():
    spec = full_spectrum()
    rep = spec.eigenvalues[spec.reported()]
    assert np.all(rep.imag >= -1e-9)
    assert len(rep) < len(spec)


def test_parity_validation():
    p = lm.ModelParams(S=2, coupling=0.5, gamma=0.1, T=2.0)
    so = lm.lindblad_superoperator(p)
    bad = lm.SuperOperator(2 * np.eye(25), 5)
    with pytest.raises(InvalidParameterError):
        spc.diagonalize(so, bad)
    with pytest.raises(InvalidParameterError):
        spc.diagonalize(so, lm.parity_superoperator(2), method="other")


def test_stationary_state_properties():
    spec = full_spectrum(S=5, coupling=1.5)
    rho = spc.stationary_state(spec)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-14)
    assert np.abs(rho - rho.conj().T).max() == 0
    assert np.linalg.eigvalsh(rho)[0] > -1e-10


def test_stationary_state_missing_kernel():
    spec = full_spectrum(S=2)
    fake = spc.SpectrumResult(spec.eigenvalues - 1.0, spec.eigenvectors, spec.sector, spec.superop)
    with pytest.raises(ConvergenceError):
        spc.stationary_state(fake)


def test_stationary_weak_coupling_is_gibbs_at_t_ss():
    p = lm.ModelParams(S=100, coupling=0.5, gamma=0.01, T=4.0)
    so, basis = lm.restricted_superoperator(p, 40)
    rho = spc.stationary_state(spc.diagonalize(so, basis.parity_superoperator()))
    e, v = np.linalg.eigh(lm.hamiltonian_system(p))
    t_ss = hp.stationary_temperature(0.5, 4.0)[0]
    gibbs = (v * spc.gibbs_state(e, t_ss)) @ v.T
    assert spc.trace_distance(rho, gibbs) < 0.05


def test_fit_gibbs_temperature_recovers_input():
    e = np.linspace(0, 5, 30) ** 1.1
    rho = np.diag(spc.gibbs_state(e, 1.7))
    assert spc.fit_gibbs_temperature(rho, e) == pytest.approx(1.7, rel=1e-10)


def test_pairs_artificial_duplicate():
    lam = np.array([0, -0.1 + 1j, -0.3])
    eig = np.concatenate([lam, lam])
    sec = np.array([1, 1, 1, -1, -1, -1])
    p = lm.ModelParams(S=0.5, coupling=0.0, gamma=0.0, T=1.0)
    dummy = lm.lindblad_superoperator(p)
    res = spc.SpectrumResult(eig, np.zeros((4, 6)), sec, dummy)
    assert len(spc.detect_pairs(res, tol=0.0)) == 3


def test_pairs_structure_symmetric_vs_broken():
    # symmetric phase: no cross-sector pairs
    assert len(spc.detect_pairs(restricted_spectrum(300, 51, 0.5), tol=1e-4)) == 0


def test_broken_phase_pairs():
    report = spc.detect_pairs(restricted_spectrum(300, 51, 2.0), tol=1e-3)
    assert len(report) >= 4
    assert max(d for _, _, d in report.pairs) < 1e-3


def test_symmetric_phase_leading_eigenvalues_componentwise():
    spec = restricted_spectrum(300, 71, 0.5)
    lam = spec.eigenvalues[spec.reported()]
    lam = lam[np.abs(lam) > 1e-8][:10]
    table = np.array([l for d, n, l in hp.eigenvalue_table(0.5, 0.2, 13, 7) if d >= 0 and abs(l) > 0])
    cost = np.abs(lam[:, None] - table[None, :]) / np.abs(table[None, :])
    r, c = linear_sum_assignment(cost)
    a = table[c]
    assert np.all(np.abs(lam[r].real - a.real) <= 0.1 * np.abs(a.real))
    nonzero = a.imag != 0
    assert np.all(np.abs(lam[r].imag - a.imag)[nonzero] <= 0.1 * np.abs(a.imag[nonzero]))
    assert np.all(np.abs(lam[r].imag)[~nonzero] <= 0.1 * np.abs(a[~nonzero]))


def test_gap_scan_small_coupling_and_broken_trend():
    template = lm.ModelParams(S=200, coupling=0.2, gamma=0.005, T=4.0)
    rows = spc.gap_scan(template, [0.2, 2.5], K=30)
    assert rows[0].lambda_plus_1.real == pytest.approx(-0.005, rel=0.05)
    assert abs(rows[1].lambda_minus_0.imag) < 1e-10
    assert -1e-8 < rows[1].lambda_minus_0.real <= 1e-12
    with pytest.raises(InvalidParameterError):
        spc.gap_scan(template, [], K=10)


def test_gap_scan_unitary():
    template = lm.ModelParams(S=6, coupling=0.5, gamma=0.0, T=4.0)
    rows = spc.gap_scan(template, [0.5, 1.5], K=13)
    for r in rows:
        assert abs(r.lambda_plus_1.real) < 1e-10 and abs(r.lambda_minus_0.real) < 1e-10


def test_sx_basis_diagonal_cases():
    S = 3
    sx = sa.spin_operators(S)[0]
    w, v = np.linalg.eigh(sx)
    rho = np.outer(v[:, 4], v[:, 4].conj())
    vals, weights = spc.sx_basis_diagonal(rho, S)
    np.testing.assert_allclose(vals, np.arange(-3, 4), atol=1e-12)
    np.testing.assert_allclose(weights, np.eye(7)[4], atol=1e-12)
    _, weights = spc.sx_basis_diagonal(np.eye(7) / 7, S)
    np.testing.assert_allclose(weights, np.full(7, 1 / 7), atol=1e-14)


@pytest.fixture(scope="module")
def broken_s40():
    return restricted_spectrum(40, 40, 2.6)


def test_broken_phase_stationary_double_peak(broken_s40):
    rho = spc.stationary_state(broken_s40)
    sx, w = spc.sx_basis_diagonal(rho, 40)
    np.testing.assert_allclose(w, w[::-1], atol=1e-12)
    peak = sx[np.argmax(w)] / 40
    assert abs(abs(peak) - np.sqrt(1 - 1 / 2.6**2)) < 0.1 * 0.923


def test_broken_combination_single_positive_peak(broken_s40):
    rho_b = spc.symmetry_broken_state(broken_s40, 40)
    sx, w = spc.sx_basis_diagonal(rho_b, 40)
    assert sx[np.argmax(w)] > 0
    assert -1e-10 <= np.linalg.eigvalsh(rho_b)[0] <= 1e-8
    assert np.trace(rho_b).real == pytest.approx(1.0)


def test_broken_combination_edge_cases():
    rho = np.diag([0.5, 0.3, 0.2]).astype(complex)
    assert np.allclose(spc.symmetry_broken_combination(rho, np.zeros((3, 3))), rho)
    with pytest.raises(InvalidParameterError):
        spc.symmetry_broken_combination(rho, np.eye(3))
    with pytest.raises(InvalidParameterError):
        spc.symmetry_broken_combination(np.diag([1.2, -0.2, 0]), np.diag([1, -1, 0]))
    out = spc.symmetry_broken_combination(rho, np.diag([1.0, -1.0, 0.0]))
    assert np.linalg.eigvalsh(out)[0] == pytest.approx(0.0, abs=1e-12)


def test_hermitian_part_removes_phase():
    a = np.diag([1.0, -1.0]) * np.exp(0.7j)
    np.testing.assert_allclose(spc.hermitian_part(a), np.diag([1.0, -1.0]), atol=1e-14)


def test_trace_distance():
    a = np.diag([1.0, 0.0])
    b = np.diag([0.0, 1.0])
    assert spc.trace_distance(a, b) == pytest.approx(1.0)
    assert spc.trace_distance(a, a) == 0
