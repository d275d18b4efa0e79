"""Closed-form large-S results from the Holstein-Primakoff bosonization.

The spin model is mapped onto a single bosonic mode ``b`` around the
semiclassical ground state, giving ``H_S = omega_b b^dag b + E0`` and a jump
operator ``L = sqrt(gamma) (B_+ b^dag + B_- b)``.  Everything below follows from
those two coefficients.

Conventions: ``h = 1``; the positive branch of the tilt angle is used in the
symmetry-broken phase.  Time-dependent results are only defined for the
symmetric phase (``Lambda < 1``, ``m_z = 1``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import CriticalPointError, CutoffError, InvalidParameterError, UnsupportedRegimeError

TAIL_TOL = 1e-10
DEFAULT_N_MAX = 64


@dataclass(frozen=True)
class HpParams:
    coupling: float
    temperature: float
    theta0: float
    m: tuple[float, float, float]
    omega_a: float
    gamma_a: float
    delta0_per_spin: float  # delta_0 = -S * delta0_per_spin + delta0_const
    delta0_const: float
    epsilon: float
    phi_b: float
    omega_b: float
    b_plus: float
    b_minus: float

    @property
    def m_x(self) -> float:
        return self.m[0]

    @property
    def m_z(self) -> float:
        return self.m[2]

    @property
    def symmetric(self) -> bool:
        return self.coupling < 1.0

    def delta0(self, S: float) -> float:
        return -S * self.delta0_per_spin + self.delta0_const

    def ground_energy(self, S: float) -> float:
        """``E0 = delta_0 + (omega_b - omega_a) / 2``."""
        return self.delta0(S) + 0.5 * (self.omega_b - self.omega_a)

    @property
    def ratio(self) -> float:
        """``B_+ / B_-``."""
        return self.b_plus / self.b_minus


def _check_coupling(coupling: float) -> None:
    if not np.isfinite(coupling) or coupling < 0:
        raise InvalidParameterError(f"coupling must be >= 0, got {coupling!r}")


def _check_temperature(T: float) -> None:
    if not np.isfinite(T) or T <= 0:
        raise InvalidParameterError(f"temperature must be > 0, got {T!r}")


def semiclassical_magnetization(coupling: float) -> tuple[float, tuple[float, float, float]]:
    """Tilt angle and unit magnetization of the large-S ground state."""
    _check_coupling(coupling)
    theta0 = 0.0 if coupling < 1.0 else math.acos(1.0 / coupling)
    return theta0, (math.sin(theta0), 0.0, math.cos(theta0))


def mode_frequency(coupling: float) -> float:
    _check_coupling(coupling)
    if coupling == 1.0:
        raise CriticalPointError("omega_b vanishes at the critical point Lambda = 1")
    return math.sqrt(1.0 - coupling) if coupling < 1.0 else math.sqrt(coupling**2 - 1.0)


def jump_coefficients(m_z: float, omega_b: float, T: float) -> tuple[float, float]:
    """Simplified ``(B_+, B_-)`` valid in both phases."""
    x = math.sqrt(T / omega_b)
    y = 0.25 * math.sqrt(omega_b / T)
    s = math.sqrt(m_z)
    return s * (x - y), s * (x + y)


def jump_coefficients_unsimplified(m_z: float, phi_b: float, T: float) -> tuple[float, float]:
    """``(B_+, B_-)`` straight from the Bogoliubov rotation of the jump operator."""
    sh, ch = math.sinh(phi_b / 2), math.cosh(phi_b / 2)
    pref = 1.0 / (4.0 * math.sqrt(T))
    b_plus = pref * ((4 * m_z * T + 1) * sh + (4 * m_z * T - 1) * ch)
    b_minus = pref * ((4 * m_z * T - 1) * sh + (4 * m_z * T + 1) * ch)
    return b_plus, b_minus


def hp_params(coupling: float, T: float) -> HpParams:
    """All derived scalars for coupling ``Lambda`` and bath temperature ``T``.

    Raises CriticalPointError at ``Lambda == 1``.
    """
    _check_temperature(T)
    omega_b = mode_frequency(coupling)
    theta0, m = semiclassical_magnetization(coupling)
    m_x, _, m_z = m
    omega_a = m_z + coupling - 1.5 * m_z**2 * coupling
    gamma_a = -0.25 * m_z**2 * coupling
    eps = -2.0 * gamma_a / omega_a
    b_plus, b_minus = jump_coefficients(m_z, omega_b, T)
    return HpParams(
        coupling=float(coupling),
        temperature=float(T),
        theta0=theta0,
        m=m,
        omega_a=omega_a,
        gamma_a=gamma_a,
        delta0_per_spin=m_z + 0.5 * coupling * m_x**2,
        delta0_const=-0.25 * coupling * m_z**2,
        epsilon=eps,
        phi_b=math.atanh(eps),
        omega_b=omega_b,
        b_plus=b_plus,
        b_minus=b_minus,
    )


def liouvillian_eigenvalue(delta: int, n: int, coupling: float, gamma: float) -> complex:
    """Weak-dissipation eigenvalue ``i omega_b Delta - (m_z gamma / 2)(|Delta| + 2n)``."""
    if n < 0:
        raise InvalidParameterError("n must be non-negative")
    omega_b = mode_frequency(coupling)
    _, (_, _, m_z) = semiclassical_magnetization(coupling)
    return complex(-0.5 * m_z * gamma * (abs(delta) + 2 * n), omega_b * delta)


def eigenvalue_table(coupling: float, gamma: float, max_delta: int, max_n: int) -> list[tuple[int, int, complex]]:
    """``(Delta, n, lambda)`` for ``|Delta| <= max_delta``, ``n <= max_n``."""
    return [
        (d, n, liouvillian_eigenvalue(d, n, coupling, gamma))
        for d in range(-max_delta, max_delta + 1)
        for n in range(max_n + 1)
    ]


def stationary_temperature(coupling: float, T: float) -> tuple[float, float]:
    """Effective temperature of the stationary state: ``(exact, three-term series)``."""
    p = hp_params(coupling, T)
    if 4.0 * T <= p.omega_b:
        raise InvalidParameterError("stationary temperature requires 4T > omega_b")
    exact = -p.omega_b / (2.0 * math.log(p.ratio))
    r = p.omega_b / T
    series = T * (1.0 - r**2 / 48.0 - r**4 / 2880.0)
    return exact, series


def occupation_ratio(coupling: float, T: float) -> float:
    """Geometric ratio ``(B_+/B_-)^2 = exp(-omega_b / T_ss)`` of the stationary Fock weights."""
    return hp_params(coupling, T).ratio ** 2


def _thermal_diagonal(x: float, n_max: int) -> np.ndarray:
    if n_max < 0:
        raise InvalidParameterError("n_max must be non-negative")
    if x <= 0.0:
        w = np.zeros(n_max + 1)
        w[0] = 1.0
        return w
    tail = x ** (n_max + 1)
    if tail > TAIL_TOL:
        raise CutoffError(f"Fock cutoff n_max={n_max} leaves tail mass {tail:.2e} > {TAIL_TOL:.0e}")
    w = x ** np.arange(n_max + 1)
    return w / w.sum()


def hp_stationary_state(coupling: float, T: float, n_max: int = DEFAULT_N_MAX) -> np.ndarray:
    """Stationary density matrix in the b-boson Fock basis (diagonal, geometric)."""
    x = occupation_ratio(coupling, T)
    if not x < 1.0:
        raise InvalidParameterError("(B_+/B_-)^2 must be < 1")
    return np.diag(_thermal_diagonal(x, n_max)).astype(complex)


# ---------------------------------------------------------------------------
# time-dependent solution (symmetric phase)


@dataclass(frozen=True)
class Su11Factors:
    psi: float
    theta_prime: float
    theta_second: float
    a_plus: float
    a_zero: float


def _symmetric_params(coupling: float, T: float) -> HpParams:
    _check_coupling(coupling)
    if coupling >= 1.0:
        raise UnsupportedRegimeError("closed-form dynamics are only available in the symmetric phase (Lambda < 1)")
    return hp_params(coupling, T)


def a_plus(p: HpParams, gamma: float, t: float, numerator: str = "squared") -> float:
    """Disentangling coefficient ``A_+(t)`` of ``exp(t gamma L'_Delta)``.

    ``numerator="squared"`` uses ``B_+^2``, whose long-time limit is the
    stationary ratio ``(B_+/B_-)^2``.  ``"linear"`` uses ``B_+`` and is kept for
    the comparison against the bosonic oracle.
    """
    if numerator == "squared":
        num = p.b_plus**2
    elif numerator == "linear":
        num = p.b_plus
    else:
        raise InvalidParameterError(f"unknown numerator {numerator!r}")
    if t <= 0.0 or gamma == 0.0:
        return 0.0
    rate = p.m_z * gamma * t
    # m_z / (e^rate - 1), stable for small and large rate
    inv = p.m_z / math.expm1(rate) if rate < 700 else 0.0
    return num / (p.b_minus**2 + inv)


def su11_factors(
    coupling: float,
    T: float,
    gamma: float,
    t: float,
    theta: float,
    S: float,
    numerator: str = "squared",
) -> Su11Factors:
    p = _symmetric_params(coupling, T)
    psi = math.atanh(2 * p.b_plus * p.b_minus / (p.b_plus**2 + p.b_minus**2))
    theta_p = theta * math.sqrt(S / 2.0) * math.exp(-p.phi_b / 2.0)
    ap = a_plus(p, gamma, t, numerator)
    return Su11Factors(
        psi=psi,
        theta_prime=theta_p,
        theta_second=theta_p * math.exp(-p.m_z * gamma * t / 2.0),
        a_plus=ap,
        a_zero=math.exp(-p.m_z * gamma * t / 2.0) * (1.0 - ap),
    )


def inverse_temperature_t(coupling: float, T: float, gamma: float, t: float) -> float:
    """``1/T_S(t)`` of the thermal factor; ``inf`` at ``t = 0``.

    Uses ``1/T_S = ln[(e^{+omega_b/T_ss} - e^{-gamma t}) / (1 - e^{-gamma t})] / omega_b``,
    which is equivalent to ``exp(-omega_b/T_S) = A_+(t)``.
    """
    p = _symmetric_params(coupling, T)
    if t < 0:
        raise InvalidParameterError("t must be >= 0")
    if t == 0.0 or gamma == 0.0:
        return math.inf
    x_inf = p.ratio**2
    q = math.exp(-gamma * t)
    return math.log((1.0 / x_inf - q) / (-math.expm1(-gamma * t))) / p.omega_b


def temperature_t(coupling: float, T: float, gamma: float, t: float) -> float:
    beta = inverse_temperature_t(coupling, T, gamma, t)
    return 0.0 if math.isinf(beta) else 1.0 / beta


def _bose(omega: float, beta: float) -> float:
    if math.isinf(beta):
        return 0.0
    return 1.0 / math.expm1(omega * beta)


def energy_expectation_hp(
    coupling: float, T: float, gamma: float, t: float, theta: float, S: float
) -> tuple[float, float]:
    """``<H_S>/S`` at time ``t``: ``(with 1/S corrections, S -> infinity limit)``."""
    p = _symmetric_params(coupling, T)
    beta = inverse_temperature_t(coupling, T, gamma, t)
    kick = 0.5 * theta**2 * p.omega_b * math.exp(-gamma * t - p.phi_b)
    full = p.ground_energy(S) / S + kick + p.omega_b * _bose(p.omega_b, beta) / S
    return full, -p.delta0_per_spin + kick


def magnetization_hp(
    coupling: float, T: float, gamma: float, t: float, theta: float, S: float
) -> tuple[float, float, float]:
    p = _symmetric_params(coupling, T)
    w, phi = p.omega_b, p.phi_b
    env = math.exp(-gamma * t / 2.0)
    mx = theta * env * math.cos(w * t)
    my = -theta * env * math.exp(-phi) * math.sin(w * t)
    n_th = _bose(w, inverse_temperature_t(coupling, T, gamma, t))
    mz = (
        1.0
        - 0.5 * theta**2 * math.exp(-gamma * t - phi) * (math.cosh(phi) + math.cos(2 * w * t) * math.sinh(phi))
        - (math.sinh(phi / 2) ** 2 + math.cosh(phi) * n_th) / S
    )
    return mx, my, mz


def _fock_ops(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n + 1, dtype=float)), 1).astype(complex)


def displacement(alpha: complex, n_max: int) -> np.ndarray:
    b = _fock_ops(n_max + 1)[: n_max + 1, : n_max + 1]
    return la.expm(alpha * b.conj().T - np.conj(alpha) * b)


def evolved_state_hp(
    coupling: float,
    T: float,
    gamma: float,
    t: float,
    theta: float,
    S: float,
    n_max: int = DEFAULT_N_MAX,
) -> np.ndarray:
    """``rho(t) = D(alpha) rho_th(T_S(t)) D(alpha)^dag`` in the b-boson Fock basis.

    ``alpha = theta' exp(-gamma t / 2 - i omega_b t)`` is the coherent amplitude
    of the rotated initial state.  The displacement is built on an enlarged
    space and cropped; a CutoffError is raised if more than ``1e-10`` of the
    weight falls outside ``n <= n_max``.
    """
    p = _symmetric_params(coupling, T)
    f = su11_factors(coupling, T, gamma, t, theta, S)
    beta = inverse_temperature_t(coupling, T, gamma, t)
    x = 0.0 if math.isinf(beta) else math.exp(-p.omega_b * beta)
    alpha = f.theta_second * complex(math.cos(p.omega_b * t), -math.sin(p.omega_b * t))
    margin = max(32, int(4 * abs(alpha) ** 2) + 32)
    big = n_max + margin
    rho_th = np.diag(_thermal_diagonal(x, big)).astype(complex)
    d = displacement(alpha, big + 16)[: big + 1, : big + 1]
    rho = d @ rho_th @ d.conj().T
    rho = rho[: n_max + 1, : n_max + 1]
    tail = 1.0 - rho.trace().real
    if tail > TAIL_TOL:
        raise CutoffError(f"n_max={n_max} leaves tail mass {tail:.2e}")
    rho = 0.5 * (rho + rho.conj().T)
    return rho / rho.trace().real
