"""Truncated-Fock reference implementation of the bosonized Lindbladian.

Single mode ``b`` with

    H = omega_b b^dag b + i (m_z gamma / 4) (b^dag b^dag - b b)
    L = sqrt(gamma) (B_+ b^dag + B_- b)

vectorized with the same row-major convention as the spin model, so that the
ket and bra sides act as two modes ``b_1 = b (x) 1`` and ``b_2 = 1 (x) b``.
Truncating ``b`` keeps the generator in Lindblad form, hence exactly trace
preserving.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import hp_analytic as hp
from .errors import ConvergenceError, CutoffError, InvalidParameterError
from .lmg_model import SuperOperator
from .spectral import SpectrumResult, diagonalize

MIN_N_MAX = 8
DEFAULT_N_MAX = 40
KERNEL_TOL = 1e-8


@dataclass(frozen=True)
class FockBasis:
    n_max: int

    def __post_init__(self) -> None:
        if int(self.n_max) != self.n_max or self.n_max < MIN_N_MAX:
            raise CutoffError(f"n_max must be an integer >= {MIN_N_MAX}, got {self.n_max!r}")

    @property
    def dim(self) -> int:
        return self.n_max + 1

    @property
    def vec_dim(self) -> int:
        return self.dim**2

    def annihilation(self) -> sp.csr_matrix:
        return sp.diags(np.sqrt(np.arange(1, self.dim, dtype=float)), 1, format="csr")

    def edge_excluded(self) -> int:
        """Highest total quantum number ``n_+ + n_-`` trusted in comparisons."""
        return self.n_max - self.n_max // 4


def mode_operators(coupling: float, gamma: float, T: float, n_max: int) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Truncated ``(H, L)`` of the bosonized model."""
    basis = FockBasis(n_max)
    p = hp.hp_params(coupling, T)
    b = basis.annihilation()
    bd = sp.csr_matrix(b.T)
    g = p.m_z * gamma
    h = p.omega_b * (bd @ b) + (0.25j * g) * (bd @ bd - b @ b)
    l = math.sqrt(gamma) * (p.b_plus * bd + p.b_minus * b)
    return sp.csr_matrix(h), sp.csr_matrix(l)


def _vectorized(h: sp.csr_matrix, l: sp.csr_matrix) -> sp.csr_matrix:
    n = h.shape[0]
    eye = sp.identity(n, format="csr")
    ldl = l.conj().T @ l
    g = -1j * h - 0.5 * ldl
    # vec(A rho B) = (A kron B^T) vec(rho)
    out = sp.kron(g, eye) + sp.kron(eye, g.conj()) + sp.kron(l, l.conj())
    return sp.csr_matrix(out)


def sparse_superoperator(coupling: float, gamma: float, T: float, n_max: int = DEFAULT_N_MAX) -> sp.csr_matrix:
    return _vectorized(*mode_operators(coupling, gamma, T, n_max))


def bosonic_superoperator(coupling: float, gamma: float, T: float, n_max: int = DEFAULT_N_MAX) -> SuperOperator:
    """Dense vectorized generator on the ``(n_max+1)^2`` space."""
    mat = sparse_superoperator(coupling, gamma, T, n_max).toarray()
    return SuperOperator(mat, n_max + 1)


def two_mode_superoperator(coupling: float, gamma: float, T: float, n_max: int = DEFAULT_N_MAX) -> sp.csr_matrix:
    """Unitary plus dissipative parts written directly in the two-mode form.

    ``U = i omega_b (b2^dag b2 - b1^dag b1) + (m_z gamma/4)(b1^dag^2 + b2^dag^2 - b1^2 - b2^2)``
    and ``D = L1 L2 - (L1^dag L1 + L2^dag L2)/2`` with ``L_i = sqrt(gamma)(B_+ b_i^dag + B_- b_i)``.
    """
    basis = FockBasis(n_max)
    p = hp.hp_params(coupling, T)
    b = basis.annihilation()
    eye = sp.identity(basis.dim, format="csr")
    b1, b2 = sp.kron(b, eye), sp.kron(eye, b)
    b1d, b2d = b1.T, b2.T
    g = p.m_z * gamma
    u = 1j * p.omega_b * (b2d @ b2 - b1d @ b1) + 0.25 * g * (b1d @ b1d + b2d @ b2d - b1 @ b1 - b2 @ b2)
    l1 = math.sqrt(gamma) * (p.b_plus * b1d + p.b_minus * b1)
    l2 = math.sqrt(gamma) * (p.b_plus * b2d + p.b_minus * b2)
    d = l1 @ l2 - 0.5 * (l1.T @ l1 + l2.T @ l2)
    return sp.csr_matrix(u + d)


def oracle_parity(n_max: int) -> SuperOperator:
    """``rho -> P rho P`` with ``P = (-1)^{b^dag b}``."""
    lab = (-1.0) ** np.arange(FockBasis(n_max).dim)
    return SuperOperator(np.diag(np.outer(lab, lab).reshape(-1).astype(complex)), n_max + 1)


def oracle_spectrum(coupling: float, gamma: float, T: float, n_max: int = DEFAULT_N_MAX) -> SpectrumResult:
    return diagonalize(bosonic_superoperator(coupling, gamma, T, n_max), oracle_parity(n_max))


def eigenvalues_near(
    coupling: float, gamma: float, T: float, n_max: int, targets: Sequence[complex]
) -> np.ndarray:
    """Eigenvalue closest to each target by sparse shift-invert (for large ``n_max``)."""
    a = sparse_superoperator(coupling, gamma, T, n_max).tocsc()
    out = []
    for z in targets:
        # a tiny offset keeps the shifted matrix non-singular when z is exact
        shift = complex(z) + 1e-7
        out.append(spla.eigs(a, k=1, sigma=shift, return_eigenvectors=False)[0])
    return np.array(out)


def match_eigenvalues(eigenvalues: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Distance from each target to the nearest eigenvalue."""
    lam = np.asarray(eigenvalues)
    return np.array([np.abs(lam - z).min() for z in np.asarray(targets)])


# ---------------------------------------------------------------------------
# stationary state and moments


def moments(rho: np.ndarray) -> dict[str, complex]:
    """``<b>``, ``<b b>``, ``<b^dag b>`` and the trace of a Fock-basis density matrix."""
    n = rho.shape[0] - 1
    b = FockBasis(max(n, MIN_N_MAX)).annihilation().toarray()[: n + 1, : n + 1]
    return {
        "b": complex(np.trace(b @ rho)),
        "bb": complex(np.trace(b @ b @ rho)),
        "bdb": complex(np.trace(b.T @ b @ rho)),
        "trace": complex(np.trace(rho)),
    }


@dataclass(frozen=True)
class OracleStationary:
    rho: np.ndarray
    n_mean: float
    bb: complex
    residual: float


def oracle_stationary(coupling: float, gamma: float, T: float, n_max: int = DEFAULT_N_MAX) -> OracleStationary:
    """Kernel of the truncated generator, normalized to unit trace.

    Solved as a sparse linear system with one equation replaced by the trace
    condition; a ConvergenceError is raised if the result is not a kernel
    vector to ``1e-8``.
    """
    a = sparse_superoperator(coupling, gamma, T, n_max).tolil()
    dim = n_max + 1
    trace_row = np.zeros(dim * dim)
    trace_row[:: dim + 1] = 1.0
    a[0, :] = trace_row
    rhs = np.zeros(dim * dim, complex)
    rhs[0] = 1.0
    try:
        x = spla.spsolve(a.tocsc(), rhs)
    except RuntimeError as exc:  # pragma: no cover - singular factorization
        raise ConvergenceError(f"stationary solve failed: {exc}") from exc
    full = sparse_superoperator(coupling, gamma, T, n_max)
    residual = float(np.abs(full @ x).max())
    if not np.all(np.isfinite(x)) or residual > KERNEL_TOL:
        raise ConvergenceError(f"no kernel vector within {KERNEL_TOL:g} (residual {residual:.3e})")
    rho = x.reshape(dim, dim)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    m = moments(rho)
    return OracleStationary(rho, m["bdb"].real, m["bb"], residual)


# ---------------------------------------------------------------------------
# time evolution


def coherent_state(alpha: complex, n_max: int, tail_tol: float = 1e-10) -> np.ndarray:
    """Normalized coherent-state vector; CutoffError if the truncated tail exceeds ``tail_tol``."""
    n = np.arange(n_max + 1)
    log_amp = -0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha) + 1e-300) - 0.5 * np.array([math.lgamma(k + 1) for k in n])
    psi = np.exp(log_amp) * np.exp(1j * n * np.angle(alpha))
    if alpha == 0:
        psi = np.zeros(n_max + 1, complex)
        psi[0] = 1.0
    tail = 1.0 - float(np.sum(np.abs(psi) ** 2))
    if tail > tail_tol:
        raise CutoffError(f"coherent amplitude {abs(alpha):.3g} needs more than n_max={n_max} (tail {tail:.2e})")
    return psi / np.linalg.norm(psi)


@dataclass(frozen=True)
class OracleTrajectory:
    times: np.ndarray
    n_mean: np.ndarray
    b_mean: np.ndarray
    t_eff: np.ndarray  # temperature of the fluctuation occupation <b^dag b> - |<b>|^2
    trace_err: np.ndarray


def _temperature_from_occupation(omega: float, n_th: float) -> float:
    if n_th <= 0:
        return 0.0
    return omega / math.log1p(1.0 / n_th)


def oracle_evolution(
    coupling: float,
    T: float,
    gamma: float,
    theta: float,
    S: float,
    t_grid: np.ndarray,
    n_max: int = DEFAULT_N_MAX,
) -> OracleTrajectory:
    """Propagate the coherent state ``theta' = theta sqrt(S/2) e^{-phi_b/2}`` exactly.

    Uses ``expm_multiply`` between consecutive grid points.  The cutoff must
    satisfy ``n_max >= |theta'|^2 + 8|theta'| + 16``.
    """
    p = hp._symmetric_params(coupling, T)
    t = np.asarray(t_grid, float)
    if t.ndim != 1 or t.size == 0 or t[0] < 0 or np.any(np.diff(t) <= 0):
        raise InvalidParameterError("t_grid must be non-negative and strictly increasing")
    alpha = theta * math.sqrt(S / 2.0) * math.exp(-p.phi_b / 2.0)
    if abs(alpha) ** 2 + 8 * abs(alpha) + 16 > n_max:
        raise CutoffError(f"n_max={n_max} too small for coherent amplitude {alpha:.3g}")
    psi = coherent_state(alpha, n_max)
    gen = sparse_superoperator(coupling, gamma, T, n_max).tocsc()
    v = np.outer(psi, psi.conj()).reshape(-1)
    dim = n_max + 1
    rows = []
    prev = 0.0
    for tk in t:
        if tk > prev:
            v = spla.expm_multiply(gen * (tk - prev), v)
            prev = tk
        m = moments(v.reshape(dim, dim))
        n_th = m["bdb"].real - abs(m["b"]) ** 2
        rows.append((m["bdb"].real, m["b"], _temperature_from_occupation(p.omega_b, n_th), abs(m["trace"] - 1)))
    n_mean, b_mean, t_eff, tr = (np.array(c) for c in zip(*rows))
    return OracleTrajectory(t, n_mean, b_mean.astype(complex), t_eff, tr)


def first_moment_exact(coupling: float, gamma: float, t: float, alpha0: complex) -> complex:
    """Exact ``<b>(t)`` of the quadratic model.

    ``d/dt (<b>, <b^dag>) = [[-i omega_b - g, g], [g, i omega_b - g]] (<b>, <b^dag>)``
    with ``g = m_z gamma / 2``; the eigenvalues are ``-2 beta_+-``.
    """
    omega = hp.mode_frequency(coupling)
    _, (_, _, m_z) = hp.semiclassical_magnetization(coupling)
    g = 0.5 * m_z * gamma
    a = np.array([[-1j * omega - g, g], [g, 1j * omega - g]])
    return complex((la.expm(a * t) @ np.array([alpha0, np.conj(alpha0)]))[0])


# ---------------------------------------------------------------------------
# secular population chain (Delta = 0 block of the weak-coupling generator)


def population_chain(coupling: float, T: float, gamma: float, n_max: int) -> sp.csr_matrix:
    """Birth-death generator for Fock populations: up-rate ``gamma B_+^2 (k+1)``, down-rate ``gamma B_-^2 k``."""
    if n_max < 1:
        raise InvalidParameterError("n_max must be >= 1")
    p = hp.hp_params(coupling, T)
    k = np.arange(n_max + 1, dtype=float)
    up = gamma * p.b_plus**2 * (k + 1)
    up[-1] = 0.0  # no transitions out of the truncated space
    down = gamma * p.b_minus**2 * k
    diag = -(up + down)
    return sp.csr_matrix(sp.diags([diag, down[1:], up[:-1]], [0, 1, -1]))


def chain_stationary(coupling: float, T: float, n_max: int) -> np.ndarray:
    """Normalized kernel of :func:`population_chain` via detailed balance."""
    p = hp.hp_params(coupling, T)
    k = np.arange(n_max)
    # p_{k+1} / p_k = up_k / down_{k+1} = B_+^2 (k+1) / (B_-^2 (k+1))
    log_ratio = np.log(p.b_plus**2 * (k + 1)) - np.log(p.b_minus**2 * (k + 1))
    logp = np.concatenate([[0.0], np.cumsum(log_ratio)])
    w = np.exp(logp - logp.max())
    return w / w.sum()


def chain_from_vacuum(coupling: float, T: float, gamma: float, t: float, n_max: int) -> np.ndarray:
    """Populations at time ``t`` starting from the vacuum."""
    p0 = np.zeros(n_max + 1)
    p0[0] = 1.0
    if t == 0:
        return p0
    return spla.expm_multiply(population_chain(coupling, T, gamma, n_max).tocsc() * t, p0)


def a_plus_disambiguation(coupling: float, T: float, n_max: int = 200) -> dict[str, float]:
    """``|lim A_+ - stationary Fock ratio|`` for both numerator variants.

    The stationary ratio comes from the population chain; the long-time limit
    of ``A_+`` is evaluated at ``m_z gamma t = 60``.
    """
    p = hp._symmetric_params(coupling, T)
    pop = chain_stationary(coupling, T, n_max)
    ratio = float(pop[1] / pop[0])
    out = {}
    for num in ("squared", "linear"):
        out[num] = abs(hp.a_plus(p, 1.0, 60.0 / p.m_z, num) - ratio)
    return out
