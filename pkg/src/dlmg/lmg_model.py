"""Dissipative LMG model: operators, Lindblad action and superoperators.

Vectorization is row-major: ``rho[i, j]`` sits at flat index ``i * d + j``, so
that ``vec(A rho B) = (A kron B^T) vec(rho)``.  This is ``rho.reshape(-1)`` in
numpy and is never configurable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from . import spin_algebra as sa
from .errors import ConvergenceError, InvalidParameterError, TooLargeError

DEFAULT_MAX_DIM2 = 4096
DEFAULT_MAX_RESTRICTED_DIM2 = 10404


@dataclass(frozen=True)
class ModelParams:
    """Physical inputs with ``h = 1``."""

    S: float
    coupling: float
    gamma: float
    T: float

    def __post_init__(self) -> None:
        sa.check_spin(self.S)
        if not (math.isfinite(self.coupling) and self.coupling >= 0):
            raise InvalidParameterError(f"coupling must be >= 0, got {self.coupling!r}")
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise InvalidParameterError(f"gamma must be >= 0, got {self.gamma!r}")
        if not (math.isfinite(self.T) and self.T > 0):
            raise InvalidParameterError(f"temperature must be > 0, got {self.T!r}")

    @property
    def dim(self) -> int:
        return sa.dimension(self.S)


# ---------------------------------------------------------------------------
# operators from spin matrices


def _hamiltonian_system(p: ModelParams, sx: np.ndarray, sz: np.ndarray) -> np.ndarray:
    return -(p.coupling / (2.0 * p.S)) * (sx @ sx) - sz


def _hamiltonian_gamma(p: ModelParams, sx: np.ndarray, sy: np.ndarray) -> np.ndarray:
    return (p.gamma / (4.0 * p.S)) * (sx @ sy + sy @ sx)


def _jump(p: ModelParams, sx: np.ndarray, sy: np.ndarray) -> np.ndarray:
    return math.sqrt(2.0 * p.gamma * p.T / p.S) * (sx + (1j / (4.0 * p.T)) * sy)


def hamiltonian_system(params: ModelParams) -> np.ndarray:
    """``H_S = -(Lambda / 2S) S_x^2 - S_z``."""
    sx, _, sz = sa.spin_operators(params.S)
    return _hamiltonian_system(params, sx, sz)


def hamiltonian_gamma(params: ModelParams) -> np.ndarray:
    """Dissipation-induced Hamiltonian ``(gamma / 4S) {S_x, S_y}``."""
    sx, sy, _ = sa.spin_operators(params.S)
    return _hamiltonian_gamma(params, sx, sy)


def jump_operator(params: ModelParams) -> np.ndarray:
    """``L = sqrt(2 gamma T / S) (S_x + i S_y / 4T)``."""
    sx, sy, _ = sa.spin_operators(params.S)
    return _jump(params, sx, sy)


@dataclass
class Lindbladian:
    """Lindblad generator given by a Hamiltonian and a single jump operator.

    ``apply`` evaluates ``i[rho, H] + L rho L^dag - {L^dag L, rho}/2`` with
    matrix products only, as ``G rho + rho G^dag + L rho L^dag`` where
    ``G = -iH - L^dag L / 2``.
    """

    hamiltonian: np.ndarray
    jump: np.ndarray
    _g: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        h, l = np.asarray(self.hamiltonian, complex), np.asarray(self.jump, complex)
        if h.shape != l.shape or h.ndim != 2 or h.shape[0] != h.shape[1]:
            raise InvalidParameterError("Hamiltonian and jump operator must be square and of equal shape")
        self.hamiltonian, self.jump = h, l
        self._g = -1j * h - 0.5 * (l.conj().T @ l)

    @classmethod
    def from_params(cls, params: ModelParams) -> "Lindbladian":
        sx, sy, sz = sa.spin_operators(params.S)
        h = _hamiltonian_system(params, sx, sz) + _hamiltonian_gamma(params, sx, sy)
        return cls(h, _jump(params, sx, sy))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @property
    def generator(self) -> np.ndarray:
        """``G = -iH - L^dag L / 2``."""
        return self._g

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho)
        if rho.shape != (self.dim, self.dim):
            raise InvalidParameterError(f"expected a {self.dim}x{self.dim} matrix, got shape {rho.shape}")
        l = self.jump
        return self._g @ rho + rho @ self._g.conj().T + l @ rho @ l.conj().T

    def superoperator(self, indices: np.ndarray | None = None) -> np.ndarray:
        return _assemble(self.hamiltonian, self.jump, indices)


def lindblad_action(params: ModelParams, rho: np.ndarray) -> np.ndarray:
    return Lindbladian.from_params(params).apply(rho)


# ---------------------------------------------------------------------------
# superoperators


@dataclass
class SuperOperator:
    """Dense matrix acting on row-major vectorized ``dim x dim`` matrices.

    ``indices`` lists the flat indices kept when the matrix acts on a subset of
    matrix units; ``None`` means all ``dim**2``.  ``basis`` is set for
    superoperators living in a restricted energy eigenbasis.
    """

    matrix: np.ndarray
    dim: int
    indices: np.ndarray | None = None
    basis: "RestrictedBasis | None" = None

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def flat_indices(self) -> np.ndarray:
        return np.arange(self.dim**2) if self.indices is None else self.indices

    def vector_to_matrix(self, v: np.ndarray) -> np.ndarray:
        """Scatter a vector of this superoperator's space back into a ``dim x dim`` matrix."""
        full = np.zeros(self.dim**2, dtype=complex)
        full[self.flat_indices()] = v
        return full.reshape(self.dim, self.dim)

    def matrix_to_vector(self, rho: np.ndarray) -> np.ndarray:
        return np.asarray(rho, complex).reshape(-1)[self.flat_indices()]

    def to_spin_basis(self, rho: np.ndarray) -> np.ndarray:
        """Map a ``dim x dim`` matrix of this space into the spin S_z basis."""
        return rho if self.basis is None else self.basis.embed(rho)


def _assemble(h: np.ndarray, l: np.ndarray, indices: np.ndarray | None = None, block: int = 1 << 22) -> np.ndarray:
    """Lindbladian matrix on the selected flat indices, built in row blocks."""
    d = h.shape[0]
    idx = np.arange(d * d) if indices is None else np.asarray(indices)
    ii, jj = np.divmod(idx, d)
    eye = np.eye(d)
    ld = l.conj().T
    ldl = ld @ l
    # (A kron B^T)[(i,j),(k,l)] = A[i,k] * B[l,j]
    terms = (
        (-1j * h - 0.5 * ldl, eye.T),
        (eye, (1j * h - 0.5 * ldl).T),
        (l, ld.T),
    )
    n = idx.size
    out = np.empty((n, n), dtype=complex)
    rows = max(1, block // max(n, 1))
    for start in range(0, n, rows):
        sl = slice(start, start + rows)
        acc = np.zeros((len(ii[sl]), n), dtype=complex)
        for a, bt in terms:
            acc += a[np.ix_(ii[sl], ii)] * bt[np.ix_(jj[sl], jj)]
        out[sl] = acc
    return out


def lindblad_superoperator(params: ModelParams, max_dim2: int = DEFAULT_MAX_DIM2) -> SuperOperator:
    """Full ``d^2 x d^2`` Lindbladian.

    Raises TooLargeError above ``max_dim2``; use :func:`restricted_superoperator`
    for larger spins.
    """
    d = params.dim
    if d * d > max_dim2:
        raise TooLargeError(
            f"full superoperator would be {d * d}x{d * d} (> {max_dim2}); use restricted_superoperator"
        )
    return SuperOperator(Lindbladian.from_params(params).superoperator(), d)


def parity_superoperator(S: float) -> SuperOperator:
    """``Ad_P rho = P^dag rho P`` as a diagonal ``+-1`` matrix."""
    lab = sa.parity_labels(S)
    return SuperOperator(np.diag(np.outer(lab, lab).reshape(-1).astype(complex)), sa.dimension(S))


# ---------------------------------------------------------------------------
# restriction to low-energy eigenstates of H_S


@dataclass
class RestrictedBasis:
    """Lowest ``K`` eigenstates of ``H_S``, each of definite parity."""

    S: float
    vectors: np.ndarray  # (d, K) real, columns are eigenvectors
    energies: np.ndarray
    parities: np.ndarray  # +-1, relative to the sector holding |S,S>
    indices: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.vectors.shape[1]

    def embed(self, rho: np.ndarray) -> np.ndarray:
        v = self.vectors
        return v @ rho @ v.T

    def project(self, op: np.ndarray) -> np.ndarray:
        v = self.vectors
        return v.T @ op @ v

    def parity_superoperator(self) -> SuperOperator:
        lab = np.outer(self.parities, self.parities).reshape(-1)
        if self.indices is not None:
            lab = lab[self.indices]
        return SuperOperator(np.diag(lab.astype(complex)), self.size, self.indices, self)


def _sector_tridiagonal(params: ModelParams, sector: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Diagonal/off-diagonal of H_S within one parity sector, plus its basis indices."""
    S = float(params.S)
    m = sa.magnetic_numbers(S)
    d = m.size
    idx = np.arange(sector, d, 2)
    c = np.sqrt(S * (S + 1.0) - m[1:] * (m[1:] + 1.0))  # <m+1|S_+|m>, length d-1
    # Sx^2 = (S+^2 + S-^2 + S+S- + S-S+)/4
    diag_sx2 = 0.5 * (S * (S + 1.0) - m**2)
    # <k|S+^2|k+2> = c[k] * c[k+1]
    off_sx2 = 0.25 * c[:-1] * c[1:]
    a = -(params.coupling / (2.0 * S))
    diag = a * diag_sx2[idx] - m[idx]
    off = a * off_sx2[idx[:-1]]
    return diag, off, idx


def restricted_basis(params: ModelParams, K: int) -> RestrictedBasis:
    """Lowest ``K`` eigenstates of H_S, diagonalized sector by sector.

    H_S connects ``m`` to ``m +- 2`` only, so each parity sector is a symmetric
    tridiagonal problem.  Diagonalizing the sectors separately keeps the
    quasi-degenerate pairs of the broken phase from mixing.
    """
    d = params.dim
    if not 1 <= K <= d:
        raise InvalidParameterError(f"K must satisfy 1 <= K <= {d}, got {K}")
    energies, vecs, labels = [], [], []
    for sector, label in ((0, 1), (1, -1)):
        diag, off, idx = _sector_tridiagonal(params, sector)
        if idx.size == 0:
            continue
        k = min(K, idx.size)
        try:
            if idx.size == 1:
                w, v = diag.copy(), np.ones((1, 1))
            else:
                w, v = la.eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1))
        except la.LinAlgError as exc:  # pragma: no cover - LAPACK failure
            raise ConvergenceError(f"tridiagonal eigensolve failed: {exc}") from exc
        full = np.zeros((d, k))
        full[idx] = v
        energies.append(w)
        vecs.append(full)
        labels.append(np.full(k, label))
    energies = np.concatenate(energies)
    order = np.argsort(energies, kind="stable")[:K]
    return RestrictedBasis(
        S=params.S,
        vectors=np.concatenate(vecs, axis=1)[:, order],
        energies=energies[order],
        parities=np.concatenate(labels)[order],
    )


def _project_spin(basis: RestrictedBasis) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    s_plus, s_minus = sa.ladder_sparse(basis.S)
    v = basis.vectors
    sp_v = v.T @ (s_plus @ v)
    sm_v = v.T @ (s_minus @ v)
    sz_v = v.T @ (sa.magnetic_numbers(basis.S)[:, None] * v)
    return 0.5 * (sp_v + sm_v) + 0j, -0.5j * (sp_v - sm_v), sz_v + 0j


def band_indices(energies: np.ndarray, window: float) -> np.ndarray:
    """Flat indices of matrix units ``|i><j|`` with ``|E_i - E_j| <= window``."""
    e = np.asarray(energies)
    mask = np.abs(e[:, None] - e[None, :]) <= window
    return np.flatnonzero(mask.reshape(-1))


def restricted_superoperator(
    params: ModelParams,
    K: int,
    delta_max: float | None = None,
    max_dim2: int = DEFAULT_MAX_RESTRICTED_DIM2,
) -> tuple[SuperOperator, RestrictedBasis]:
    """Lindbladian restricted to the ``K`` lowest eigenstates of H_S.

    S_x, S_y, S_z are projected onto the subspace and H_S, H_gamma and L are
    rebuilt from the projected matrices, so the result is itself a Lindbladian
    on a ``K``-level system.  With ``delta_max`` the matrix is further restricted
    to matrix units whose unitary frequency satisfies
    ``|E_i - E_j| <= delta_max * omega_b`` (``omega_b`` the harmonic frequency
    of the phase; the smallest non-zero level spacing is used at ``Lambda = 1``).
    """
    basis = restricted_basis(params, K)
    indices = None
    if delta_max is not None:
        if delta_max <= 0:
            raise InvalidParameterError("delta_max must be positive")
        indices = band_indices(basis.energies, delta_max * _gap_scale(params, basis))
    n = K * K if indices is None else indices.size
    if n > max_dim2:
        raise TooLargeError(f"restricted superoperator would be {n}x{n} (> {max_dim2})")
    basis.indices = indices
    lind = restricted_lindbladian(params, basis)
    return SuperOperator(lind.superoperator(indices), K, indices, basis), basis


def restricted_lindbladian(params: ModelParams, basis: RestrictedBasis) -> Lindbladian:
    sx, sy, sz = _project_spin(basis)
    h = _hamiltonian_system(params, sx, sz) + _hamiltonian_gamma(params, sx, sy)
    return Lindbladian(h, _jump(params, sx, sy))


def _gap_scale(params: ModelParams, basis: RestrictedBasis) -> float:
    lam = params.coupling
    if lam != 1.0:
        return math.sqrt(abs(1.0 - lam * lam)) if lam > 1.0 else math.sqrt(1.0 - lam)
    gaps = np.diff(basis.energies)
    gaps = gaps[gaps > 1e-12]
    return float(gaps.min()) if gaps.size else 1.0


def sparse_generator(params: ModelParams) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Banded ``(G, L)`` with ``G = -i(H_S + H_gamma) - L^dag L / 2`` in the S_z basis."""
    s_plus, s_minus = sa.ladder_sparse(params.S)
    sx = 0.5 * (s_plus + s_minus)
    sy = -0.5j * (s_plus - s_minus)
    sz = sp.diags(sa.magnetic_numbers(params.S))
    h = -(params.coupling / (2.0 * params.S)) * (sx @ sx) - sz
    h = h + (params.gamma / (4.0 * params.S)) * (sx @ sy + sy @ sx)
    l = math.sqrt(2.0 * params.gamma * params.T / params.S) * (sx + (1j / (4.0 * params.T)) * sy)
    g = -1j * h - 0.5 * (l.conj().T @ l)
    return sp.csr_matrix(g), sp.csr_matrix(l)
