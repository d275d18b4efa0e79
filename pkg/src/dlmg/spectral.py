"""Spectra of Lindblad superoperators, parity sectors, stationary and metastable states."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
import scipy.optimize as so
import scipy.sparse as sp

from . import spin_algebra as sa
from .errors import ConvergenceError, InvalidParameterError, SectorMixingError
from .lmg_model import ModelParams, SuperOperator, restricted_superoperator

ZERO_TOL = 1e-8
MIXING_THRESHOLD = 0.9
DIRECT_MAX = 2000


@dataclass
class SpectrumResult:
    """Eigenpairs sorted by descending real part (ties: ascending ``|Im|``, then ``Im >= 0`` first).

    Eigenvectors are unit-norm columns in the vec space of ``superop``.  Both
    members of every conjugate pair are stored; the "disregard negative
    imaginary parts" convention is applied only by :meth:`reported`.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sector: np.ndarray
    superop: SuperOperator

    def __len__(self) -> int:
        return self.eigenvalues.size

    def matrix(self, k: int) -> np.ndarray:
        """Eigenvector ``k`` as a matrix in the superoperator's own basis."""
        return self.superop.vector_to_matrix(self.eigenvectors[:, k])

    def spin_matrix(self, k: int) -> np.ndarray:
        return self.superop.to_spin_basis(self.matrix(k))

    def reported(self, sector: int | None = None, tol: float = 1e-10) -> np.ndarray:
        """Indices with ``Im >= -tol`` (optionally one sector), in stored order."""
        lam = self.eigenvalues
        keep = lam.imag >= -tol * max(1.0, float(np.abs(lam).max(initial=0.0)))
        if sector is not None:
            keep &= self.sector == sector
        return np.flatnonzero(keep)


@dataclass(frozen=True)
class PairReport:
    pairs: tuple[tuple[int, int, float], ...]  # (index in K+, index in K-, |lambda+ - lambda-|)

    def __len__(self) -> int:
        return len(self.pairs)


def sort_order(eigenvalues: np.ndarray) -> np.ndarray:
    lam = np.asarray(eigenvalues)
    return np.lexsort((-lam.imag, np.abs(lam.imag), -lam.real))


# ---------------------------------------------------------------------------
# Hermitian operator basis: Lindbladians are real matrices there


def _hermitian_basis(flat: np.ndarray, d: int) -> sp.csr_matrix | None:
    """Unitary ``W`` whose columns are Hermitian matrix units over ``flat``.

    Returns None when ``flat`` is not closed under transposition ``(i,j)->(j,i)``.
    """
    pos = {int(f): n for n, f in enumerate(flat)}
    i, j = np.divmod(flat, d)
    rows, cols, vals = [], [], []
    col = 0
    r = 1.0 / math.sqrt(2.0)
    for n, (a, b) in enumerate(zip(i.tolist(), j.tolist())):
        if a == b:
            rows.append(n), cols.append(col), vals.append(1.0)
            col += 1
        elif a < b:
            m = pos.get(b * d + a)
            if m is None:
                return None
            rows += [n, m, n, m]
            cols += [col, col, col + 1, col + 1]
            vals += [r, r, 1j * r, -1j * r]
            col += 2
    if col != flat.size:
        return None
    return sp.csr_matrix((vals, (rows, cols)), shape=(flat.size, flat.size), dtype=complex)


def _eig_block(mat: np.ndarray, flat: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs of one block, through a real representation when possible."""
    w = _hermitian_basis(flat, d)
    if w is not None:
        left = np.asarray(w.conj().T @ mat)
        real_rep = np.asarray(w.T @ left.T).T
        scale = max(1.0, float(np.abs(real_rep).max(initial=0.0)))
        if np.abs(real_rep.imag).max(initial=0.0) <= 1e-11 * scale:
            try:
                lam, vec = np.linalg.eig(np.ascontiguousarray(real_rep.real))
            except np.linalg.LinAlgError as exc:
                raise ConvergenceError(f"eigensolver failed: {exc}") from exc
            return lam, np.asarray(w @ vec)
    try:
        return np.linalg.eig(mat)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"eigensolver failed: {exc}") from exc


def _sector_split(parity: np.ndarray) -> list[tuple[int, np.ndarray | None, np.ndarray]]:
    """``(label, projector columns or None, index mask)`` for the +1 and -1 eigenspaces."""
    off = parity - np.diag(np.diag(parity))
    if not np.any(np.abs(off) > 1e-12):
        lab = np.rint(np.diag(parity).real).astype(int)
        if not np.all(np.isin(lab, (-1, 1))):
            raise InvalidParameterError("parity superoperator must have eigenvalues +-1")
        return [(s, None, np.flatnonzero(lab == s)) for s in (1, -1)]
    w, q = np.linalg.eigh(0.5 * (parity + parity.conj().T))
    if np.abs(np.abs(w) - 1).max() > 1e-8:
        raise InvalidParameterError("parity superoperator must be involutory")
    return [(s, q[:, np.abs(w - s) < 0.5], np.array([], int)) for s in (1, -1)]


def _diagonalize_sectors(superop: SuperOperator, parity: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = superop.size
    flat = superop.flat_indices()
    lams, vecs, secs = [], [], []
    for label, q, idx in _sector_split(parity):
        if q is None:
            if idx.size == 0:
                continue
            lam, v = _eig_block(superop.matrix[np.ix_(idx, idx)], flat[idx], superop.dim)
            full = np.zeros((n, lam.size), dtype=complex)
            full[idx] = v
        else:
            if q.shape[1] == 0:
                continue
            lam, v = np.linalg.eig(q.conj().T @ superop.matrix @ q)
            full = q @ v
        lams.append(lam)
        vecs.append(full)
        secs.append(np.full(lam.size, label))
    return np.concatenate(lams), np.concatenate(vecs, axis=1), np.concatenate(secs)


def _diagonalize_direct(superop: SuperOperator, parity: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lam, vec = _eig_block(superop.matrix, superop.flat_indices(), superop.dim)
    pv = parity @ vec
    ratio = np.einsum("ij,ij->j", vec.conj(), pv).real / np.einsum("ij,ij->j", vec.conj(), vec).real
    if np.any(np.abs(ratio) < MIXING_THRESHOLD):
        raise SectorMixingError(f"{int(np.sum(np.abs(ratio) < MIXING_THRESHOLD))} eigenvectors mix parity sectors")
    return lam, vec, np.where(ratio > 0, 1, -1)


def diagonalize(superop: SuperOperator, parity: SuperOperator, method: str = "auto") -> SpectrumResult:
    """Full eigendecomposition with parity-sector labels.

    ``method="direct"`` diagonalizes the whole matrix and labels each vector by
    ``sign Re(v^dag Ad_P v / v^dag v)``; if any vector is mixed (``|ratio| <
    0.9``) the sector-projected path is used instead.  ``"sectors"`` always
    projects onto the ``Ad_P = +-1`` eigenspaces first; ``"auto"`` picks it for
    matrices larger than 2000.
    """
    if superop.matrix.shape != parity.matrix.shape:
        raise InvalidParameterError("superoperator and parity must have the same shape")
    p = parity.matrix
    diag = np.diag(p)
    if np.count_nonzero(p - np.diag(diag)) == 0:
        involutory = np.abs(diag * diag - 1).max(initial=0.0) <= 1e-8
    else:
        involutory = np.abs(p @ p - np.eye(p.shape[0])).max() <= 1e-8
    if not involutory:
        raise InvalidParameterError("parity superoperator is not involutory")
    if method not in ("auto", "direct", "sectors"):
        raise InvalidParameterError(f"unknown method {method!r}")
    if method == "sectors" or (method == "auto" and superop.size > DIRECT_MAX):
        lam, vec, sec = _diagonalize_sectors(superop, p)
    else:
        try:
            lam, vec, sec = _diagonalize_direct(superop, p)
        except SectorMixingError:
            lam, vec, sec = _diagonalize_sectors(superop, p)
    vec = vec / np.linalg.norm(vec, axis=0)
    order = sort_order(lam)
    return SpectrumResult(lam[order], vec[:, order], sec[order], superop)


# ---------------------------------------------------------------------------
# states


def hermitian_part(rho: np.ndarray) -> np.ndarray:
    """Remove the arbitrary global phase of an eigenmatrix, then Hermitize."""
    rho = np.asarray(rho, complex)
    z = np.trace(rho @ rho)
    if abs(z) > 0:
        rho = rho * np.exp(-0.5j * np.angle(z))
    return 0.5 * (rho + rho.conj().T)


def _normalized_density(rho: np.ndarray, neg_tol: float) -> np.ndarray:
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr) < 1e-300:
        raise ConvergenceError("kernel vector has zero trace")
    rho = rho / tr
    lo = np.linalg.eigvalsh(rho).min()
    if lo < -neg_tol:
        raise ConvergenceError(f"stationary state has negative eigenvalue {lo:.3e}")
    return rho


def stationary_index(result: SpectrumResult, tol: float = ZERO_TOL) -> int:
    zero = np.flatnonzero(np.abs(result.eigenvalues) < tol)
    if zero.size == 0:
        raise ConvergenceError(f"no eigenvalue within {tol:g} of zero")
    plus = zero[result.sector[zero] == 1]
    if zero.size > 1 and plus.size != 1:
        raise ConvergenceError(f"stationary state not unique: {zero.size} eigenvalues within {tol:g} of zero")
    return int(plus[0] if plus.size else zero[0])


def stationary_state(
    result: SpectrumResult, tol: float = ZERO_TOL, neg_tol: float = 1e-8, spin_basis: bool = True
) -> np.ndarray:
    """Kernel eigenvector as a unit-trace Hermitian matrix.

    When several eigenvalues lie within ``tol`` of zero the unique one in the
    even sector is used.  For restricted superoperators the state is embedded
    into the full spin basis unless ``spin_basis=False``.
    """
    rho = _normalized_density(result.matrix(stationary_index(result, tol)), neg_tol)
    return result.superop.to_spin_basis(rho) if spin_basis else rho


def sector_leading(result: SpectrumResult, sector: int, skip: int = 0) -> int:
    idx = result.reported(sector)
    if idx.size <= skip:
        raise ConvergenceError(f"sector {sector:+d} has fewer than {skip + 1} eigenvalues")
    return int(idx[skip])


def detect_pairs(result: SpectrumResult, tol: float = 1e-6, leading: int = 12) -> PairReport:
    """Greedy cross-sector matching of the ``leading`` eigenvalues of each sector."""
    plus = result.reported(1)[:leading]
    minus = result.reported(-1)[:leading]
    if plus.size == 0 or minus.size == 0:
        return PairReport(())
    lam = result.eigenvalues
    dist = np.abs(lam[plus][:, None] - lam[minus][None, :])
    pairs = []
    used_p, used_m = set(), set()
    for flat in np.argsort(dist, axis=None, kind="stable"):
        a, b = divmod(int(flat), minus.size)
        if dist[a, b] > tol:
            break
        if a in used_p or b in used_m:
            continue
        used_p.add(a), used_m.add(b)
        pairs.append((int(plus[a]), int(minus[b]), float(dist[a, b])))
    return PairReport(tuple(pairs))


@dataclass(frozen=True)
class GapRow:
    coupling: float
    lambda_plus_1: complex
    lambda_minus_0: complex


def gap_scan(
    template: ModelParams,
    couplings: Iterable[float],
    K: int,
    delta_max: float | None = None,
) -> list[GapRow]:
    """Leading non-stationary even eigenvalue and leading odd eigenvalue versus Lambda."""
    couplings = list(couplings)
    if not couplings:
        raise InvalidParameterError("coupling grid is empty")
    rows = []
    for lam in couplings:
        p = replace(template, coupling=float(lam))
        superop, basis = restricted_superoperator(p, K, delta_max)
        res = diagonalize(superop, basis.parity_superoperator())
        lp1 = res.eigenvalues[sector_leading(res, 1, skip=1)]
        lm0 = res.eigenvalues[sector_leading(res, -1)]
        rows.append(GapRow(float(lam), complex(lp1), complex(lm0)))
    return rows


def sx_basis_diagonal(rho: np.ndarray, S: float) -> tuple[np.ndarray, np.ndarray]:
    """``(S_x eigenvalues ascending, diagonal weights of rho in that basis)``."""
    sx, _, _ = sa.spin_operators(S)
    w, v = np.linalg.eigh(sx)
    weights = np.einsum("ij,ik,kj->j", v.conj(), np.asarray(rho), v).real
    return w, weights


def symmetry_broken_combination(
    rho_plus: np.ndarray,
    rho_minus: np.ndarray,
    orient: np.ndarray | None = None,
    trace_tol: float = 1e-8,
    neg_tol: float = 1e-10,
) -> np.ndarray:
    """``rho_+ + c rho_-`` with the largest real ``c >= 0`` keeping it positive.

    ``rho_minus`` is de-phased and Hermitized; if ``orient`` (e.g. S_x) is
    given, its sign is fixed so that ``Tr(orient rho_-) >= 0``.
    """
    rho_plus = 0.5 * (np.asarray(rho_plus) + np.asarray(rho_plus).conj().T)
    rho_minus = hermitian_part(rho_minus)
    norm = np.linalg.norm(rho_minus)
    if norm == 0.0:
        return rho_plus
    if abs(np.trace(rho_minus)) > trace_tol * max(1.0, norm):
        raise InvalidParameterError("rho_minus must be traceless")
    rho_minus = rho_minus / norm
    if orient is not None and np.trace(orient @ rho_minus).real < 0:
        rho_minus = -rho_minus

    def lowest(c: float) -> float:
        return float(np.linalg.eigvalsh(rho_plus + c * rho_minus)[0])

    floor = lowest(0.0)
    if floor < -neg_tol:
        raise InvalidParameterError("rho_plus must be positive semidefinite")
    # roundoff-level negative eigenvalues of rho_plus set the target floor
    floor = min(floor, 0.0)
    hi = 1.0
    while lowest(hi) > floor:
        hi *= 2.0
        if hi > 1e12:
            raise ConvergenceError("no finite weight makes the combination singular")
    c = so.brentq(lambda x: lowest(x) - floor, 0.0, hi, xtol=1e-15, rtol=1e-14)
    out = rho_plus + c * rho_minus
    return out / np.trace(out).real


def symmetry_broken_state(result: SpectrumResult, S: float) -> np.ndarray:
    """``rho_{+,0} + c rho_{-,0}`` oriented towards positive ``m_x``, in the spin basis.

    The combination is formed in the superoperator's own basis, where the
    restricted stationary state has full rank, and embedded afterwards.
    """
    rho_plus = stationary_state(result, spin_basis=False)
    rho_minus = result.matrix(sector_leading(result, -1))
    sx = sa.spin_operators(S)[0]
    basis = result.superop.basis
    orient = sx if basis is None else basis.project(sx)
    broken = symmetry_broken_combination(rho_plus, rho_minus, orient=orient)
    return result.superop.to_spin_basis(broken)


def gibbs_state(energies: np.ndarray, T: float) -> np.ndarray:
    e = np.asarray(energies, float)
    w = np.exp(-(e - e.min()) / T)
    return w / w.sum()


def fit_gibbs_temperature(rho_diag_energy: np.ndarray, energies: np.ndarray, bracket: Sequence[float] = (1e-3, 1e3)) -> float:
    """Temperature of the Gibbs state closest to ``rho`` in relative entropy.

    ``rho_diag_energy`` is the density matrix expressed in the eigenbasis of
    the Hamiltonian with spectrum ``energies``; minimizing ``S(rho || G_T)``
    over ``T`` reduces to matching the mean energy.
    """
    e = np.asarray(energies, float)
    target = float(np.real(np.diag(rho_diag_energy)) @ e)

    def excess(T: float) -> float:
        return float(gibbs_state(e, T) @ e) - target

    return so.brentq(excess, *bracket, xtol=1e-14)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    diff = np.asarray(a) - np.asarray(b)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))).sum())
