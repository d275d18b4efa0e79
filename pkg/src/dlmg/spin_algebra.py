"""Finite-dimensional spin-S matrices.

All operators are dense ``(2S+1, 2S+1)`` arrays in the S_z eigenbasis, ordered
``m = S, S-1, ..., -S`` so that index 0 is the stretched state ``|S, S>``.
Every other module in the package relies on this ordering.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import InvalidParameterError

_TOL = 1e-12


def check_spin(S: float) -> int:
    """Validate ``S`` and return ``2S`` as an integer."""
    two_s = 2.0 * float(S)
    if not np.isfinite(two_s):
        raise InvalidParameterError(f"spin quantum number must be finite, got {S!r}")
    n = int(round(two_s))
    if n < 1 or abs(two_s - n) > _TOL:
        raise InvalidParameterError(f"spin quantum number must be a positive half-integer, got {S!r}")
    return n


def dimension(S: float) -> int:
    return check_spin(S) + 1


def magnetic_numbers(S: float) -> np.ndarray:
    """Return the S_z eigenvalues in basis order (descending)."""
    n = check_spin(S)
    return 0.5 * n - np.arange(n + 1, dtype=float)


def _raising_offdiag(S: float) -> np.ndarray:
    # <m+1|S_+|m> for m = S-1, ..., -S, i.e. the first superdiagonal
    m = magnetic_numbers(S)[1:]
    s = float(S)
    return np.sqrt(s * (s + 1.0) - m * (m + 1.0))


def ladder_sparse(S: float) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    """Sparse ``(S_+, S_-)``; used where dense ``d x d`` storage is wasteful."""
    d = dimension(S)
    c = _raising_offdiag(S)
    # S_+ maps column k+1 (m-1) to row k (m)
    s_plus = sp.diags(c, 1, shape=(d, d), format="csr")
    return s_plus, s_plus.T.tocsr()


def spin_operators(S: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(Sx, Sy, Sz)`` for spin ``S``.

    Raises InvalidParameterError when ``2S`` is not a positive integer.
    """
    m = magnetic_numbers(S)
    c = _raising_offdiag(S)
    s_plus = np.diag(c, 1).astype(complex)
    s_minus = s_plus.T.copy()
    sx = 0.5 * (s_plus + s_minus)
    sy = -0.5j * (s_plus - s_minus)
    sz = np.diag(m).astype(complex)
    return sx, sy, sz


def casimir(S: float) -> np.ndarray:
    sx, sy, sz = spin_operators(S)
    return sx @ sx + sy @ sy + sz @ sz


def parity_operator(S: float) -> np.ndarray:
    """``P = exp(i pi S_z)``, diagonal and unitary."""
    return np.diag(np.exp(1j * np.pi * magnetic_numbers(S)))


def parity_labels(S: float) -> np.ndarray:
    """+1 for basis states with ``S - m`` even (the sector holding ``|S,S>``), else -1.

    For integer S these are the eigenvalues of P up to the global phase ``(-1)^S``.
    """
    k = np.arange(dimension(S))
    return np.where(k % 2 == 0, 1, -1)


def rotation_y(S: float, theta: float) -> np.ndarray:
    """``exp(-i theta S_y)`` from the eigendecomposition of S_y."""
    _, sy, _ = spin_operators(S)
    w, v = np.linalg.eigh(sy)
    return (v * np.exp(-1j * theta * w)) @ v.conj().T


def stretched_state(S: float) -> np.ndarray:
    """``|S, S>`` as a column vector."""
    psi = np.zeros(dimension(S), dtype=complex)
    psi[0] = 1.0
    return psi
