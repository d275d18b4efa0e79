"""Exact spectrum and stationary moments of the quadratic bosonic Lindbladian.

Valid beyond weak dissipation: rapidities ``beta_+-``, the eigenvalue lattice
``-2(beta_+ n_+ + beta_- n_-)`` and the stationary covariance matrix ``Z``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import InvalidParameterError
from .hp_analytic import _check_temperature, mode_frequency, semiclassical_magnetization


@dataclass(frozen=True)
class ThirdQuantResult:
    beta_plus: complex
    beta_minus: complex
    z: np.ndarray  # 2x2 complex symmetric, Z11 = Z22

    @property
    def z11(self) -> complex:
        return complex(self.z[0, 0])

    @property
    def z12(self) -> complex:
        return complex(self.z[0, 1])


def _mz_omega(coupling: float) -> tuple[float, float]:
    omega = mode_frequency(coupling)
    _, (_, _, m_z) = semiclassical_magnetization(coupling)
    return m_z, omega


def rapidities(coupling: float, gamma: float) -> tuple[complex, complex]:
    """``beta_+- = (m_z gamma +- i sqrt(4 omega_b^2 - m_z^2 gamma^2)) / 4`` (principal root).

    Above ``m_z gamma = 2 omega_b`` both are real; at the exceptional point they coincide.
    """
    if gamma < 0:
        raise InvalidParameterError("gamma must be >= 0")
    m_z, omega = _mz_omega(coupling)
    g = m_z * gamma
    disc = 4.0 * omega**2 - g**2
    if disc >= 0:
        root = 1j * math.sqrt(disc)
    else:
        root = complex(-math.sqrt(-disc))  # i * sqrt(negative) on the principal branch
    return 0.25 * (g + root), 0.25 * (g - root)


def eigenvalue_lattice(coupling: float, gamma: float, n_plus: int, n_minus: int) -> complex:
    """``-2 (beta_+ n_+ + beta_- n_-)`` for non-negative integers ``n_+-``."""
    for n in (n_plus, n_minus):
        if int(n) != n or n < 0:
            raise InvalidParameterError(f"lattice indices must be non-negative integers, got {n!r}")
    bp, bm = rapidities(coupling, gamma)
    return -2.0 * (bp * n_plus + bm * n_minus)


def z_matrix(coupling: float, gamma: float, T: float) -> ThirdQuantResult:
    _check_temperature(T)
    if gamma < 0:
        raise InvalidParameterError("gamma must be >= 0")
    m_z, omega = _mz_omega(coupling)
    g = m_z * gamma
    den = 32.0 * T * omega
    z11 = g * (g - 2j * omega) / den
    z12 = (g**2 + 2.0 * (4.0 * T - omega) ** 2) / den
    z = np.array([[z11, z12], [z12, z11]], dtype=complex)
    bp, bm = rapidities(coupling, gamma)
    return ThirdQuantResult(bp, bm, z)


_TOKENS = {"b": 0, "bd": 1, "b+": 1, "b^dag": 1, "b†": 1}


def parse_monomial(spec: str | Sequence[str]) -> tuple[int, ...]:
    """Operator word as a tuple of 0 (``b``) and 1 (``b^dag``), left to right.

    Accepts a whitespace-separated string such as ``"bd b bd b"`` or a sequence
    of tokens.
    """
    tokens = spec.split() if isinstance(spec, str) else list(spec)
    try:
        return tuple(_TOKENS[tok] for tok in tokens)
    except KeyError as exc:
        raise InvalidParameterError(f"unknown operator token {exc.args[0]!r}") from None


def _pair_moment(z: np.ndarray, left: int, right: int) -> complex:
    z11, z12 = z[0, 0], z[0, 1]
    if left == 0 and right == 0:
        return z11
    if left == 1 and right == 1:
        return np.conj(z11)
    if left == 1:
        return z12  # <b^dag b>
    return z12 + 1.0  # <b b^dag>


def gaussian_moments(result: ThirdQuantResult, monomial: str | Sequence[str]) -> complex:
    """Stationary ``<O_1 ... O_k>`` by Wick's theorem; zero for odd ``k``.

    Contractions keep the operator order within each pair, which is exact for
    zero-mean Gaussian states.
    """
    word = parse_monomial(monomial)
    if len(word) % 2:
        return 0.0j
    z = result.z

    @lru_cache(maxsize=None)
    def wick(rest: tuple[int, ...]) -> complex:
        # rest holds positions into word, in increasing order
        if not rest:
            return 1.0 + 0j
        first, others = rest[0], rest[1:]
        total = 0j
        for k, pos in enumerate(others):
            total += _pair_moment(z, word[first], word[pos]) * wick(others[:k] + others[k + 1 :])
        return total

    return complex(wick(tuple(range(len(word)))))
