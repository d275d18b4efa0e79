"""Time integration of the spin Lindblad equation and observables along the way.

The generator is applied as ``G rho + rho G^dag + L rho L^dag`` with the banded
sparse ``G = -i H - L^dag L / 2`` and ``L``; the superoperator is never formed.
Writing the right-hand side as ``X + X^dag + L rho L^dag`` with ``X = G rho``
keeps it Hermitian for Hermitian ``rho`` exactly, and its trace vanishes
identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.optimize as so
import scipy.signal as ss
import scipy.sparse as sp
from scipy.integrate import RK45

from . import spin_algebra as sa
from .errors import ConvergenceError, InvalidParameterError
from .lmg_model import (
    ModelParams,
    RestrictedBasis,
    _project_spin,
    _sector_tridiagonal,
    restricted_basis,
    restricted_lindbladian,
    sparse_generator,
)

TRACE_TOL = 1e-8
KINDS = ("rotated_ground", "rotated_stretched")


@dataclass(frozen=True)
class InitialStateSpec:
    kind: str
    theta: float

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown initial-state kind {self.kind!r}; expected one of {KINDS}")
        if not math.isfinite(self.theta):
            raise InvalidParameterError("theta must be finite")


@dataclass
class Trajectory:
    times: np.ndarray
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    energy: np.ndarray  # <H_S>
    trace_err: np.ndarray
    min_eig: np.ndarray
    purity: np.ndarray
    hermiticity_err: np.ndarray
    n_steps: int = 0
    final_state: np.ndarray | None = field(default=None, repr=False)
    basis: RestrictedBasis | None = field(default=None, repr=False)
    truncation_loss: float = 0.0  # weight of rho0 outside the restricted subspace

    @property
    def failed(self) -> bool:
        return bool(np.max(self.trace_err, initial=0.0) > TRACE_TOL)


def even_ground_state(params: ModelParams) -> np.ndarray:
    """Lowest eigenvector of H_S in the parity sector containing ``|S,S>``.

    In the broken phase the two lowest levels are quasi-degenerate and of
    opposite parity; taking the even one makes the choice deterministic.
    """
    diag, off, idx = _sector_tridiagonal(params, 0)
    psi = np.zeros(params.dim)
    if idx.size == 1:
        psi[idx] = 1.0
        return psi
    _, v = la.eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    psi[idx] = v[:, 0]
    # fix the sign so the |S,S> component is non-negative
    return psi if psi[0] >= 0 else -psi


def initial_state(params: ModelParams, spec: InitialStateSpec) -> np.ndarray:
    """``R_y(theta)|psi><psi|R_y(theta)^dag`` for the chosen reference state."""
    if spec.kind == "rotated_ground":
        psi = even_ground_state(params).astype(complex)
    else:
        psi = sa.stretched_state(params.S).astype(complex)
    psi = sa.rotation_y(params.S, spec.theta) @ psi
    psi /= np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def _check_grid(t_grid: np.ndarray) -> np.ndarray:
    t = np.asarray(t_grid, float)
    if t.ndim != 1 or t.size < 1:
        raise InvalidParameterError("t_grid must be a non-empty 1-d array")
    if t[0] != 0.0:
        raise InvalidParameterError("t_grid must start at 0")
    if np.any(np.diff(t) <= 0):
        raise InvalidParameterError("t_grid must be strictly increasing")
    return t


def _hermitize(rho: np.ndarray) -> np.ndarray:
    return 0.5 * (rho + rho.conj().T)


def evolve(
    params: ModelParams,
    rho0: np.ndarray,
    t_grid: np.ndarray,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    K: int | None = None,
    min_eig: bool = True,
    max_steps: int = 1_000_000,
) -> Trajectory:
    """Integrate ``d rho/dt = L rho`` with Dormand-Prince 4(5) and record observables.

    With ``K=None`` the full ``(2S+1)``-dimensional problem is integrated.  With
    an integer ``K`` the equation is integrated on the ``K`` lowest eigenstates
    of H_S using the projected spin operators (the same restriction as
    :func:`dlmg.lmg_model.restricted_superoperator`); ``rho0`` is projected and
    the lost weight is reported as ``truncation_loss``.

    After every accepted step the state is replaced by its Hermitian part.
    Observables are evaluated on the integrator's dense output at ``t_grid``.
    """
    d = params.dim
    rho0 = np.asarray(rho0, complex)
    if rho0.shape != (d, d):
        raise InvalidParameterError(f"rho0 must be {d}x{d}, got {rho0.shape}")
    t = _check_grid(t_grid)
    basis, loss = None, 0.0
    if K is None:
        g, l = sparse_generator(params)
        l_conj = sp.csr_matrix(l.conj())
        sx, sy, sz = sa.spin_operators(params.S)
        h_s = -(params.coupling / (2.0 * params.S)) * (sx @ sx) - sz
    else:
        basis = restricted_basis(params, K)
        lind = restricted_lindbladian(params, basis)
        g, l = lind.generator, lind.jump
        l_conj = l.conj()
        sx, sy, sz = _project_spin(basis)
        h_s = np.diag(basis.energies).astype(complex)
        rho0 = basis.project(rho0)
        loss = 1.0 - float(np.trace(rho0).real)
        d = K
    ops = [sx, sy, sz, h_s]

    def rhs(_t: float, y: np.ndarray) -> np.ndarray:
        rho = y.reshape(d, d)
        x = g @ rho
        jump = l @ (l_conj @ rho.T).T  # rho L^dag = (conj(L) rho^T)^T
        return (x + x.conj().T + _hermitize(jump)).reshape(-1)

    out = np.empty((t.size, 8))

    def record(k: int, rho: np.ndarray) -> None:
        herm = float(np.abs(rho - rho.conj().T).max())
        rho = _hermitize(rho)
        # Tr(A rho) = sum(A^T * rho) for dense A
        vals = [float(np.sum(op.T * rho).real) for op in ops]
        tr = float(np.trace(rho).real)
        lo = float(np.linalg.eigvalsh(rho)[0]) if min_eig else math.nan
        out[k] = (*vals, abs(tr - (1.0 - loss)), lo, float(np.sum(np.abs(rho) ** 2)), herm)

    y0 = _hermitize(rho0).reshape(-1)
    record(0, y0.reshape(d, d))
    final = y0
    steps = 0
    if t.size > 1:
        solver = RK45(rhs, 0.0, y0, t[-1], rtol=rtol, atol=atol)
        k = 1
        while k < t.size:
            msg = solver.step()
            if solver.status == "failed":
                raise ConvergenceError(f"integrator failed at t={solver.t:.6g}: {msg}")
            steps += 1
            if steps > max_steps:
                raise ConvergenceError(f"more than {max_steps} steps before t={t[-1]}")
            dense = solver.dense_output()
            while k < t.size and t[k] <= solver.t:
                record(k, dense(t[k]).reshape(d, d))
                k += 1
            solver.y = _hermitize(solver.y.reshape(d, d)).reshape(-1)
        final = solver.y
    return Trajectory(
        times=t,
        sx=out[:, 0],
        sy=out[:, 1],
        sz=out[:, 2],
        energy=out[:, 3],
        trace_err=out[:, 4],
        min_eig=out[:, 5],
        purity=out[:, 6],
        hermiticity_err=out[:, 7],
        n_steps=steps,
        final_state=final.reshape(d, d),
        basis=basis,
        truncation_loss=loss,
    )


# ---------------------------------------------------------------------------
# damped-oscillation fit


@dataclass(frozen=True)
class DampedFit:
    frequency: float
    decay: float
    amplitude: float
    phase: float
    offset: float
    residual: float  # RMS of the fit residual
    low_amplitude: bool


def _damped(p: np.ndarray, t: np.ndarray) -> np.ndarray:
    a, kappa, omega, phi, c = p
    return a * np.exp(-kappa * t) * np.cos(omega * t + phi) + c


def _initial_guess(t: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    n = t.size
    dt = (t[-1] - t[0]) / (n - 1)
    pad = 8 * (1 << int(math.ceil(math.log2(n))))
    spec = np.abs(np.fft.rfft(y * np.hanning(n), pad))
    freqs = 2 * math.pi * np.fft.rfftfreq(pad, dt)
    k = int(np.argmax(spec[1:])) + 1
    if 1 <= k < spec.size - 1:  # parabolic peak refinement
        a, b, c = np.log(spec[k - 1 : k + 2] + 1e-300)
        k = k + 0.5 * (a - c) / (a - 2 * b + c)
    omega = float(k * (freqs[1] - freqs[0]))
    env = np.abs(ss.hilbert(y))
    core = slice(n // 10, n - n // 10)  # Hilbert envelope is unreliable at the edges
    slope, intercept = np.polyfit(t[core], np.log(env[core] + 1e-300), 1)
    kappa = max(float(-slope), 0.0)
    amp = float(math.exp(intercept))
    # projecting y e^{kappa t} onto e^{i omega t} gives ~ A e^{i phi}
    z = np.sum(y * np.exp(kappa * t - 1j * omega * t))
    return amp, kappa, omega, float(np.angle(z))


def fit_damped_oscillation(
    t: np.ndarray,
    y: np.ndarray,
    offset: bool = True,
    amplitude_floor: float = 1e-10,
    max_nfev: int = 2000,
) -> DampedFit:
    """Least-squares fit of ``A exp(-kappa t) cos(omega t + phi) (+ c)``.

    Initialized from the zero-padded FFT peak and the slope of the log Hilbert
    envelope.  Signals whose spread is below ``amplitude_floor`` (relative to
    their mean magnitude, or absolute when the mean is zero) are returned with
    ``low_amplitude=True`` and no frequency.
    """
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    if t.size != y.size or t.size < 40:
        raise InvalidParameterError("need at least 40 samples with matching t and y")
    if np.any(np.diff(t) <= 0):
        raise InvalidParameterError("t must be strictly increasing")
    mean = float(y.mean()) if offset else 0.0
    centred = y - mean
    spread = float(np.abs(centred).max())
    if spread <= amplitude_floor * max(1.0, abs(mean)):
        return DampedFit(math.nan, math.nan, 0.0, 0.0, mean, float(np.sqrt(np.mean(centred**2))), True)
    t0 = t[0]
    tau = t - t0
    amp, kappa, omega, phi = _initial_guess(tau, centred)
    if omega * (tau[-1]) < 3 * 2 * math.pi * 0.999:
        raise InvalidParameterError("signal spans fewer than 3 periods")
    p0 = np.array([amp, kappa, omega, phi, mean])
    scale = spread

    def resid(p: np.ndarray) -> np.ndarray:
        q = p if offset else np.append(p, 0.0)
        return (_damped(q, tau) - y) / scale

    start = p0 if offset else p0[:4]
    sol = so.least_squares(resid, start, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)
    rms = float(np.sqrt(np.mean(sol.fun**2))) * scale
    if not sol.success:
        raise ConvergenceError(f"damped-oscillation fit did not converge (residual {rms:.3e}): {sol.message}")
    a, kappa, omega, phi = sol.x[:4]
    c = float(sol.x[4]) if offset else 0.0
    if a < 0:
        a, phi = -a, phi + math.pi
    if omega < 0:
        omega, phi = -omega, -phi
    phi = math.remainder(phi - omega * t0, 2 * math.pi)  # refer phase to t = 0
    a = a * math.exp(kappa * t0)
    return DampedFit(float(omega), float(kappa), float(a), float(phi), c, rms, False)
