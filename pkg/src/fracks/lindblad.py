"""Two-level density matrix under pure dephasing.

Conventions: hbar = 1, matrix elements ``rho_mn = <m|rho|n>`` with m, n in {0, 1}.
The generator is

    d(rho)/dt = -i[H, rho] + 2 L rho L^+ - L^+ L rho - rho L^+ L,
    H = diag(E0, E1),  L = sqrt(gamma) * diag(1, 0),

so populations are frozen and the coherence obeys
``rho01(t) = rho01(0) * exp(-gamma*t + i*(E1 - E0)*t)``. Its conjugate
``rho10`` carries ``exp(-(gamma + i*(E1 - E0))*t)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvariantError

DEFAULT_RK4_DT = 1e-3


@dataclass(frozen=True)
class TwoLevelDensity:
    rho00: complex
    rho01: complex
    rho10: complex
    rho11: complex

    @classmethod
    def from_matrix(cls, m) -> "TwoLevelDensity":
        m = np.asarray(m, dtype=complex)
        return cls(complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1]))

    @classmethod
    def from_populations(cls, p0: float, p1: float, coherence: complex = 0.0) -> "TwoLevelDensity":
        c = complex(coherence)
        return cls(complex(p0), c, c.conjugate(), complex(p1))

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.rho00, self.rho01], [self.rho10, self.rho11]], dtype=complex)

    @property
    def trace(self) -> complex:
        return self.rho00 + self.rho11

    @property
    def purity(self) -> float:
        m = self.as_matrix()
        return float(np.trace(m @ m).real)

    def validate(self, tol: float = 1e-12) -> "TwoLevelDensity":
        """Check hermiticity, unit trace and positivity; return self."""
        if abs(self.rho10 - self.rho01.conjugate()) > tol:
            raise InvariantError("density matrix is not hermitian")
        if abs(self.rho00.imag) > tol or abs(self.rho11.imag) > tol:
            raise InvariantError("populations must be real")
        if abs(self.trace - 1.0) > tol:
            raise InvariantError(f"trace {self.trace} != 1")
        if abs(self.rho01) ** 2 > self.rho00.real * self.rho11.real + tol:
            raise InvariantError("density matrix is not positive semidefinite")
        return self


@dataclass(frozen=True)
class DephasingParams:
    gamma: float
    E0: float
    E1: float

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("dephasing rate gamma must be >= 0")
        if self.E1 < self.E0:
            raise ValueError("need E1 >= E0")

    @property
    def gap(self) -> float:
        return self.E1 - self.E0


# Table 1 initial state: |psi> = (|0> + |1>)/sqrt(2).
TABLE1_INITIAL = TwoLevelDensity(0.5 + 0j, 0.5 + 0j, 0.5 + 0j, 0.5 + 0j)


def _generator(m: np.ndarray, p: DephasingParams) -> np.ndarray:
    h = np.diag([p.E0, p.E1]).astype(complex)
    # L = sqrt(gamma) * P with the projector P = |0><0|; factoring gamma out keeps
    # the population entries of the dissipator exactly zero
    proj = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
    commutator = h @ m - m @ h
    dissipator = p.gamma * (2.0 * proj @ m @ proj - proj @ m - m @ proj)
    return -1j * commutator + dissipator


def lindblad_rhs(rho: TwoLevelDensity, p: DephasingParams) -> TwoLevelDensity:
    """Time derivative of ``rho``; the "density" returned is a derivative, not a state."""
    return TwoLevelDensity.from_matrix(_generator(rho.as_matrix(), p))


def analytic_state(rho0: TwoLevelDensity, p: DephasingParams, t: float) -> TwoLevelDensity:
    if t < 0:
        raise ValueError("analytic_state needs t >= 0")
    decay = cmath.exp(complex(-p.gamma * t, p.gap * t))
    rho01 = rho0.rho01 * decay
    rho10 = rho0.rho10 * decay.conjugate()
    return TwoLevelDensity(rho0.rho00, rho01, rho10, rho0.rho11)


def _rk4_step(m: np.ndarray, p: DephasingParams, dt: float) -> np.ndarray:
    k1 = _generator(m, p)
    k2 = _generator(m + 0.5 * dt * k1, p)
    k3 = _generator(m + 0.5 * dt * k2, p)
    k4 = _generator(m + dt * k3, p)
    return m + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_trajectory(
    rho0: TwoLevelDensity,
    p: DephasingParams,
    t_end: float,
    dt: float = DEFAULT_RK4_DT,
    *,
    trace_tol: float = 1e-9,
) -> tuple[np.ndarray, np.ndarray]:
    """Classical RK4 integration; returns ``(times, matrices)`` including t = 0.

    The last step is shortened so the trajectory ends exactly on ``t_end``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    n_full = int(math.floor(t_end / dt + 1e-9))
    times = [0.0]
    m = rho0.as_matrix()
    mats = [m]
    trace0 = np.trace(m)
    for i in range(1, n_full + 1):
        m = _rk4_step(m, p, dt)
        times.append(i * dt)
        mats.append(m)
    remainder = t_end - n_full * dt
    if remainder > 1e-12 * max(1.0, t_end):
        m = _rk4_step(m, p, remainder)
        times.append(t_end)
        mats.append(m)
    if abs(np.trace(m) - trace0) > trace_tol:
        raise InvariantError(f"trace drifted by {abs(np.trace(m) - trace0):.3e}")
    return np.array(times), np.array(mats)


def propagate_rk4(
    rho0: TwoLevelDensity, p: DephasingParams, t_end: float, dt: float = DEFAULT_RK4_DT
) -> TwoLevelDensity:
    """Numerically integrated state at ``t_end``; an oracle for :func:`analytic_state`."""
    _, mats = rk4_trajectory(rho0, p, t_end, dt)
    return TwoLevelDensity.from_matrix(mats[-1])


def dephasing_timescale(gamma_m: float, gamma_n: float) -> float:
    """Mean of the two level rates, ``0.5 * (gamma_m + gamma_n)``.

    Historically called a timescale, though it carries units of a rate.
    """
    if gamma_m < 0 or gamma_n < 0:
        raise ValueError("rates must be non-negative")
    return 0.5 * (gamma_m + gamma_n)
