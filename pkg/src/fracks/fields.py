"""Harmonic-oscillator basis, grid densities and the Kohn-Sham phase.

The density of the two-level system on the grid is

    n(x, t) = sum_mn rho_mn(t) phi_m(x) phi_n(x)

with real Hermite-Gaussian eigenfunctions. Its spatial derivatives come
straight from the analytic basis derivatives, and its time derivative from
the Lindblad generator, so the only discretization error left in a snapshot
is in the phase.

The phase ``theta`` is closed through the continuity equation: the
single-orbital system must carry the same density, hence

    d_t n + d_x (n d_x theta) = 0,   theta(x_min, t) = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DensityUnderflowError, GaugeMismatchError, InvariantError
from .lindblad import DephasingParams, TwoLevelDensity, analytic_state, lindblad_rhs

DENSITY_FLOOR = 1e-12
PHASE_DT = 1e-4


@dataclass(frozen=True)
class SpatialGrid:
    x_min: float = -8.0
    x_max: float = 8.0
    n_points: int = 801

    def __post_init__(self):
        if not self.x_min < 0 < self.x_max:
            raise ValueError("grid must straddle x = 0")
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise ValueError("n_points must be odd and >= 3 so that x = 0 is a node")

    @property
    def h(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @property
    def x(self) -> np.ndarray:
        if self.x_min == -self.x_max:
            # mirror one half so that x[i] == -x[-1 - i] holds bit for bit
            half = np.linspace(0.0, self.x_max, self.n_points // 2 + 1)
            return np.concatenate((-half[:0:-1], half))
        return np.linspace(self.x_min, self.x_max, self.n_points)

    def refined(self) -> "SpatialGrid":
        """Same interval with the spacing halved."""
        return replace(self, n_points=2 * self.n_points - 1)

    @property
    def zero_index(self) -> int:
        return int(np.argmin(np.abs(self.x)))


def ho_eigenfunction(level: int, omega: float, mass: float, grid: SpatialGrid) -> np.ndarray:
    """Harmonic-oscillator eigenfunction ``level`` (0 or 1) sampled on ``grid``."""
    return _ho_with_derivatives(level, omega, mass, grid.x)[0]


def _ho_with_derivatives(level: int, omega: float, mass: float, x: np.ndarray):
    if omega <= 0 or mass <= 0:
        raise ValueError("omega and mass must be positive")
    a = mass * omega
    gauss = (a / math.pi) ** 0.25 * np.exp(-0.5 * a * x * x)
    if level == 0:
        return gauss, -a * x * gauss, (a * a * x * x - a) * gauss
    if level == 1:
        c = math.sqrt(2.0 * a)
        return (
            c * x * gauss,
            c * (1.0 - a * x * x) * gauss,
            c * (a * a * x**3 - 3.0 * a * x) * gauss,
        )
    raise ValueError("only levels 0 and 1 exist in a two-level basis")


@dataclass(frozen=True)
class TwoLevelBasis:
    grid: SpatialGrid
    omega_sys: float = 1.0
    mass: float = 1.0
    phi0: np.ndarray = field(init=False, repr=False)
    phi1: np.ndarray = field(init=False, repr=False)
    dphi0: np.ndarray = field(init=False, repr=False)
    dphi1: np.ndarray = field(init=False, repr=False)
    d2phi0: np.ndarray = field(init=False, repr=False)
    d2phi1: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = self.grid.x
        for level in (0, 1):
            f, df, d2f = _ho_with_derivatives(level, self.omega_sys, self.mass, x)
            object.__setattr__(self, f"phi{level}", f)
            object.__setattr__(self, f"dphi{level}", df)
            object.__setattr__(self, f"d2phi{level}", d2f)

    @property
    def E0(self) -> float:
        return 0.5 * self.omega_sys

    @property
    def E1(self) -> float:
        return 1.5 * self.omega_sys

    def dephasing_params(self, gamma: float) -> DephasingParams:
        return DephasingParams(gamma=gamma, E0=self.E0, E1=self.E1)


def _density_parts(rho: TwoLevelDensity, basis: TwoLevelBasis):
    p0, p1 = rho.rho00.real, rho.rho11.real
    c = 2.0 * rho.rho01.real
    b = basis
    n = p0 * b.phi0**2 + p1 * b.phi1**2 + c * b.phi0 * b.phi1
    dn = (
        2.0 * p0 * b.phi0 * b.dphi0
        + 2.0 * p1 * b.phi1 * b.dphi1
        + c * (b.dphi0 * b.phi1 + b.phi0 * b.dphi1)
    )
    d2n = (
        2.0 * p0 * (b.dphi0**2 + b.phi0 * b.d2phi0)
        + 2.0 * p1 * (b.dphi1**2 + b.phi1 * b.d2phi1)
        + c * (b.d2phi0 * b.phi1 + 2.0 * b.dphi0 * b.dphi1 + b.phi0 * b.d2phi1)
    )
    return n, dn, d2n


def assemble_density(rho: TwoLevelDensity, basis: TwoLevelBasis, *, tol: float = 1e-12) -> np.ndarray:
    """Grid density ``rho00 phi0^2 + rho11 phi1^2 + 2 Re(rho01) phi0 phi1``.

    Round-off negatives down to ``-tol`` are clipped to zero; anything more
    negative means ``rho`` was not a valid state.
    """
    n = _density_parts(rho, basis)[0]
    if n.min() < -tol:
        raise InvariantError(f"negative density {n.min():.3e}: invalid density matrix")
    return np.clip(n, 0.0, None)


def density_spatial_derivatives(rho: TwoLevelDensity, basis: TwoLevelBasis):
    """Analytic ``(d_x n, d_xx n)`` from the basis derivatives."""
    _, dn, d2n = _density_parts(rho, basis)
    return dn, d2n


def density_time_derivative(rho: TwoLevelDensity, p: DephasingParams, basis: TwoLevelBasis) -> np.ndarray:
    drho = lindblad_rhs(rho, p)
    return 2.0 * drho.rho01.real * basis.phi0 * basis.phi1


def spatial_derivatives(f, grid: SpatialGrid):
    """Second-order finite differences ``(f', f'')``.

    Central stencils inside, second-order one-sided stencils at the ends;
    both are exact on quadratics.
    """
    f = np.asarray(f)
    if f.shape[-1] < 5:
        raise ValueError("need at least 5 samples")
    h = grid.h
    df = np.gradient(f, h, edge_order=2, axis=-1)
    d2f = np.empty_like(f)
    d2f[..., 1:-1] = (f[..., 2:] - 2.0 * f[..., 1:-1] + f[..., :-2]) / (h * h)
    d2f[..., 0] = (2.0 * f[..., 0] - 5.0 * f[..., 1] + 4.0 * f[..., 2] - f[..., 3]) / (h * h)
    d2f[..., -1] = (2.0 * f[..., -1] - 5.0 * f[..., -2] + 4.0 * f[..., -3] - f[..., -4]) / (h * h)
    return df, d2f


def _cumtrapz(f: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros_like(f)
    out[1:] = np.cumsum(0.5 * h * (f[1:] + f[:-1]))
    return out


def density_window(n: np.ndarray, n_floor: float) -> tuple[int, int]:
    """Index span ``[lo, hi]`` from the first to the last sample with ``n > n_floor``."""
    idx = np.flatnonzero(n > n_floor)
    if idx.size == 0:
        raise DensityUnderflowError("density is below the floor everywhere")
    return int(idx[0]), int(idx[-1])


def phase_from_continuity(
    n: np.ndarray, dn_dt: np.ndarray, grid: SpatialGrid, *, n_floor: float = DENSITY_FLOOR
) -> tuple[np.ndarray, np.ndarray]:
    """Phase and phase gradient that make the orbital carry ``n``.

    ``d_x theta = -(1/n) * int_{x_min}^x d_t n``, then ``theta`` is its
    running integral with ``theta(x_min) = 0`` (both by the trapezoid rule).

    The gradient is only formed on the span between the first and last
    samples where ``n > n_floor``; in the far tails it is set to zero, which
    leaves the phase constant there. A dip below the floor inside that span
    raises :class:`DensityUnderflowError`.
    """
    n = np.asarray(n, dtype=float)
    lo, hi = density_window(n, n_floor)
    inside = n[lo : hi + 1]
    if np.any(inside <= n_floor):
        bad = lo + int(np.argmax(inside <= n_floor))
        raise DensityUnderflowError(f"density {n[bad]:.3e} below floor at x = {grid.x[bad]:.4f}")
    current = -_cumtrapz(np.asarray(dn_dt, dtype=float), grid.h)
    dtheta_dx = np.zeros_like(n)
    dtheta_dx[lo : hi + 1] = current[lo : hi + 1] / inside
    theta = _cumtrapz(dtheta_dx, grid.h)
    return theta, dtheta_dx


def phase_time_derivative(theta_minus: np.ndarray, theta_plus: np.ndarray, delta: float, *, gauge_tol: float = 1e-12):
    """Central difference ``(theta_plus - theta_minus) / (2*delta)``."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    if abs(theta_minus[0]) > gauge_tol or abs(theta_plus[0]) > gauge_tol:
        raise GaugeMismatchError("phase snapshots must satisfy theta(x_min) = 0")
    return (np.asarray(theta_plus) - np.asarray(theta_minus)) / (2.0 * delta)


@dataclass(frozen=True)
class FieldSnapshot:
    """Density, phase and their derivatives on one grid at one time."""

    t: float
    grid: SpatialGrid
    rho: TwoLevelDensity
    n: np.ndarray
    dn_dx: np.ndarray
    d2n_dx2: np.ndarray
    dn_dt: np.ndarray
    theta: np.ndarray
    dtheta_dx: np.ndarray
    dtheta_dt: np.ndarray | None = None

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def norm(self) -> float:
        return float(np.trapezoid(self.n, dx=self.grid.h))


def _phase_at(rho0, p, basis, t, n_floor):
    rho = analytic_state(rho0, p, t)
    n = assemble_density(rho, basis)
    return phase_from_continuity(n, density_time_derivative(rho, p, basis), basis.grid, n_floor=n_floor)[0]


def build_snapshot(
    rho0: TwoLevelDensity,
    p: DephasingParams,
    basis: TwoLevelBasis,
    t: float,
    *,
    delta: float = PHASE_DT,
    n_floor: float = DENSITY_FLOOR,
    spatial: str = "analytic",
) -> FieldSnapshot:
    """Complete snapshot at time ``t`` from the analytic dephasing solution.

    ``spatial="stencil"`` replaces the analytic density derivatives by
    :func:`spatial_derivatives`. ``d_t theta`` is a central difference of
    two phase reconstructions at ``t +/- delta``; for ``t < delta`` a
    second-order forward difference is used so that no negative time is
    needed.
    """
    rho = analytic_state(rho0, p, t)
    n = assemble_density(rho, basis)
    if spatial == "analytic":
        dn, d2n = density_spatial_derivatives(rho, basis)
    elif spatial == "stencil":
        dn, d2n = spatial_derivatives(n, basis.grid)
    else:
        raise ValueError(f"unknown spatial derivative mode {spatial!r}")
    dn_dt = density_time_derivative(rho, p, basis)
    theta, dtheta_dx = phase_from_continuity(n, dn_dt, basis.grid, n_floor=n_floor)

    if t >= delta:
        dtheta_dt = phase_time_derivative(
            _phase_at(rho0, p, basis, t - delta, n_floor),
            _phase_at(rho0, p, basis, t + delta, n_floor),
            delta,
        )
    else:
        th1 = _phase_at(rho0, p, basis, t + delta, n_floor)
        th2 = _phase_at(rho0, p, basis, t + 2.0 * delta, n_floor)
        dtheta_dt = (-3.0 * theta + 4.0 * th1 - th2) / (2.0 * delta)

    return FieldSnapshot(
        t=float(t),
        grid=basis.grid,
        rho=rho,
        n=n,
        dn_dx=dn,
        d2n_dx2=d2n,
        dn_dt=dn_dt,
        theta=theta,
        dtheta_dx=dtheta_dx,
        dtheta_dt=dtheta_dt,
    )


def continuity_residual(snap: FieldSnapshot, *, window_floor: float = 1e-6) -> float:
    """``max |d_t n + d_x(n d_x theta)|`` over samples with ``n > window_floor``."""
    flux = snap.n * snap.dtheta_dx
    dflux, _ = spatial_derivatives(flux, snap.grid)
    resid = np.abs(snap.dn_dt + dflux)
    return float(resid[snap.n > window_floor].max())
