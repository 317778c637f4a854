"""Exact (integer-order) correlation and Kohn-Sham potentials.

With the orbital ``phi = sqrt(n) exp(i theta)`` the closed one-electron
Kohn-Sham equation ``i d_t phi = V_KS phi - 1/2 d_xx phi`` is solved by

    V_c = -d_t theta + d_xx n / (4n) - (d_x n)^2 / (8 n^2) - (d_x theta)^2 / 2 - V_ext

and ``V_KS = V_ext + V_c``, so ``V_KS`` never depends on ``V_ext``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DensityUnderflowError, GaugeMismatchError, GridMismatchError, MissingFieldError
from .fields import FieldSnapshot, SpatialGrid, spatial_derivatives

POTENTIAL_WINDOW = 1e-8
RESIDUAL_WINDOW = 1e-6


@dataclass
class PotentialField:
    """Real potential on a grid at time ``t``.

    ``masked`` marks samples outside the evaluation window (their values are
    NaN until repaired); ``repaired`` holds a per-sample repair code
    (0 untouched, 1 neighbour-averaged, 2 extended from the window edge).
    """

    t: float
    grid: SpatialGrid
    values: np.ndarray
    name: str = "V"
    masked: np.ndarray | None = None
    repaired: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_points,):
            raise GridMismatchError("values do not match the grid")
        if self.masked is None:
            self.masked = np.zeros(self.values.shape, dtype=bool)
        if self.repaired is None:
            self.repaired = np.zeros(self.values.shape, dtype=np.int8)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


def _check_same(a: PotentialField, b: PotentialField) -> None:
    if a.grid != b.grid:
        raise GridMismatchError("potentials live on different grids")
    if a.t != b.t:
        raise GridMismatchError(f"potentials at different times ({a.t} vs {b.t})")


@dataclass(frozen=True)
class KsOrbital:
    t: float
    grid: SpatialGrid
    values: np.ndarray
    source: str = "n,theta"

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.values) ** 2


def exact_orbital(snap: FieldSnapshot) -> KsOrbital:
    return KsOrbital(snap.t, snap.grid, np.sqrt(snap.n) * np.exp(1j * snap.theta))


def _window(snap: FieldSnapshot, floor: float) -> np.ndarray:
    win = snap.n > floor
    if not win.any():
        raise DensityUnderflowError("density is below the potential window everywhere")
    return win


def ks_potential_from_fields(snap: FieldSnapshot, *, window: float = POTENTIAL_WINDOW) -> PotentialField:
    """``V_KS`` straight from ``(n, theta)``, with no external potential involved.

    Computing it this way, rather than as ``V_c + V_ext``, keeps large
    gauge offsets from losing precision to a subtract-then-add round trip.
    """
    if snap.dtheta_dt is None:
        raise MissingFieldError("snapshot has no d_t theta")
    win = _window(snap, window)
    out = np.full(snap.n.shape, np.nan)
    n = snap.n[win]
    out[win] = (
        -snap.dtheta_dt[win]
        + snap.d2n_dx2[win] / (4.0 * n)
        - snap.dn_dx[win] ** 2 / (8.0 * n * n)
        - 0.5 * snap.dtheta_dx[win] ** 2
    )
    return PotentialField(snap.t, snap.grid, out, name="V_KS", masked=~win)


def exact_correlation_potential(
    snap: FieldSnapshot, v_ext: PotentialField, *, window: float = POTENTIAL_WINDOW
) -> PotentialField:
    if v_ext.grid != snap.grid:
        raise GridMismatchError("external potential is on a different grid")
    v_ks = ks_potential_from_fields(snap, window=window)
    return PotentialField(snap.t, snap.grid, v_ks.values - v_ext.values, name="V_c", masked=v_ks.masked)


def ks_potential_total(v_c: PotentialField, v_ext: PotentialField, *, name: str = "V_KS") -> PotentialField:
    _check_same(v_c, v_ext)
    return PotentialField(
        v_c.t,
        v_c.grid,
        v_c.values + v_ext.values,
        name=name,
        masked=v_c.masked.copy(),
        repaired=v_c.repaired.copy(),
    )


def second_derivative_4th(f: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order ``f''``: 5-point central inside, 6-point one-sided at the two ends."""
    f = np.asarray(f)
    out = np.empty_like(f)
    out[2:-2] = (-f[4:] + 16 * f[3:-1] - 30 * f[2:-2] + 16 * f[1:-3] - f[:-4]) / (12 * h * h)
    # one-sided 4th-order stencils for the first/last two samples
    fw = np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / (12 * h * h)
    nb = np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / (12 * h * h)
    out[0] = fw @ f[:6]
    out[1] = nb @ f[:6]
    out[-1] = fw @ f[-1:-7:-1]
    out[-2] = nb @ f[-1:-7:-1]
    return out


def tdse_residual(
    orbitals: tuple[KsOrbital, KsOrbital, KsOrbital],
    v_ks: PotentialField,
    delta: float,
    *,
    stencil_order: int = 4,
    window: float = RESIDUAL_WINDOW,
    gauge_tol: float = 1e-12,
) -> float:
    """Relative L2 residual of ``i d_t phi = V_KS phi - 1/2 d_xx phi``.

    ``orbitals`` are the orbital at ``t - delta``, ``t`` and ``t + delta``;
    the time derivative is the central difference, ``d_xx`` a fourth-order
    (default) or second-order stencil. The norm is taken over samples where
    ``|phi(t)|^2 > window`` and where ``v_ks`` is finite.
    """
    minus, mid, plus = orbitals
    if not (minus.grid == mid.grid == plus.grid == v_ks.grid):
        raise GridMismatchError("orbitals and potential must share a grid")
    for orb in orbitals:
        if abs(np.angle(orb.values[0])) > gauge_tol and abs(orb.values[0]) > 0:
            raise GaugeMismatchError("orbital snapshots do not share the theta(x_min) = 0 gauge")
    phi = mid.values
    if stencil_order == 4:
        d2phi = second_derivative_4th(phi, mid.grid.h)
    elif stencil_order == 2:
        d2phi = spatial_derivatives(phi, mid.grid)[1]
    else:
        raise ValueError("stencil_order must be 2 or 4")
    resid = 1j * (plus.values - minus.values) / (2.0 * delta) - v_ks.values * phi + 0.5 * d2phi
    win = (np.abs(phi) ** 2 > window) & np.isfinite(v_ks.values)
    return float(np.linalg.norm(resid[win]) / np.linalg.norm(phi[win]))


def chain_rule_second_derivative(snap: FieldSnapshot) -> np.ndarray:
    """``d_xx phi`` assembled term by term from partial derivatives in ``(n, theta)``.

    Uses ``phi_n, phi_theta, phi_nn, phi_ntheta, phi_thetatheta`` of
    ``sqrt(n) exp(i theta)`` together with the snapshot's ``d_x n, d_xx n,
    d_x theta``; ``d_xx theta`` is a second-order stencil of ``d_x theta``.
    """
    n = snap.n
    e = np.exp(1j * snap.theta)
    sq = np.sqrt(n)
    phi = sq * e
    phi_n = e / (2.0 * sq)
    phi_t = 1j * phi
    phi_nn = -e / (4.0 * n * sq)
    phi_nt = 1j * e / (2.0 * sq)
    phi_tt = -phi
    d2theta = spatial_derivatives(snap.dtheta_dx, snap.grid)[0]
    return (
        phi_n * snap.d2n_dx2
        + phi_t * d2theta
        + phi_nn * snap.dn_dx**2
        + 2.0 * phi_nt * snap.dtheta_dx * snap.dn_dx
        + phi_tt * snap.dtheta_dx**2
    )


def chain_rule_time_derivative(snap: FieldSnapshot) -> np.ndarray:
    """``d_t phi = phi_theta d_t theta + phi_n d_t n``."""
    if snap.dtheta_dt is None:
        raise MissingFieldError("snapshot has no d_t theta")
    e = np.exp(1j * snap.theta)
    sq = np.sqrt(snap.n)
    return 1j * sq * e * snap.dtheta_dt + e / (2.0 * sq) * snap.dn_dt
