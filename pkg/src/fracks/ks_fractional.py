"""Space-fractional Kohn-Sham orbital and potentials.

The fractional orbital replaces ``exp(i theta)`` by the Mittag-Leffler function,
``phi = sqrt(n) E_a(i theta)``. Its fractional spatial derivative follows the
chain rule ``D^a phi = D_n^a phi (d_x n)^a + D_theta^a phi (d_x theta)^a`` with

    D_n^a phi     = E_a(i theta) G(3/2)/G(3/2 - a) n^(1/2 - a)
    D_theta^a phi = i sqrt(n) a^-a theta^(1-a) E_a(i theta)

Truncating ``E_a`` after two terms gives ``phi = sqrt(n) (1 + i theta/G(1+a))``
and the fractional correlation potential

    Vc~ = -d_t theta * G(1+a) / (G(1+a)^2 + theta^2)
          + G(3/2)/G(3/2 - a) n^(1/2 - a) (d_x n)^a / (2 sqrt(n)) - V_ext

Powers of possibly negative bases go through :func:`frac_power` with the
configured branch. At field level the strict branch yields NaN (not an
exception) where the base is negative, so that the repair step can decide
whether the field is usable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DensityUnderflowError, MissingFieldError, UnrepairableSingularityError
from .fields import FieldSnapshot
from .fractional_kernel import (
    PowerBranchMode,
    check_order,
    frac_power,
    gamma_fn,
    mittag_leffler,
    mittag_leffler_trunc2,
)
from .ks_exact import POTENTIAL_WINDOW, KsOrbital, PotentialField, ks_potential_total

REPAIR_NONE = 0
REPAIR_AVERAGED = 1
REPAIR_EXTENDED = 2


@dataclass(frozen=True)
class FracConfig:
    alpha: float = 0.3
    branch: PowerBranchMode = PowerBranchMode.SIGNED
    repair_max_run: int = 3

    def __post_init__(self):
        check_order(self.alpha)
        object.__setattr__(self, "branch", PowerBranchMode(self.branch))
        if self.repair_max_run < 1:
            raise ValueError("repair_max_run must be >= 1")


def _field_power(y: np.ndarray, a: float, branch: PowerBranchMode) -> np.ndarray:
    if branch is PowerBranchMode.STRICT:
        y = np.asarray(y, dtype=float)
        with np.errstate(invalid="ignore"):
            return np.where(y >= 0, np.power(np.abs(y), a), np.nan)
    return frac_power(y, a, branch)


def _density_factor(alpha: float) -> float:
    return gamma_fn(1.5) / gamma_fn(1.5 - alpha)


def frac_orbital_trunc(snap: FieldSnapshot, cfg: FracConfig) -> KsOrbital:
    values = np.sqrt(snap.n) * mittag_leffler_trunc2(cfg.alpha, snap.theta)
    return KsOrbital(snap.t, snap.grid, values, source="trunc2")


def frac_orbital_full(snap: FieldSnapshot, cfg: FracConfig) -> KsOrbital:
    values = np.sqrt(snap.n) * mittag_leffler(cfg.alpha, 1j * snap.theta)
    return KsOrbital(snap.t, snap.grid, values, source="mittag-leffler")


def frac_partial_density(snap: FieldSnapshot, cfg: FracConfig) -> np.ndarray:
    a = cfg.alpha
    n = snap.n
    with np.errstate(divide="ignore"):
        n_pow = np.where(n > 0, np.power(np.where(n > 0, n, 1.0), 0.5 - a), np.nan)
    return mittag_leffler(a, 1j * snap.theta) * _density_factor(a) * n_pow


def frac_partial_phase(snap: FieldSnapshot, cfg: FracConfig) -> np.ndarray:
    a = cfg.alpha
    if a == 1.0:
        theta_pow = np.ones_like(snap.theta)
    else:
        theta_pow = _field_power(snap.theta, 1.0 - a, cfg.branch)
    return 1j * np.sqrt(snap.n) * a ** (-a) * theta_pow * mittag_leffler(a, 1j * snap.theta)


def frac_spatial_derivative(snap: FieldSnapshot, cfg: FracConfig) -> np.ndarray:
    a = cfg.alpha
    return frac_partial_density(snap, cfg) * _field_power(snap.dn_dx, a, cfg.branch) + frac_partial_phase(
        snap, cfg
    ) * _field_power(snap.dtheta_dx, a, cfg.branch)


def frac_ks_potential_from_fields(
    snap: FieldSnapshot, cfg: FracConfig, *, window: float = POTENTIAL_WINDOW
) -> PotentialField:
    """Fractional ``V_KS``: the truncated-orbital potential without its ``-V_ext`` term."""
    if snap.dtheta_dt is None:
        raise MissingFieldError("snapshot has no d_t theta")
    a = cfg.alpha
    win = snap.n > window
    if not win.any():
        raise DensityUnderflowError("density is below the potential window everywhere")
    g1 = gamma_fn(1.0 + a)
    n = snap.n[win]
    theta = snap.theta[win]
    phase_term = -snap.dtheta_dt[win] * g1 / (g1 * g1 + theta * theta)
    density_term = (
        _density_factor(a) * np.power(n, 0.5 - a) * _field_power(snap.dn_dx[win], a, cfg.branch) / (2.0 * np.sqrt(n))
    )
    out = np.full(snap.n.shape, np.nan)
    out[win] = phase_term + density_term
    return PotentialField(snap.t, snap.grid, out, name="V_KS_frac", masked=~win)


def frac_correlation_potential(
    snap: FieldSnapshot, v_ext: PotentialField, cfg: FracConfig, *, window: float = POTENTIAL_WINDOW
) -> PotentialField:
    v_ks = frac_ks_potential_from_fields(snap, cfg, window=window)
    return PotentialField(snap.t, snap.grid, v_ks.values - v_ext.values, name="V_c_frac", masked=v_ks.masked)


def frac_ks_potential(v_c_frac: PotentialField, v_ext: PotentialField) -> PotentialField:
    return ks_potential_total(v_c_frac, v_ext, name="V_KS_frac")


def _runs(mask: np.ndarray):
    """Yield ``(start, stop)`` half-open index ranges where ``mask`` is True."""
    padded = np.concatenate(([False], mask, [False]))
    edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
    return list(zip(edges[::2], edges[1::2]))


def singularity_repair(field: PotentialField, cfg: FracConfig) -> PotentialField:
    """Replace non-finite samples by the mean of the nearest finite neighbours.

    Runs of masked samples that reach the end of the grid (density tails
    outside the evaluation window) are filled with the nearest finite value
    and flagged ``REPAIR_EXTENDED``. Every other run of non-finite samples is
    a singularity: if it is at most ``cfg.repair_max_run`` long it is
    replaced by the mean of the finite samples bordering it (one-sided at
    the grid ends) and flagged ``REPAIR_AVERAGED``; longer runs raise
    :class:`UnrepairableSingularityError`.
    """
    values = field.values.copy()
    flags = np.asarray(field.repaired, dtype=np.int8).copy()
    bad = ~np.isfinite(values)
    if not bad.any():
        return PotentialField(field.t, field.grid, values, field.name, field.masked.copy(), flags)
    if bad.all():
        raise UnrepairableSingularityError(f"{field.name}: no finite samples", alpha=cfg.alpha)
    x = field.grid.x
    n = len(values)
    # runs are separated by finite samples, so in-place filling never feeds a later run
    for start, stop in _runs(bad):
        left = values[start - 1] if start > 0 else None
        right = values[stop] if stop < n else None
        at_edge = start == 0 or stop == n
        if at_edge and field.masked[start:stop].all():
            values[start:stop] = left if left is not None else right
            flags[start:stop] = REPAIR_EXTENDED
            continue
        if stop - start > cfg.repair_max_run:
            raise UnrepairableSingularityError(
                f"{field.name}: {stop - start} consecutive non-finite samples on "
                f"x in [{x[start]:.4f}, {x[stop - 1]:.4f}] (limit {cfg.repair_max_run}, alpha={cfg.alpha})",
                x_range=(float(x[start]), float(x[stop - 1])),
                alpha=cfg.alpha,
            )
        neighbours = [v for v in (left, right) if v is not None]
        values[start:stop] = sum(neighbours) / len(neighbours)
        flags[start:stop] = REPAIR_AVERAGED
    return PotentialField(field.t, field.grid, values, field.name, field.masked.copy(), flags)
