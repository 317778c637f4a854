"""Harmonic and delta-kicked harmonic external potentials.

The kicked potential is

    V(x, t) = s * m w^2 x^2 / 2 + K cos(k x) * sum_n delta(t - n tau)

with ``s = -1`` as printed in the source model (``harmonic_sign="as-printed-minus"``)
or ``s = +1`` for the usual confining oscillator. The delta comb has to be
regularized before it can be sampled at a given time; see ``comb_value``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .fields import SpatialGrid
from .ks_exact import PotentialField

GAUSS_CUTOFF = 6.0


class HarmonicSign(str, enum.Enum):
    AS_PRINTED_MINUS = "as-printed-minus"
    STANDARD_PLUS = "standard-plus"


class CombMode(str, enum.Enum):
    #: normalized Gaussians of width ``sigma_t`` centred on each kick
    GAUSSIAN_COMB = "gaussian-comb"
    #: time average of the comb, ``1/tau``
    MEAN_FIELD = "mean-field"
    #: ``1/h_t`` within half a frame of a kick, zero otherwise
    OFF_KICK_ZERO = "off-kick-zero"


@dataclass(frozen=True)
class KickedOscillatorParams:
    mass: float = 1.0
    omega: float = 0.1
    K: float = 1.0
    k: float = 1.0
    tau: float = 0.1
    harmonic_sign: HarmonicSign = HarmonicSign.AS_PRINTED_MINUS
    comb_mode: CombMode = CombMode.GAUSSIAN_COMB
    sigma_t: float | None = None
    frame_width: float = 1e-3

    def __post_init__(self):
        object.__setattr__(self, "harmonic_sign", HarmonicSign(self.harmonic_sign))
        object.__setattr__(self, "comb_mode", CombMode(self.comb_mode))
        if self.sigma_t is None:
            object.__setattr__(self, "sigma_t", self.tau / 50.0)
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if self.omega < 0:
            raise ValueError("omega must be >= 0")
        if self.comb_mode is CombMode.GAUSSIAN_COMB and self.sigma_t <= 0:
            raise ValueError("sigma_t must be positive for the gaussian comb")
        if self.comb_mode is CombMode.OFF_KICK_ZERO and self.frame_width <= 0:
            raise ValueError("frame_width must be positive")

    @property
    def sign(self) -> float:
        return -1.0 if self.harmonic_sign is HarmonicSign.AS_PRINTED_MINUS else 1.0


def comb_value(p: KickedOscillatorParams, t: float) -> float:
    """Regularized ``sum_n delta(t - n tau)`` at time ``t``."""
    if p.comb_mode is CombMode.MEAN_FIELD:
        return 1.0 / p.tau
    if p.comb_mode is CombMode.OFF_KICK_ZERO:
        nearest = round(t / p.tau) * p.tau
        return 1.0 / p.frame_width if abs(t - nearest) < 0.5 * p.frame_width else 0.0
    s = p.sigma_t
    reach = GAUSS_CUTOFF * s
    first = math.ceil((t - reach) / p.tau)
    last = math.floor((t + reach) / p.tau)
    norm = 1.0 / (s * math.sqrt(2.0 * math.pi))
    total = 0.0
    for n in range(first, last + 1):
        d = t - n * p.tau
        if abs(d) <= reach:
            total += norm * math.exp(-0.5 * (d / s) ** 2)
    return total


def eval_harmonic(omega: float, mass: float, grid: SpatialGrid, t: float = 0.0) -> PotentialField:
    if omega < 0:
        raise ValueError("omega must be >= 0")
    x = grid.x
    return PotentialField(float(t), grid, 0.5 * mass * omega**2 * x * x, name="V_ext")


def eval_delta_kicked(p: KickedOscillatorParams, grid: SpatialGrid, t: float) -> PotentialField:
    x = grid.x
    harmonic = p.sign * 0.5 * p.mass * p.omega**2 * x * x
    kick = p.K * np.cos(p.k * x) * comb_value(p, t)
    return PotentialField(float(t), grid, harmonic + kick, name="V_ext")
