"""Simulation configuration and its INI-style file format.

A config file is UTF-8 text with ``[section]`` headers and ``key = value``
lines. Sections: grid, times, dephasing, basis, external, frac, sweeps,
output. Keys are case-sensitive (``K`` is the kick strength, ``k`` the kick
wavenumber) and unknown keys are rejected. Numbers may be written with
``pi``, e.g. ``pi/4`` or ``0.5*pi``; lists are comma-separated.
"""

from __future__ import annotations

import ast
import configparser
import hashlib
import json
import math
import operator
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError
from .fields import DENSITY_FLOOR, PHASE_DT, SpatialGrid
from .fractional_kernel import PowerBranchMode
from .ks_fractional import FracConfig
from .lindblad import TwoLevelDensity, dephasing_timescale
from .potentials import CombMode, HarmonicSign, KickedOscillatorParams

DEFAULT_TIMES = (0.0, math.pi / 4, math.pi / 2, math.pi)
DEFAULT_OMEGA_SWEEP = (0.1, 0.2, 0.4, 0.6, 0.8, 1.0, 1.5, 2.0)
DEFAULT_K_SWEEP = (0.1, 0.2, 0.5, 1.0, 1.5, 2.0)
DEFAULT_ALPHA_SWEEP = (0.3, 0.5, 0.7)

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def parse_number(text: str) -> float:
    """Evaluate a small arithmetic expression over numbers and ``pi``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        raise ConfigError(f"not a number: {text!r}")

    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except SyntaxError as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def parse_list(text: str) -> tuple[float, ...]:
    items = [s for s in (p.strip() for p in text.split(",")) if s]
    return tuple(parse_number(s) for s in items)


@dataclass(frozen=True)
class SimulationConfig:
    grid: SpatialGrid = field(default_factory=SpatialGrid)
    derivatives: str = "analytic"
    times: tuple[float, ...] = DEFAULT_TIMES
    phase_dt: float = PHASE_DT
    gamma0: float = 0.15
    gamma1: float = 0.15
    rho0: TwoLevelDensity = TwoLevelDensity(0.5 + 0j, 0.5 + 0j, 0.5 + 0j, 0.5 + 0j)
    wavelength_m: float = 5.5e-5
    omega_sys: float = 1.0
    mass: float = 1.0
    external_kind: str = "kicked"
    kicked: KickedOscillatorParams = field(default_factory=KickedOscillatorParams)
    frac: FracConfig = field(default_factory=FracConfig)
    omega_sweep: tuple[float, ...] = DEFAULT_OMEGA_SWEEP
    K_sweep: tuple[float, ...] = DEFAULT_K_SWEEP
    alpha_sweep: tuple[float, ...] = DEFAULT_ALPHA_SWEEP
    sweep_time: float = math.pi
    output_dir: str = "runs/default"
    formats: tuple[str, ...] = ("csv", "svg")
    density_floor: float = DENSITY_FLOOR

    def __post_init__(self):
        if not self.times:
            raise ConfigError("times must not be empty")
        if self.times[0] < 0:
            raise ConfigError("times must start at t >= 0")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ConfigError("times must be strictly increasing")
        if self.external_kind not in ("kicked", "harmonic"):
            raise ConfigError(f"unknown external kind {self.external_kind!r}")
        if self.derivatives not in ("analytic", "stencil"):
            raise ConfigError(f"unknown derivative mode {self.derivatives!r}")
        if self.phase_dt <= 0:
            raise ConfigError("phase_dt must be positive")
        if self.omega_sys <= 0 or self.mass <= 0:
            raise ConfigError("omega_sys and mass must be positive")
        if self.gamma0 < 0 or self.gamma1 < 0:
            raise ConfigError("dephasing rates must be >= 0")
        bad = set(self.formats) - {"csv", "svg"}
        if bad:
            raise ConfigError(f"unknown output formats {sorted(bad)}")
        try:
            self.rho0.validate()
        except ValueError as exc:
            raise ConfigError(f"initial density: {exc}") from exc

    @property
    def gamma(self) -> float:
        """Lindblad rate: the two level rates combined as in the dephasing timescale."""
        return dephasing_timescale(self.gamma0, self.gamma1)

    def with_updates(self, **changes) -> "SimulationConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        k = self.kicked
        return {
            "grid": {
                "x_min": self.grid.x_min,
                "x_max": self.grid.x_max,
                "n_points": self.grid.n_points,
                "derivatives": self.derivatives,
                "density_floor": self.density_floor,
            },
            "times": {"values": list(self.times), "phase_dt": self.phase_dt},
            "dephasing": {
                "gamma0": self.gamma0,
                "gamma1": self.gamma1,
                "rho": [self.rho0.rho00.real, self.rho0.rho01.real, self.rho0.rho10.real, self.rho0.rho11.real],
                "rho01_imag": self.rho0.rho01.imag,
                "wavelength_m": self.wavelength_m,
            },
            "basis": {"omega_sys": self.omega_sys, "mass": self.mass},
            "external": {
                "kind": self.external_kind,
                "mass": k.mass,
                "omega": k.omega,
                "K": k.K,
                "k": k.k,
                "tau": k.tau,
                "harmonic_sign": k.harmonic_sign.value,
                "comb_mode": k.comb_mode.value,
                "sigma_t": k.sigma_t,
                "frame_width": k.frame_width,
            },
            "frac": {"alpha": self.frac.alpha, "branch": self.frac.branch.value, "repair_max_run": self.frac.repair_max_run},
            "sweeps": {
                "omega": list(self.omega_sweep),
                "K": list(self.K_sweep),
                "alpha": list(self.alpha_sweep),
                "t": self.sweep_time,
            },
            "output": {"directory": self.output_dir, "formats": list(self.formats)},
        }

    def run_id(self) -> str:
        """Content hash of the physics-relevant configuration (output location excluded)."""
        d = self.to_dict()
        d.pop("output")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]


# section -> key -> kind
_SCHEMA = {
    "grid": {"x_min": "num", "x_max": "num", "n_points": "int", "derivatives": "str", "density_floor": "num"},
    "times": {"values": "list", "phase_dt": "num"},
    "dephasing": {"gamma0": "num", "gamma1": "num", "gamma": "num", "rho": "list", "rho01_imag": "num", "wavelength_m": "num"},
    "basis": {"omega_sys": "num", "mass": "num"},
    "external": {
        "kind": "str",
        "mass": "num",
        "omega": "num",
        "K": "num",
        "k": "num",
        "tau": "num",
        "harmonic_sign": "str",
        "comb_mode": "str",
        "sigma_t": "num",
        "frame_width": "num",
    },
    "frac": {"alpha": "num", "branch": "str", "repair_max_run": "int"},
    "sweeps": {"omega": "list", "K": "list", "alpha": "list", "t": "num"},
    "output": {"directory": "str", "formats": "strlist"},
}


def _convert(kind: str, raw: str, where: str):
    try:
        if kind == "num":
            return parse_number(raw)
        if kind == "int":
            value = parse_number(raw)
            if value != int(value):
                raise ConfigError(f"{where}: expected an integer, got {raw!r}")
            return int(value)
        if kind == "list":
            return parse_list(raw)
        if kind == "strlist":
            return tuple(s.strip() for s in raw.split(",") if s.strip())
        return raw.strip()
    except ConfigError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_config_text(text: str, *, base: SimulationConfig | None = None) -> SimulationConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc

    values: dict[str, dict] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        values[section] = {}
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            values[section][key] = _convert(_SCHEMA[section][key], raw, f"[{section}] {key}")
    return _build(values, base or SimulationConfig())


def _build(v: dict, base: SimulationConfig) -> SimulationConfig:
    g = v.get("grid", {})
    t = v.get("times", {})
    d = v.get("dephasing", {})
    b = v.get("basis", {})
    e = v.get("external", {})
    f = v.get("frac", {})
    s = v.get("sweeps", {})
    o = v.get("output", {})
    try:
        grid = SpatialGrid(
            g.get("x_min", base.grid.x_min), g.get("x_max", base.grid.x_max), g.get("n_points", base.grid.n_points)
        )
        gamma0 = d.get("gamma0", base.gamma0)
        gamma1 = d.get("gamma1", base.gamma1)
        if "gamma" in d:
            gamma0 = gamma1 = d["gamma"]
        if "rho" in d:
            if len(d["rho"]) != 4:
                raise ConfigError("[dephasing] rho needs four entries rho00, rho01, rho10, rho11")
            r00, r01, r10, r11 = d["rho"]
            if r01 != r10:
                raise ConfigError("[dephasing] rho01 and rho10 must be equal (real coherence)")
            coherence = complex(r01, d.get("rho01_imag", 0.0))
            rho0 = TwoLevelDensity.from_populations(r00, r11, coherence)
        elif "rho01_imag" in d:
            r = base.rho0
            rho0 = TwoLevelDensity.from_populations(r.rho00.real, r.rho11.real, complex(r.rho01.real, d["rho01_imag"]))
        else:
            rho0 = base.rho0
        bk = base.kicked
        kicked = KickedOscillatorParams(
            mass=e.get("mass", bk.mass),
            omega=e.get("omega", bk.omega),
            K=e.get("K", bk.K),
            k=e.get("k", bk.k),
            tau=e.get("tau", bk.tau),
            harmonic_sign=HarmonicSign(e.get("harmonic_sign", bk.harmonic_sign)),
            comb_mode=CombMode(e.get("comb_mode", bk.comb_mode)),
            sigma_t=e.get("sigma_t", bk.sigma_t if "tau" not in e else None),
            frame_width=e.get("frame_width", bk.frame_width),
        )
        frac = FracConfig(
            alpha=f.get("alpha", base.frac.alpha),
            branch=PowerBranchMode(f.get("branch", base.frac.branch)),
            repair_max_run=f.get("repair_max_run", base.frac.repair_max_run),
        )
        return SimulationConfig(
            grid=grid,
            derivatives=g.get("derivatives", base.derivatives),
            density_floor=g.get("density_floor", base.density_floor),
            times=t.get("values", base.times),
            phase_dt=t.get("phase_dt", base.phase_dt),
            gamma0=gamma0,
            gamma1=gamma1,
            rho0=rho0,
            wavelength_m=d.get("wavelength_m", base.wavelength_m),
            omega_sys=b.get("omega_sys", base.omega_sys),
            mass=b.get("mass", base.mass),
            external_kind=e.get("kind", base.external_kind),
            kicked=kicked,
            frac=frac,
            omega_sweep=s.get("omega", base.omega_sweep),
            K_sweep=s.get("K", base.K_sweep),
            alpha_sweep=s.get("alpha", base.alpha_sweep),
            sweep_time=s.get("t", base.sweep_time),
            output_dir=o.get("directory", base.output_dir),
            formats=o.get("formats", base.formats),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> SimulationConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    return parse_config_text(text)
