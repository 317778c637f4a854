"""End-to-end driver: snapshots, sweeps and their files on disk.

Output layout of a run directory::

    manifest.json          config echo, version, gauge, repair counts, timing
    snapshot_<i>.csv       run_id,t,x,field,value,repaired  (one per time / sweep value)
    sweep_summary.csv      axis,value,sup_dist,rel_dist,repaired_points  (sweeps only)
    *.svg                  optional line charts

Runs are written to a staging directory next to the target and moved into
place with a rename once every file is complete.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import shutil
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import SimulationConfig
from .errors import UnrepairableSingularityError
from .fields import FieldSnapshot, TwoLevelBasis, build_snapshot
from .ks_exact import PotentialField, exact_correlation_potential, ks_potential_from_fields
from .ks_fractional import (
    REPAIR_AVERAGED,
    REPAIR_EXTENDED,
    FracConfig,
    frac_correlation_potential,
    frac_ks_potential_from_fields,
    singularity_repair,
)
from .potentials import eval_delta_kicked, eval_harmonic

log = logging.getLogger(__name__)

FIELD_ORDER = ("n", "theta", "V_ext", "V_c", "V_c_frac", "V_KS", "V_KS_frac")
CSV_HEADER = ("run_id", "t", "x", "field", "value", "repaired")
SUMMARY_HEADER = ("axis", "value", "sup_dist", "rel_dist", "repaired_points")
SWEEP_AXES = ("omega", "K", "alpha")
SWEEP_WINDOW = 2.0
THREADS_ENV = "FRACKS_THREADS"
GAUGE = "theta(x_min, t) = 0"


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def thread_count() -> int | None:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return None
    n = int(raw)
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer")
    return n


@dataclass
class SnapshotResult:
    t: float
    snapshot: FieldSnapshot
    fields: dict[str, PotentialField | np.ndarray]
    label: str = ""
    value: float | None = None

    def repair_counts(self) -> dict[str, dict[str, int]]:
        out = {}
        for name, f in self.fields.items():
            if isinstance(f, PotentialField):
                out[name] = {
                    "averaged": int(np.count_nonzero(f.repaired == REPAIR_AVERAGED)),
                    "extended": int(np.count_nonzero(f.repaired == REPAIR_EXTENDED)),
                }
        return out

    def averaged_points(self) -> int:
        return sum(c["averaged"] for c in self.repair_counts().values())

    def values(self, name: str) -> np.ndarray:
        f = self.fields[name]
        return f.values if isinstance(f, PotentialField) else f


def make_basis(config: SimulationConfig) -> TwoLevelBasis:
    return TwoLevelBasis(config.grid, omega_sys=config.omega_sys, mass=config.mass)


def external_potential(config: SimulationConfig, t: float) -> PotentialField:
    if config.external_kind == "harmonic":
        return eval_harmonic(config.kicked.omega, config.kicked.mass, config.grid, t)
    return eval_delta_kicked(config.kicked, config.grid, t)


def make_snapshot(config: SimulationConfig, t: float, basis: TwoLevelBasis | None = None) -> FieldSnapshot:
    basis = basis or make_basis(config)
    return build_snapshot(
        config.rho0,
        basis.dephasing_params(config.gamma),
        basis,
        t,
        delta=config.phase_dt,
        n_floor=config.density_floor,
        spatial=config.derivatives,
    )


def potentials_for(
    snap: FieldSnapshot, v_ext: PotentialField, frac: FracConfig
) -> dict[str, PotentialField | np.ndarray]:
    """All output fields for one snapshot, each repaired independently."""
    vc_raw = exact_correlation_potential(snap, v_ext)
    vcf_raw = frac_correlation_potential(snap, v_ext, frac)
    # V_KS is evaluated without V_ext so that it cannot pick up its round-off
    vks_raw = ks_potential_from_fields(snap)
    vksf_raw = frac_ks_potential_from_fields(snap, frac)
    return {
        "n": snap.n,
        "theta": snap.theta,
        "V_ext": v_ext,
        "V_c": singularity_repair(vc_raw, frac),
        "V_c_frac": singularity_repair(vcf_raw, frac),
        "V_KS": singularity_repair(vks_raw, frac),
        "V_KS_frac": singularity_repair(vksf_raw, frac),
    }


def compute_snapshot(config: SimulationConfig, t: float, basis: TwoLevelBasis | None = None) -> SnapshotResult:
    snap = make_snapshot(config, t, basis)
    fields = potentials_for(snap, external_potential(config, t), config.frac)
    return SnapshotResult(t=float(t), snapshot=snap, fields=fields)


def write_snapshot_csv(path: Path, run_id: str, result: SnapshotResult) -> None:
    x = result.snapshot.grid.x
    t = _fmt(result.t)
    xs = [_fmt(v) for v in x]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for name in FIELD_ORDER:
            f = result.fields[name]
            if isinstance(f, PotentialField):
                vals, flags = f.values, f.repaired
            else:
                vals, flags = f, np.zeros(len(x), dtype=np.int8)
            for xi, v, r in zip(xs, vals, flags):
                w.writerow((run_id, t, xi, name, _fmt(v), int(r)))


class _StagedDir:
    """Directory that only appears at ``target`` once the ``with`` block succeeds."""

    def __init__(self, target: Path):
        self.target = Path(target)
        self.path = self.target.parent / f".{self.target.name}.staging-{os.getpid()}"

    def __enter__(self) -> Path:
        self.target.parent.mkdir(parents=True, exist_ok=True)
        if self.path.exists():
            shutil.rmtree(self.path)
        self.path.mkdir()
        return self.path

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            shutil.rmtree(self.path, ignore_errors=True)
            return False
        old = None
        if self.target.exists():
            old = self.target.parent / f".{self.target.name}.old-{os.getpid()}"
            os.replace(self.target, old)
        os.replace(self.path, self.target)
        if old is not None:
            shutil.rmtree(old, ignore_errors=True)
        return False


def _snapshot_meta(i: int, r: SnapshotResult) -> dict:
    rho = r.snapshot.rho
    meta = {
        "index": i,
        "file": f"snapshot_{i}.csv",
        "t": r.t,
        "rho00": rho.rho00.real,
        "rho11": rho.rho11.real,
        "rho01_re": rho.rho01.real,
        "rho01_im": rho.rho01.imag,
        "rho01_abs": abs(rho.rho01),
        "norm": r.snapshot.norm(),
        "repairs": r.repair_counts(),
    }
    if r.label:
        meta["axis"] = r.label
        meta["value"] = r.value
    return meta


def _manifest(config: SimulationConfig, results, started: float, **extra) -> dict:
    out = {
        "run_id": config.run_id(),
        "code_version": __version__,
        "config": config.to_dict(),
        "gauge": GAUGE,
        "gauge_note": "V_c shifts by a function of t under a change of gauge; "
        "V_c_frac also depends on the gauge through theta^2",
        "comb_mode": config.kicked.comb_mode.value,
        "external_kind": config.external_kind,
        "lindblad_rate": config.gamma,
        "snapshots": [_snapshot_meta(i, r) for i, r in enumerate(results)],
        "wall_time_s": time.perf_counter() - started,
    }
    out.update(extra)
    return out


def _write_manifest(path: Path, manifest: dict) -> None:
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def simulate(config: SimulationConfig, out_dir: str | Path | None = None) -> Path:
    """Compute every configured snapshot time and write a run directory.

    Raises :class:`UnrepairableSingularityError` before anything is written
    if any field cannot be repaired.
    """
    started = time.perf_counter()
    target = Path(out_dir or config.output_dir)
    basis = make_basis(config)
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        results = list(pool.map(lambda t: compute_snapshot(config, t, basis), config.times))
    run_id = config.run_id()
    with _StagedDir(target) as stage:
        for i, r in enumerate(results):
            write_snapshot_csv(stage / f"snapshot_{i}.csv", run_id, r)
        if "svg" in config.formats:
            from .plotting import plot_figure1, plot_correlation

            plot_figure1(results, stage / "figure1_density_ks.svg")
            plot_correlation(results, stage / "figure2_correlation.svg", label="t")
        _write_manifest(stage / "manifest.json", _manifest(config, results, started))
    log.info("wrote %d snapshots to %s", len(results), target)
    return target


def _window_mask(x: np.ndarray, half_width: float = SWEEP_WINDOW) -> np.ndarray:
    return np.abs(x) <= half_width


def sweep_distance(result: SnapshotResult, half_width: float = SWEEP_WINDOW) -> tuple[float, float]:
    """``(sup |Vc~ - Vc|, that / sup |Vc|)`` over ``|x| <= half_width``."""
    w = _window_mask(result.snapshot.grid.x, half_width)
    vc = result.values("V_c")[w]
    diff = float(np.max(np.abs(result.values("V_c_frac")[w] - vc)))
    scale = float(np.max(np.abs(vc)))
    return diff, diff / scale if scale > 0 else float("inf")


def _variant(config: SimulationConfig, axis: str, value: float) -> SimulationConfig:
    from dataclasses import replace

    if axis == "omega":
        return config.with_updates(kicked=replace(config.kicked, omega=value))
    if axis == "K":
        return config.with_updates(kicked=replace(config.kicked, K=value))
    if axis == "alpha":
        return config.with_updates(frac=replace(config.frac, alpha=value))
    raise ValueError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


@dataclass
class SweepOutcome:
    directory: Path
    results: list[SnapshotResult]
    rows: list[tuple]
    failures: list[dict] = field(default_factory=list)


def run_sweep_points(config: SimulationConfig, axis: str, values) -> tuple[list, list, list]:
    """Evaluate one snapshot per sweep value at ``config.sweep_time``.

    Returns ``(results, summary_rows, failures)``; a value whose fields
    cannot be repaired is recorded in ``failures`` with NaN distances.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    values = [float(v) for v in values]
    if not values:
        raise ValueError("sweep needs at least one value")
    t = config.sweep_time
    # density and phase do not depend on any swept parameter
    snap = make_snapshot(config, t)

    def point(value):
        cfg = _variant(config, axis, value)
        try:
            fields = potentials_for(snap, external_potential(cfg, t), cfg.frac)
        except UnrepairableSingularityError as exc:
            return value, None, str(exc), exc.x_range
        return value, SnapshotResult(t, snap, fields, label=axis, value=value), None, None

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        outcomes = list(pool.map(point, values))

    results, rows, failures = [], [], []
    for value, res, err, x_range in outcomes:
        if res is None:
            rows.append((axis, value, float("nan"), float("nan"), -1))
            failures.append({"axis": axis, "value": value, "error": err, "x_range": x_range})
            continue
        sup, rel = sweep_distance(res)
        rows.append((axis, value, sup, rel, res.averaged_points()))
        results.append(res)
    return results, rows, failures


def sweep(config: SimulationConfig, axis: str, values=None, out_dir: str | Path | None = None) -> SweepOutcome:
    started = time.perf_counter()
    if values is None:
        values = {"omega": config.omega_sweep, "K": config.K_sweep, "alpha": config.alpha_sweep}[axis]
    results, rows, failures = run_sweep_points(config, axis, values)
    target = Path(out_dir or config.output_dir)
    run_id = config.run_id()
    with _StagedDir(target) as stage:
        for i, r in enumerate(results):
            write_snapshot_csv(stage / f"snapshot_{i}.csv", run_id, r)
        with open(stage / "sweep_summary.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SUMMARY_HEADER)
            for ax, value, sup, rel, rep in rows:
                w.writerow((ax, _fmt(value), _fmt(sup), _fmt(rel), rep))
        if "svg" in config.formats and results:
            from .plotting import plot_correlation

            plot_correlation(results, stage / f"sweep_{axis}.svg", label=axis)
        _write_manifest(
            stage / "manifest.json",
            _manifest(config, results, started, sweep_axis=axis, sweep_values=[float(v) for v in values], failures=failures),
        )
    return SweepOutcome(target, results, rows, failures)
