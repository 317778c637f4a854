import csv
import json
import math

import numpy as np
import pytest

from fracks import cli
from fracks.config import SimulationConfig, parse_config_text
from fracks.errors import UnrepairableSingularityError
from fracks.pipeline import (
    CSV_HEADER,
    FIELD_ORDER,
    SUMMARY_HEADER,
    THREADS_ENV,
    run_sweep_points,
    simulate,
    sweep,
)

CSV_ONLY = SimulationConfig().with_updates(formats=("csv",))


def read_blocks(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    blocks = {}
    for run_id, t, x, name, value, repaired in body:
        blocks.setdefault(name, []).append((float(x), float(value), int(repaired), t, run_id))
    return tuple(header), blocks


@pytest.fixture(scope="module")
def default_run(tmp_path_factory):
    return simulate(SimulationConfig(), tmp_path_factory.mktemp("runs") / "default")


class TestSimulate:
    def test_layout(self, default_run):
        names = sorted(p.name for p in default_run.iterdir())
        assert names == [
            "figure1_density_ks.svg",
            "figure2_correlation.svg",
            "manifest.json",
            "snapshot_0.csv",
            "snapshot_1.csv",
            "snapshot_2.csv",
            "snapshot_3.csv",
        ]
        assert not any(p.name.startswith(".") for p in default_run.parent.iterdir())

    def test_blocks_are_complete(self, default_run):
        n_pts = SimulationConfig().grid.n_points
        for i, t in enumerate(SimulationConfig().times):
            header, blocks = read_blocks(default_run / f"snapshot_{i}.csv")
            assert header == CSV_HEADER
            assert tuple(blocks) == FIELD_ORDER
            for rows in blocks.values():
                assert len(rows) == n_pts
                assert all(math.isfinite(v) for _, v, _, _, _ in rows)
                assert {r[3] for r in rows} == {format(t, ".17g")}

    def test_text_format(self, default_run):
        raw = (default_run / "snapshot_1.csv").read_bytes()
        assert b"\r" not in raw
        line = raw.split(b"\n")[1].decode().split(",")
        assert float(line[1]) == math.pi / 4
        assert line[0] == SimulationConfig().run_id()

    def test_manifest(self, default_run):
        m = json.loads((default_run / "manifest.json").read_text())
        assert m["run_id"] == SimulationConfig().run_id()
        assert m["gauge"] == "theta(x_min, t) = 0"
        assert m["comb_mode"] == "gaussian-comb"
        assert [s["file"] for s in m["snapshots"]] == [f"snapshot_{i}.csv" for i in range(4)]
        for s in m["snapshots"]:
            assert s["norm"] == pytest.approx(1.0, abs=1e-6)
            assert set(s["repairs"]) == {"V_ext", "V_c", "V_c_frac", "V_KS", "V_KS_frac"}
        assert m["config"]["frac"]["alpha"] == 0.3
        assert m["wall_time_s"] >= 0

    def test_ground_state_column(self, tmp_path):
        cfg = parse_config_text(
            "[times]\nvalues = 0\n[dephasing]\ngamma = 0\nrho = 1, 0, 0, 0\n"
            "[external]\nkind = harmonic\nomega = 1\n[output]\nformats = csv\n"
        )
        out = simulate(cfg, tmp_path / "gs")
        _, blocks = read_blocks(out / "snapshot_0.csv")
        errs = [abs(v - (x * x / 2 - 0.5)) for x, v, _, _, _ in blocks["V_KS"] if abs(x) <= 3]
        assert max(errs) < 1e-4

    def test_closed_system_keeps_coherence(self, tmp_path):
        cfg = CSV_ONLY.with_updates(gamma0=0.0, gamma1=0.0)
        m = json.loads((simulate(cfg, tmp_path / "closed") / "manifest.json").read_text())
        coh = [s["rho01_abs"] for s in m["snapshots"]]
        assert max(coh) - min(coh) < 1e-14

    def test_csv_is_deterministic(self, tmp_path):
        a = simulate(CSV_ONLY, tmp_path / "a")
        b = simulate(CSV_ONLY, tmp_path / "b")
        for i in range(4):
            assert (a / f"snapshot_{i}.csv").read_bytes() == (b / f"snapshot_{i}.csv").read_bytes()

    def test_svg_is_deterministic(self, default_run, tmp_path):
        again = simulate(SimulationConfig(), tmp_path / "again")
        for name in ("figure1_density_ks.svg", "figure2_correlation.svg"):
            assert (again / name).read_bytes() == (default_run / name).read_bytes()

    def test_thread_count_does_not_change_output(self, tmp_path, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "1")
        one = simulate(CSV_ONLY, tmp_path / "one")
        monkeypatch.setenv(THREADS_ENV, "4")
        four = simulate(CSV_ONLY, tmp_path / "four")
        assert (one / "snapshot_3.csv").read_bytes() == (four / "snapshot_3.csv").read_bytes()


STRICT = CSV_ONLY.with_updates(frac=parse_config_text("[frac]\nbranch = strict\n").frac)


class TestAtomicity:
    def test_failure_leaves_nothing(self, tmp_path):
        with pytest.raises(UnrepairableSingularityError) as err:
            simulate(STRICT, tmp_path / "strict")
        assert err.value.x_range is not None
        assert list(tmp_path.iterdir()) == []

    def test_failure_keeps_previous_run(self, tmp_path):
        target = tmp_path / "run"
        simulate(CSV_ONLY, target)
        before = (target / "snapshot_0.csv").read_bytes()
        with pytest.raises(UnrepairableSingularityError):
            simulate(STRICT, target)
        assert (target / "snapshot_0.csv").read_bytes() == before
        assert [p.name for p in tmp_path.iterdir()] == ["run"]


class TestSweep:
    def test_omega_relative_distance_decreases(self):
        _, rows, failures = run_sweep_points(CSV_ONLY, "omega", [0.5, 1.0, 1.5, 2.0, 3.0])
        assert not failures
        rel = [r[3] for r in rows]
        assert all(b < a for a, b in zip(rel, rel[1:]))

    def test_duplicated_value_gives_identical_blocks(self, tmp_path):
        out = sweep(CSV_ONLY, "K", [0.0, 0.0], tmp_path / "k")
        assert (out.directory / "snapshot_0.csv").read_bytes() == (out.directory / "snapshot_1.csv").read_bytes()

    def test_summary_file(self, tmp_path):
        out = sweep(SimulationConfig(), "alpha", [0.3, 0.5, 0.7], tmp_path / "alpha")
        with open(out.directory / "sweep_summary.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert tuple(rows[0]) == SUMMARY_HEADER
        assert [r[1] for r in rows[1:]] == ["0.29999999999999999", "0.5", "0.69999999999999996"]
        assert all(int(r[4]) >= 0 for r in rows[1:])
        assert (out.directory / "sweep_alpha.svg").exists()
        m = json.loads((out.directory / "manifest.json").read_text())
        assert m["sweep_axis"] == "alpha" and m["failures"] == []

    def test_principal_real_alpha_sweep(self):
        cfg = CSV_ONLY.with_updates(frac=parse_config_text("[frac]\nbranch = principal-real\n").frac)
        results, rows, failures = run_sweep_points(cfg, "alpha", [0.3, 0.4, 0.5, 0.6, 0.7])
        assert not failures and len(results) == 5
        assert all(math.isfinite(r[2]) for r in rows)

    def test_strict_branch_flags_failures(self, tmp_path):
        out = sweep(STRICT, "alpha", [0.3, 0.7], tmp_path / "s")
        assert len(out.failures) == 2
        assert all(r[4] == -1 and math.isnan(r[2]) for r in out.rows)
        assert out.failures[0]["x_range"][0] < out.failures[0]["x_range"][1]

    def test_bad_axis_and_empty(self):
        with pytest.raises(ValueError):
            run_sweep_points(CSV_ONLY, "tau", [1.0])
        with pytest.raises(ValueError):
            run_sweep_points(CSV_ONLY, "omega", [])


def write_ini(tmp_path, text, name="c.ini"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


class TestCli:
    def test_simulate_ok(self, tmp_path, capsys):
        cfg = write_ini(tmp_path, "[times]\nvalues = 0\n[output]\nformats = csv\n")
        assert cli.main(["simulate", cfg, "--out", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "snapshot_0.csv").exists()
        assert str(tmp_path / "o") in capsys.readouterr().out

    def test_config_error(self, tmp_path):
        cfg = write_ini(tmp_path, "[grid]\nbogus = 1\n")
        assert cli.main(["simulate", cfg, "--out", str(tmp_path / "o")], quiet=True) == 2
        assert cli.main(["simulate", str(tmp_path / "missing.ini")], quiet=True) == 2
        assert not (tmp_path / "o").exists()

    def test_singularity_exit(self, tmp_path, capsys):
        cfg = write_ini(tmp_path, "[frac]\nbranch = strict\n[output]\nformats = csv\n")
        assert cli.main(["simulate", cfg, "--out", str(tmp_path / "o")]) == 3
        assert "alpha=0.3" in capsys.readouterr().err
        assert not (tmp_path / "o").exists()
        assert cli.main(["sweep", cfg, "--axis", "alpha", "--values", "0.3", "--out", str(tmp_path / "s")]) == 3

    def test_sweep_values_flag(self, tmp_path):
        cfg = write_ini(tmp_path, "[output]\nformats = csv\n")
        assert cli.main(["sweep", cfg, "--axis", "omega", "--values", "0.5, pi/2", "--out", str(tmp_path / "s")]) == 0
        with open(tmp_path / "s" / "sweep_summary.csv") as fh:
            values = [float(r["value"]) for r in csv.DictReader(fh)]
        assert values == [0.5, math.pi / 2]

    def test_ml(self, capsys):
        assert cli.main(["ml", "--alpha", "0.5", "--re", "1"]) == 0
        re_part, im_part = capsys.readouterr().out.split()
        assert float(re_part) == pytest.approx(5.00898008076228346630982459821, rel=1e-13)
        assert im_part == "+0j"
        assert cli.main(["ml", "--alpha", "1.5", "--re", "1"], quiet=True) == 2

    def test_invalid_thread_env(self, tmp_path, monkeypatch):
        cfg = write_ini(tmp_path, "[times]\nvalues = 0\n[output]\nformats = csv\n")
        monkeypatch.setenv(THREADS_ENV, "zero")
        assert cli.main(["simulate", cfg, "--out", str(tmp_path / "o")], quiet=True) == 2
        monkeypatch.setenv(THREADS_ENV, "0")
        assert cli.main(["simulate", cfg, "--out", str(tmp_path / "o")], quiet=True) == 2

    def test_unknown_axis_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["sweep", "x.ini", "--axis", "tau"])
        assert exc.value.code == 2


def test_repaired_flags_are_consistent(default_run):
    _, blocks = read_blocks(default_run / "snapshot_0.csv")
    for name in ("n", "theta"):
        assert {r[2] for r in blocks[name]} == {0}
    flags = np.array([r[2] for r in blocks["V_KS_frac"]])
    assert set(flags) <= {0, 1, 2}
