import math
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fracks.config import SimulationConfig, load_config, parse_config_text, parse_list, parse_number
from fracks.errors import ConfigError
from fracks.fractional_kernel import PowerBranchMode

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.mark.parametrize(
    "text, value",
    [("pi/4", math.pi / 4), ("0.5*pi", math.pi / 2), ("-2", -2.0), ("1e-4", 1e-4), ("2*(1+pi)", 2 * (1 + math.pi))],
)
def test_parse_number(text, value):
    assert parse_number(text) == value


@pytest.mark.parametrize("text", ["__import__('os')", "abs(2)", "x", "2**10", "", "1,2"])
def test_parse_number_rejects(text):
    with pytest.raises(ConfigError):
        parse_number(text)


def test_parse_list():
    assert parse_list("0, pi/4, pi/2, pi") == (0.0, math.pi / 4, math.pi / 2, math.pi)
    assert parse_list(" 1 ,2,") == (1.0, 2.0)


@given(st.lists(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=1, max_size=8))
def test_parse_list_roundtrip(values):
    assert parse_list(", ".join(repr(v) for v in values)) == tuple(values)


def test_default_file_matches_defaults():
    cfg = load_config(CONFIGS / "default.ini")
    assert cfg == SimulationConfig()
    assert cfg.run_id() == SimulationConfig().run_id()


def test_ground_state_example():
    cfg = load_config(CONFIGS / "ground_state.ini")
    assert cfg.times == (0.0,)
    assert cfg.gamma == 0.0
    assert cfg.rho0.rho00 == 1 and cfg.rho0.rho11 == 0
    assert cfg.external_kind == "harmonic" and cfg.kicked.omega == 1.0


def test_empty_text_gives_defaults():
    assert parse_config_text("") == SimulationConfig()


@pytest.mark.parametrize(
    "text",
    [
        "[nonsense]\na = 1\n",
        "[grid]\nspacing = 0.1\n",
        "[times]\nvalues = 1, 0.5\n",
        "[times]\nvalues = -1, 0\n",
        "[times]\nvalues = 0, 0\n",
        "[grid]\nn_points = 80.5\n",
        "[dephasing]\nrho = 0.5, 0.5, 0.5\n",
        "[dephasing]\nrho = 0.5, 0.4, 0.5, 0.5\n",
        "[dephasing]\nrho = 0.5, 0.9, 0.9, 0.5\n",
        "[dephasing]\ngamma0 = -1\n",
        "[frac]\nalpha = 1.5\n",
        "[frac]\nbranch = sideways\n",
        "[external]\ncomb_mode = always\n",
        "[external]\nkind = square\n",
        "[output]\nformats = csv, pdf\n",
        "not an ini file",
    ],
)
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")


def test_gamma_shortcut_and_rate():
    cfg = parse_config_text("[dephasing]\ngamma = 0.4\n")
    assert cfg.gamma0 == cfg.gamma1 == 0.4
    assert cfg.gamma == pytest.approx(0.4)


def test_keys_are_case_sensitive():
    cfg = parse_config_text("[external]\nK = 2\nk = 3\n")
    assert cfg.kicked.K == 2.0 and cfg.kicked.k == 3.0


def test_comb_width_follows_tau():
    base = parse_config_text("[external]\nsigma_t = 0.5\n")
    assert base.kicked.sigma_t == 0.5
    moved = parse_config_text("[external]\ntau = 0.2\n", base=base)
    assert moved.kicked.sigma_t == pytest.approx(0.2 / 50)


def test_branch_and_coherence_phase():
    cfg = parse_config_text("[frac]\nbranch = principal-real\n[dephasing]\nrho = 0.5, 0.3, 0.3, 0.5\nrho01_imag = 0.25\n")
    assert cfg.frac.branch is PowerBranchMode.PRINCIPAL_REAL
    assert cfg.rho0.rho01 == complex(0.3, 0.25)
    assert cfg.rho0.rho10 == complex(0.3, -0.25)
    with pytest.raises(ConfigError):
        parse_config_text("[dephasing]\nrho01_imag = 0.25\n")  # pure default state has no room


def test_run_id_ignores_output_only():
    a = SimulationConfig()
    assert a.with_updates(output_dir="elsewhere", formats=("csv",)).run_id() == a.run_id()
    assert a.with_updates(sweep_time=1.0).run_id() != a.run_id()
    assert len(a.run_id()) == 12
