import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from layerlab import cli
from layerlab.config import ConfigError, RunConfig, dump_config, parse_config, parse_config_text
from layerlab.interval import SolverError
from layerlab.tables import read_table


def test_defaults():
    cfg = parse_config()
    assert cfg == RunConfig()
    assert cfg.epsilon_list[0] == 2.0**-6 and cfg.epsilon_list[-1] == 2.0**-14
    assert cfg.z_max == 32.0 and cfg.threshold == 0.1 and cfg.delta == 0.25


def test_power_syntax_and_comments():
    cfg = parse_config_text("# header\nmodel.epsilon_list = 2^-6, 2**-7  # trailing\ngrid.z_max = 40\n")
    assert cfg.epsilon_list == (2.0**-6, 2.0**-7)
    assert cfg.z_max == 40.0


def test_negative_v_star_names_line():
    with pytest.raises(ConfigError) as exc:
        parse_config_text("model.T = 0.1\n\nmodel.v_star = -1\n")
    assert exc.value.line == 3
    assert "v_star" in str(exc.value)


@pytest.mark.parametrize("text, line", [
    ("model.nope = 1", 1),
    ("model.T = 1\nmodel.T = 2", 2),
    ("grid.n = 1.5", 1),
    ("time.n_out = zero", 1),
    ("model.epsilon_list = 1e-3, 1e-2", 1),
    ("grid.z_max = 20", 1),
    ("justtext", 1),
    ("a.b.c = 1", 1),
    ("analysis.strict_resolution = maybe", 1),
])
def test_bad_lines(text, line):
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text)
    assert exc.value.line == line


def test_round_trip():
    cfg = parse_config_text("model.epsilon_list = 0.1, 0.01\nmodel.v_star = 2.5\ngrid.grading = tanh\n"
                            "grid.stretch = 2\noutput.trajectories = yes\n")
    assert parse_config_text(dump_config(cfg)) == cfg


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "none.cfg")


def test_exit_code_config_error(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("model.v_star = -1\n")
    assert cli.main(["check", "--config", str(cfg), "--out", str(tmp_path), "--quiet"]) == 2


def test_exit_code_usage(tmp_path):
    assert cli.main(["frobnicate"]) == 2
    assert cli.main(["solve-full", "--eps", "0", "--out", str(tmp_path), "--quiet"]) == 2
    assert cli.main(["solve-full", "--eps", "abc", "--out", str(tmp_path), "--quiet"]) == 2


def test_exit_code_numerical_abort(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise SolverError("solve_full", 1, 7, 0.1)

    monkeypatch.setattr(cli, "solve_full", boom)
    assert cli.main(["solve-full", "--eps", "0.01", "--out", str(tmp_path), "--quiet"]) == 3


def test_check_passes_and_echoes_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("grid.z_max = 36\n")
    assert cli.main(["check", "--config", str(cfg), "--out", str(tmp_path), "--quiet"]) == 0
    echo = parse_config(tmp_path / "config.echo")
    assert echo.z_max == 36.0
    assert "FAIL" not in (tmp_path / "invariants.txt").read_text()
    assert (tmp_path / "compatibility.txt").read_text().count("pass") >= 10


def test_check_flags_incompatible_data(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("model.v_star = 0\n")
    # paper_poly8 ties v0 to v_star, so v_star = 0 stays compatible
    assert cli.main(["check", "--config", str(cfg), "--out", str(tmp_path), "--quiet"]) == 0


def test_solve_full_and_outer_tables(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("model.T = 0.01\ngrid.n = 64\n")
    assert cli.main(["solve-full", "--config", str(cfg), "--eps", "2^-6", "--out", str(tmp_path), "--quiet"]) == 0
    files = list(tmp_path.glob("full_eps*.csv"))
    assert len(files) == 1
    header, table = read_table(files[0])
    assert header == ["t", "x", "u", "v"] and table.shape == (21 * 65, 4)
    assert cli.main(["solve-outer", "--config", str(cfg), "--out", str(tmp_path), "--quiet"]) == 0
    header, _ = read_table(tmp_path / "outer.csv")
    assert header[:5] == ["t", "x", "u", "v", "phi"]


def test_sweep_writes_report(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("model.T = 0.01\nmodel.epsilon_list = 2^-6, 2^-7, 2^-8\n")
    code = cli.main(["sweep", "--config", str(cfg), "--out", str(tmp_path), "--quiet"])
    assert code == 0
    summary = json.loads((tmp_path / "report.json").read_text())
    assert set(summary["acceptance_bands"]) >= {"slope_E_v", "slope_E_u", "thickness_left"}
    header, table = read_table(tmp_path / "report.csv")
    assert table.shape[0] == 3


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1e-8, 1.0), min_size=1, max_size=6, unique=True), st.floats(0.0, 50.0),
       st.floats(1e-3, 10.0), st.integers(1, 200), st.booleans())
def test_round_trip_property(eps, v_star, T, n_out, strict):
    cfg = RunConfig(epsilon_list=tuple(sorted(eps, reverse=True)), v_star=v_star, T=T, n_out=n_out,
                    strict_resolution=strict)
    assert parse_config_text(dump_config(cfg)) == cfg
