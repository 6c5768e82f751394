"""
End-to-end tests of the neumann_bounds command line
"""

import math

import pandas as pd
import pytest
import yaml

import cli.commands as commands
from cli.commands import main
from cli.config import build_run_config, sweep_values
from utils.config_loader import get_numerics_config, get_scenarios, load_yaml_config
from utils.errors import ConfigError

J11_PRIME_SQ = 1.8411837813406593 ** 2


def write_config(tmp_path, data, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return str(path)


def test_bound_ellipse_to_csv(tmp_path):
    out = tmp_path / "ellipse.csv"
    assert main(["bound", "--scenario", "ellipse-2-1", "--out", str(out)]) == 0
    frame = pd.read_csv(out)
    assert len(frame) == 1
    assert frame.loc[0, "method"] == "theorem-A"
    assert frame.loc[0, "bound"] == pytest.approx(J11_PRIME_SQ / 4, rel=1e-12)
    assert frame.loc[0, "upper_bound"] == pytest.approx(J11_PRIME_SQ / 2, rel=1e-12)


def test_bound_rectangle_text(tmp_path):
    out = tmp_path / "rect.txt"
    assert main(["bound", "--scenario", "rect-3-1", "--out", str(out), "--format", "text"]) == 0
    text = out.read_text(encoding="utf-8")
    assert f"bound={math.pi ** 2 / 9!r}" in text
    assert "domain=Box(3,1)" in text


def test_bound_to_stdout(capsys):
    assert main(["bound", "--scenario", "rect-3-1"]) == 0
    assert capsys.readouterr().out.startswith("domain,method,variant,")


def test_unknown_config_key_exits_1(tmp_path, capsys):
    path = write_config(tmp_path, {"run": {"bogus": 1}, "scenario": "rect-3-1"})
    assert main(["bound", "--config", path]) == 1
    assert "error:" in capsys.readouterr().err


def test_unknown_scenario_exits_1(capsys):
    assert main(["bound", "--scenario", "torus"]) == 1
    assert "unknown scenario" in capsys.readouterr().err


def test_missing_config_file_exits_1(tmp_path):
    assert main(["bound", "--config", str(tmp_path / "absent.yaml")]) == 1


def test_bad_subcommand_exits_1():
    assert main(["frobnicate"]) == 1
    assert main(["bound", "--threads", "many"]) == 1


def test_inapplicable_mapping_exits_2(tmp_path, capsys):
    path = write_config(tmp_path, {
        "scenario": {
            "source": {"kind": "SimplexH1", "dim": 3},
            "mapping": {"kind": "CuspMap", "a": 0.5, "exponents": [2.0, 2.0]},
        },
    })
    assert main(["bound", "--config", path]) == 2
    assert "unbounded" in capsys.readouterr().err


def test_printed_variant_exits_2(tmp_path):
    path = write_config(tmp_path, {"run": {"variant": "paper-printed"}, "scenario": "cusp-2-2"})
    assert main(["bound", "--config", path]) == 2


def test_validate_rectangle(capsys):
    assert main(["validate", "--scenario", "rect-3-1"]) == 0
    out = capsys.readouterr().out
    assert "PASS: lower <= oracle + slack" in out
    assert "FAIL" not in out


def test_validate_ellipse_writes_checks(tmp_path):
    out = tmp_path / "checks.csv"
    assert main(["validate", "--scenario", "ellipse-2-1", "--out", str(out)]) == 0
    frame = pd.read_csv(out)
    assert list(frame["status"]) == ["PASS", "PASS"]


def test_oracle_failure_exits_3(tmp_path, capsys):
    path = write_config(tmp_path, {
        "scenario": "rect-3-1",
        "numerics": {"eig_tol": 1.0e-300},
        "oracle": {"resolutions": [8, 16]},
    })
    assert main(["validate", "--config", path]) == 3
    assert "residual" in capsys.readouterr().err


def test_ordering_violation_exits_4(tmp_path, capsys):
    # an overridden base eigenvalue pushes the bound above the spectrum
    path = write_config(tmp_path, {
        "scenario": "rect-3-1",
        "run": {"mu_base": 100.0},
        "oracle": {"resolutions": [16, 32]},
    })
    assert main(["validate", "--config", path]) == 4
    assert "ordering violated" in capsys.readouterr().err


def test_oracle_table_and_operator(tmp_path):
    out = tmp_path / "spectrum.csv"
    operator = tmp_path / "K.mtx"
    path = write_config(tmp_path, {
        "scenario": "rect-3-1",
        "oracle": {"resolutions": [8, 16], "k": 2},
        "output": {"operator": str(operator)},
    })
    assert main(["oracle", "--config", path, "--out", str(out)]) == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["method", "h", "dof", "mu0", "mu1", "mu2", "res0", "res1", "res2"]
    assert list(frame["dof"]) == [64, 256]
    assert operator.read_text(encoding="utf-8").startswith("%%MatrixMarket")


def test_gamma_sweep_is_monotone_and_deterministic(tmp_path):
    data = {"scenario": "cusp-2-2", "sweep": {"axis": "gamma", "values": [1.5, 2.0, 3.0]}}
    path = write_config(tmp_path, data)
    serial, parallel = tmp_path / "serial.csv", tmp_path / "parallel.csv"
    assert main(["sweep", "--config", path, "--out", str(serial), "--threads", "1"]) == 0
    assert main(["sweep", "--config", path, "--out", str(parallel), "--threads", "2"]) == 0
    assert serial.read_text(encoding="utf-8") == parallel.read_text(encoding="utf-8")
    frame = pd.read_csv(serial)
    assert list(frame["gamma"]) == [1.5, 2.0, 3.0]
    assert frame["bound"].is_monotonic_decreasing


def test_r_sweep_keeps_inapplicable_rows(tmp_path, capsys):
    path = write_config(tmp_path, {"scenario": "cusp-2-2", "sweep": {"axis": "r", "values": [3.0, 5.0, 5.9]}})
    out = tmp_path / "r.csv"
    assert main(["sweep", "--config", path, "--out", str(out)]) == 0
    frame = pd.read_csv(out)
    assert frame.loc[0, "method"] == "inapplicable"
    assert frame.loc[1:, "bound"].notna().all()
    assert "best r = " in capsys.readouterr().err


def test_sweep_writes_a_plot(tmp_path):
    plot = tmp_path / "plots" / "a.png"
    path = write_config(tmp_path, {
        "scenario": "cusp-2-2",
        "sweep": {"axis": "a", "values": [0.31, 0.32, 0.33]},
        "output": {"path": str(tmp_path / "a.csv"), "plot": str(plot)},
    })
    assert main(["sweep", "--config", path]) == 0
    assert plot.read_bytes().startswith(b"\x89PNG")


def test_empty_sweep_exits_1(tmp_path):
    path = write_config(tmp_path, {"scenario": "cusp-2-2", "sweep": {"axis": "a", "values": []}})
    assert main(["sweep", "--config", path]) == 1


def test_sweep_axis_needs_a_cusp(tmp_path):
    path = write_config(tmp_path, {"scenario": "rect-3-1", "sweep": {"axis": "gamma", "values": [2.0]}})
    assert main(["sweep", "--config", path]) == 1


def test_sweep_grids():
    assert sweep_values({"start": 1.0, "stop": 3.0, "points": 3}) == [1.0, 2.0, 3.0]
    assert sweep_values({"start": 1.0, "stop": 100.0, "points": 3, "spacing": "log"}) == pytest.approx([1.0, 10.0, 100.0])
    with pytest.raises(ConfigError):
        sweep_values({"values": [1.0], "start": 0.0})
    with pytest.raises(ConfigError):
        sweep_values({"start": 0.0, "stop": 1.0, "points": 3, "spacing": "log"})


def test_flags_override_the_config_file():
    cfg = build_run_config("bound", {"run": {"threads": 2, "seed": 5}, "scenario": "disc"},
                           threads=4, seed=9, fmt="text")
    assert cfg.threads == 4
    assert cfg.seed == 9
    assert cfg.numerics["seed"] == 9
    assert cfg.output_format == "text"
    assert cfg.scenario_name == "disc"


def test_scenario_defaults_fill_the_oracle_block():
    cfg = build_run_config("oracle", {"scenario": "rect-3-1", "oracle": {"k": 3}})
    assert cfg.oracle.method == "fd-box"
    assert cfg.oracle.resolutions == [64.0, 128.0]
    assert cfg.oracle.k == 3


def test_fractional_cell_counts_are_rejected():
    with pytest.raises(ConfigError):
        build_run_config("oracle", {"scenario": "rect-3-1", "oracle": {"resolutions": [8.5, 16]}})


def test_reproduce(capsys):
    assert main(["reproduce"]) == 0
    out = capsys.readouterr().out
    assert "KNOWN-DISCREPANCY" in out
    assert "FAIL" not in out


def test_reproduce_mismatch_exits_4(monkeypatch):
    pins = [{"quantity": "bessel-first-zero-n2", "label": "shifted", "published": 1.9,
             "check": "abs", "tolerance": 1e-6}]
    monkeypatch.setattr(commands, "load_pins", lambda: pins)
    assert main(["reproduce"]) == 4


@pytest.mark.slow
@pytest.mark.parametrize("scenario", [
    "rect-3-1", "ellipse-2-1", "cusp-2-2", "ball-ellipsoid-211", "cube-parallelepiped", "simplex-h1", "disc",
])
def test_validate_scenarios(scenario):
    assert main(["validate", "--scenario", scenario]) == 0


def test_default_config_files_load():
    numerics = get_numerics_config()
    assert numerics["eig_tol"] == 1.0e-8
    assert numerics["jacobian_method"] == "closed-form"
    assert {"rect-3-1", "ellipse-2-1", "cusp-2-2"} <= set(get_scenarios())


def test_config_loader_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_yaml_config(str(tmp_path / "absent.yaml"))
    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_yaml_config(str(listing))
    empty = tmp_path / "empty.yaml"
    empty.write_text("", encoding="utf-8")
    assert load_yaml_config(str(empty)) == {}


def test_bound_with_the_classical_interval(tmp_path):
    out = tmp_path / "ellipse.csv"
    path = write_config(tmp_path, {"scenario": "ellipse-2-1", "run": {"classical": True}})
    assert main(["bound", "--config", path, "--out", str(out)]) == 0
    frame = pd.read_csv(out)
    assert list(frame["method"]) == ["theorem-A", "payne-weinberger", "szego-weinberger"]
    assert frame.loc[1, "bound"] == pytest.approx(math.pi ** 2 / 16)
    assert frame.loc[2, "bound"] == pytest.approx(J11_PRIME_SQ / 2, rel=1e-12)


def test_classical_interval_needs_p_2(tmp_path):
    path = write_config(tmp_path, {"scenario": "ball-ellipsoid-211", "run": {"classical": True, "p": 3.0}})
    assert main(["bound", "--config", path]) == 2


def test_numeric_defaults_come_from_the_config_directory(tmp_path):
    (tmp_path / "bounds_config.yaml").write_text(
        yaml.safe_dump({"numerics": {"eig_tol": 1.0e-6, "a_grid_points": 32}}), encoding="utf-8")
    (tmp_path / "scenarios.yaml").write_text(
        yaml.safe_dump({"square": {"source": {"kind": "Box", "sides": [1.0, 1.0]},
                                   "mapping": {"kind": "Identity", "dim": 2}}}), encoding="utf-8")
    cfg = build_run_config("bound", {"scenario": "square", "numerics": {"a_grid_points": 16}},
                           config_dir=str(tmp_path))
    assert cfg.numerics["eig_tol"] == 1.0e-6
    assert cfg.numerics["a_grid_points"] == 16
    assert cfg.pipeline_options().a_grid_points == 16


@pytest.mark.parametrize("r_grid", [[7.0], [3.0, 6.0], [2.0]])
def test_out_of_range_r_grid_is_a_config_error(tmp_path, capsys, r_grid):
    path = write_config(tmp_path, {"scenario": "cusp-2-2", "run": {"r_grid": r_grid}})
    assert main(["bound", "--config", path]) == 1
    assert "r_grid" in capsys.readouterr().err
    with pytest.raises(ConfigError):
        build_run_config("bound", {"scenario": "cusp-2-2", "run": {"r_grid": r_grid}})


def test_planar_r_grid_has_no_upper_end():
    cfg = build_run_config("bound", {"scenario": "rect-3-1", "run": {"r_grid": [2.5, 40.0]}})
    assert cfg.r_grid == [2.5, 40.0]
