import json
import subprocess
import sys

import pytest

from aerialnet.cli import EXIT_CONFIG, EXIT_DATA, EXIT_OK, effective_params, main


def _rows(text):
    return [line for line in text.splitlines() if line and not line.startswith("#")]


def _roc_table(path):
    rows = _rows(path.read_text())
    head = rows[0].split(",")
    return [dict(zip(head, r.split(","))) for r in rows[1:]]


# -- coverage ------------------------------------------------------------

def test_coverage_defaults(tmp_path):
    assert main(["coverage", "--out", str(tmp_path), "--set", "half_extent_m=1000",
                 "--set", "spacing_m=100"]) == EXIT_OK
    text = (tmp_path / "snr_grid.csv").read_text()
    assert "0.000000,0.000000,45.925475" in text
    assert "# thermal_noise_dbm=-103.928268" in text
    assert "# tx_power_dbm=30.0" in text and "# bandwidth_hz=10000000.0" in text
    assert "level_db=40.000000" in (tmp_path / "isolines.txt").read_text()


def test_coverage_without_levels(tmp_path):
    assert main(["coverage", "--out", str(tmp_path), "--levels", "",
                 "--set", "half_extent_m=500", "--set", "spacing_m=100"]) == EXIT_OK
    assert (tmp_path / "snr_grid.csv").exists()
    assert not (tmp_path / "isolines.txt").exists()


def test_coverage_byte_identical(tmp_path):
    args = ["coverage", "--set", "half_extent_m=2000", "--set", "spacing_m=50", "--levels", "20,30"]
    main([*args, "--out", str(tmp_path / "a")])
    main([*args, "--out", str(tmp_path / "b"), "--set", "workers=3"])
    for name in ("snr_grid.csv", "isolines.txt"):
        a = (tmp_path / "a" / name).read_text()
        b = (tmp_path / "b" / name).read_text()
        assert a.replace("# workers=1", "") == b.replace("# workers=3", "")


@pytest.mark.parametrize("override", ["bandwidth_hz=-1", "spacing_m=0", "altitude_m=abc",
                                      "nonsense=1", "noequals"])
def test_coverage_invalid(tmp_path, override, capsys):
    assert main(["coverage", "--out", str(tmp_path), "--set", override]) == EXIT_CONFIG
    assert "error" in capsys.readouterr().err


def test_config_layering(data_dir):
    config = json.loads((data_dir / "example_scenario.json").read_text())
    params = effective_params("coverage", config, ["spacing_m=25"])
    assert params["levels"] == [10.0, 20.0, 30.0, 40.0]
    assert params["spacing_m"] == 25.0
    assert params["tx_power_dbm"] == 30.0


# -- roc ---------------------------------------------------------------------

def test_roc_k4_beats_k1(tmp_path):
    assert main(["roc", "--out", str(tmp_path), "--set", "pfa_points=[0.1]",
                 "--set", "k_nodes=[1,4]"]) == EXIT_OK
    rows = {r["k_nodes"]: float(r["global_pd"]) for r in _roc_table(tmp_path / "roc.csv")}
    assert rows["4"] >= rows["1"]


def test_roc_blind_is_diagonal(tmp_path):
    main(["roc", "--out", str(tmp_path), "--set", "snr_linear=0", "--set", "rules=OR,AND"])
    for r in _roc_table(tmp_path / "roc.csv"):
        assert float(r["global_pd"]) == pytest.approx(float(r["global_pfa"]), abs=1e-6)


def test_roc_simulate_reproducible(tmp_path):
    args = ["roc", "--simulate", "--set", "pfa_points=[0.1,0.5]", "--set", "trials=2000",
            "--seed", "42"]
    main([*args, "--out", str(tmp_path / "a")])
    main([*args, "--out", str(tmp_path / "b")])
    a = (tmp_path / "a" / "roc.csv").read_text()
    assert a == (tmp_path / "b" / "roc.csv").read_text()
    rows = _roc_table(tmp_path / "a" / "roc.csv")
    assert "sim_global_pd" in rows[0]
    for r in rows:
        assert abs(float(r["sim_global_pfa"]) - float(r["global_pfa"])) < 0.05
    main([*args[:-1], "7", "--out", str(tmp_path / "c")])
    assert (tmp_path / "c" / "roc.csv").read_text() != a


@pytest.mark.parametrize("override", ["pfa_points=[0.5,0.1]", "pfa_points=[0,0.5]",
                                      "k_nodes=[0]", "rules=XOR"])
def test_roc_invalid(tmp_path, override):
    assert main(["roc", "--out", str(tmp_path), "--set", override]) == EXIT_CONFIG


def test_negative_seed_rejected(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["roc", "--out", str(tmp_path), "--seed", "-1"])
    assert info.value.code == 2


# -- fuse --------------------------------------------------------------------

def _fuse(capsys, *overrides):
    code = main(["fuse", *sum((["--set", o] for o in overrides), [])])
    out = capsys.readouterr().out
    return code, {r.split(",")[0]: tuple(map(float, r.split(",")[1:])) for r in _rows(out)[1:]}


def test_fuse_example(capsys):
    code, rows = _fuse(capsys)
    assert code == EXIT_OK
    assert rows["OR"] == (0.01, 0.19)
    assert rows["AND"] == (0.19, 0.01)
    assert rows["PRINTED_EQ45"] == (0.19, 0.01)


def test_fuse_single_node_and_perfect_detector(capsys):
    _, rows = _fuse(capsys, "k_nodes=1", "p_d=0.37", "p_fa=0.2")
    assert len(set(rows.values())) == 1
    _, rows = _fuse(capsys, "k_nodes=5", "p_d=1")
    assert all(m == 0.0 for m, _ in rows.values())


@pytest.mark.parametrize("override", ["p_d=1.2", "p_fa=-0.1", "k_nodes=0", "k_nodes=2.5"])
def test_fuse_invalid(capsys, override):
    assert main(["fuse", "--set", override]) == EXIT_CONFIG


# -- rem ---------------------------------------------------------------------

def test_rem_example(tmp_path, data_dir):
    assert main(["rem", "--input", str(data_dir / "example_reports.csv"),
                 "--out", str(tmp_path), "--map", "--set", "map_spacing_m=50"]) == EXIT_OK
    assert _rows((tmp_path / "occupancy.csv").read_text()) == [
        "channel_id,state,probability,reports",
        "1,OCCUPIED,0.333333,3",
        "2,FREE,0.000000,3",
    ]
    grid = _rows((tmp_path / "rem_channel_1.csv").read_text())
    assert grid[0] == "x_m,y_m,rssi_dbm"
    assert "0.000000,0.000000,-80.000000" in grid
    assert "100.000000,0.000000,-100.000000" in grid
    assert "0.000000,100.000000,-98.000000" in grid
    assert (tmp_path / "rem_channel_2.csv").exists()


def test_rem_empty_file(tmp_path, capsys):
    p = tmp_path / "empty.csv"
    p.write_text("")
    assert main(["rem", "--input", str(p), "--out", str(tmp_path)]) == EXIT_DATA


def test_rem_malformed_lines_listed(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("n1,0,0,1,-80,,0\nn2,0,0,1,loud,,0\nn3,0\n")
    assert main(["rem", "--input", str(p), "--out", str(tmp_path)]) == EXIT_DATA
    err = capsys.readouterr().err
    assert "[2, 3]" in err


def test_rem_missing_input(tmp_path):
    assert main(["rem", "--input", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == EXIT_DATA
    assert main(["rem", "--out", str(tmp_path)]) == EXIT_CONFIG


# -- scenario ----------------------------------------------------------------

def test_scenario_example(tmp_path, data_dir):
    cfg = str(data_dir / "example_scenario.json")
    assert main(["scenario", "--config", cfg, "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["scenario", "--input", cfg, "--out", str(tmp_path / "b"),
                 "--set", "workers=4", "--config", cfg]) == EXIT_OK
    a = (tmp_path / "a" / "scenario_report.csv").read_text()
    assert a == (tmp_path / "b" / "scenario_report.csv").read_text()
    rows = [r for r in _rows(a) if r.startswith("ue") and not r.startswith("ue_id")]
    assert len(rows) == 5
    assert all(r.endswith(",aenb1>plrdu1>core,0.246732,true") for r in rows)


def test_scenario_schema_error(tmp_path, data_dir, capsys):
    data = json.loads((data_dir / "example_scenario.json").read_text())
    data["platforms"][0]["altitude_m"] = "up"
    p = tmp_path / "s.json"
    p.write_text(json.dumps(data))
    assert main(["scenario", "--config", str(p), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "platforms[0].altitude_m" in capsys.readouterr().err


def test_scenario_needs_input(tmp_path):
    assert main(["scenario", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["scenario", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "aerialnet", "fuse"], capture_output=True,
                          text=True, check=False)
    assert proc.returncode == 0
    assert "OR,0.010000,0.190000" in proc.stdout
