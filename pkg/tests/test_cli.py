import json

import pytest

from jchsim.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, EXIT_VERIFY, main, sweep_points
from jchsim.errors import ConfigError


def _yaml(tmp_path, text, name="doc.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _payloads(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir()) if not p.name.endswith(".meta.json")}


# -- build -------------------------------------------------------------------------


def test_build_typical_device(tmp_path, capsys):
    code = main(["build", "--set", "device.preset=typical_device", "--subspace", "N=1", "--out", str(tmp_path)])
    assert code == EXIT_OK
    text = capsys.readouterr().out
    assert "dimension 256" in text and "g = 100 MHz" in text and "J = 30, 30 MHz" in text
    assert "subspace dimension 8" in text
    build = json.loads((tmp_path / "build.json").read_text())
    assert build["dimension"] == 256
    assert build["coupling"]["hoppings_J_MHz"] == [30.0, 30.0]
    assert build["hermiticity_error"] < 1e-12


def test_build_malformed_document(tmp_path, capsys):
    doc = _yaml(tmp_path, "device:\n  preset: typical_device\n  photon_cutoff: lots\n")
    assert main(["build", "--config", doc, "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "device.photon_cutoff" in capsys.readouterr().err


def test_build_bad_subspace(tmp_path):
    assert main(["build", "--set", "device.preset=typical_device", "--subspace", "many",
                 "--out", str(tmp_path)]) == EXIT_CONFIG


# -- derive ------------------------------------------------------------------------


def test_derive_dispersive_soc(tmp_path, capsys):
    assert main(["derive", "--set", "device.preset=dispersive_soc", "--out", str(tmp_path)]) == EXIT_OK
    assert "10 MHz" in capsys.readouterr().out
    model = json.loads((tmp_path / "effective_model.json").read_text())
    assert model["warnings"]


def test_derive_resonant_is_singular(tmp_path, capsys):
    doc = _yaml(tmp_path, """
device:
  site: {qubit_freqs: [4000], mode_freqs: [4000], couplings: [[100]], qubit_labels: [down]}
  coupling: {hoppings: [30]}
""")
    assert main(["derive", "--config", doc, "--out", str(tmp_path / "o")]) == EXIT_NUMERICAL
    assert "elimination singular" in capsys.readouterr().err


def test_derive_frequency_mismatch(tmp_path, capsys):
    code = main(["derive", "--set", "device.preset=typical_device", "--set", "device.drives=" + json.dumps([
        {"site": 0, "spin": "down", "mode": 1, "amplitude": 100, "frequency": 800},
        {"site": 1, "spin": "up", "mode": 1, "amplitude": 100, "frequency": 2200},
        {"site": 0, "spin": "up", "mode": 2, "amplitude": 100, "frequency": 800},
        {"site": 1, "spin": "down", "mode": 2, "amplitude": 100, "frequency": 4800}]),
        "--out", str(tmp_path)])
    assert code == EXIT_NUMERICAL
    assert "ω1+ω2 ≠ ω↑−ω↓" in capsys.readouterr().err


# -- run ---------------------------------------------------------------------------


def test_run_interferometry_writes_verdicts(tmp_path, capsys):
    code = main(["run", "--set", "scenario.name=soc_interferometry", "--set", "scenario.parameters.n_random=3",
                 "--out", str(tmp_path)])
    assert code == EXIT_OK
    result = json.loads((tmp_path / "soc_interferometry.json").read_text())
    assert any("flux" in v["name"] for v in result["verdicts"])
    assert result["provenance"]["configuration"]["scenario"]["name"] == "soc_interferometry"
    assert "PASS" in capsys.readouterr().out


def test_run_hardcore_reports_counts(tmp_path):
    assert main(["run", "--set", "scenario.name=hardcore_obstruction", "--out", str(tmp_path), "--quiet"]) == 0
    scalars = json.loads((tmp_path / "hardcore_obstruction.json").read_text())["scalars"]
    assert scalars["jc_two_excitation_dimension"]["value"] == 2
    assert scalars["spin_model_double_occupancy_dimension"]["value"] == 3


def test_run_unknown_scenario(tmp_path, capsys):
    assert main(["run", "--set", "scenario.name=warp_drive", "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "static_elimination" in capsys.readouterr().err


def test_run_failing_verdict_exits_three(tmp_path):
    code = main(["run", "--set", "scenario.name=static_elimination", "--set", "scenario.tolerances.hop=0",
                 "--out", str(tmp_path), "--quiet"])
    assert code == EXIT_VERIFY


# -- sweep -------------------------------------------------------------------------


def test_sweep_points_cartesian_order():
    names, points = sweep_points({"parameters": {"a": [1, 2], "b": {"start": 0, "stop": 1, "num": 3}}})
    assert names == ["a", "b"]
    assert points == [(1, 0.0), (1, 0.5), (1, 1.0), (2, 0.0), (2, 0.5), (2, 1.0)]
    with pytest.raises(ConfigError):
        sweep_points({"parameters": {"a": []}})


def test_sweep_error_grows_and_is_job_independent(tmp_path):
    base = ["sweep", "--set", "scenario.name=static_elimination",
            "--set", "sweep.parameters.g_over_delta={start: 0.05, stop: 0.25, num: 5}", "--quiet"]
    assert main(base + ["--out", str(tmp_path / "serial")]) == EXIT_OK
    assert main(base + ["--jobs", "2", "--out", str(tmp_path / "parallel")]) == EXIT_OK
    assert _payloads(tmp_path / "serial") == _payloads(tmp_path / "parallel")
    lines = (tmp_path / "serial" / "sweep.csv").read_text().splitlines()
    header = lines[0].split(",")
    col = header.index("max_energy_error")
    errors = [float(line.split(",")[col]) for line in lines[1:]]
    assert len(errors) == 5 and errors == sorted(errors)


def test_sweep_empty_range(tmp_path):
    code = main(["sweep", "--set", "scenario.name=static_elimination",
                 "--set", "sweep.parameters.g_over_delta={start: 0.1, stop: 0.2, num: 0}", "--out", str(tmp_path)])
    assert code == EXIT_CONFIG


def test_bad_jobs(tmp_path):
    assert main(["sweep", "--set", "scenario.name=static_elimination", "--set",
                 "sweep.parameters.g_over_delta=[0.1]", "--jobs", "0", "--out", str(tmp_path)]) == EXIT_CONFIG


# -- verify ------------------------------------------------------------------------


def test_verify_filter_runs_only_selected(tmp_path, capsys):
    assert main(["verify", "--filter", "hardcore", "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "verification.json").read_text())
    assert [c["criterion"] for c in report["checks"]] == [7]
    assert "criterion 7" in capsys.readouterr().out


def test_verify_zero_tolerance_fails(tmp_path, capsys):
    code = main(["verify", "--filter", "floquet", "--set", "verify.tolerances.floquet.rashba=0",
                 "--out", str(tmp_path)])
    assert code == EXIT_VERIFY
    assert "FAIL" in capsys.readouterr().out


def test_verify_unknown_filter(tmp_path):
    assert main(["verify", "--filter", "teleportation", "--out", str(tmp_path)]) == EXIT_CONFIG


# -- general -----------------------------------------------------------------------


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["build", "--set", "device.preset=typical_device", "--out", str(blocker / "sub")]) == EXIT_CONFIG


def test_bad_arguments():
    assert main(["frobnicate"]) == EXIT_CONFIG
    assert main([]) == EXIT_CONFIG


def test_reruns_byte_identical(tmp_path):
    for k in range(2):
        out = str(tmp_path / f"r{k}")
        main(["build", "--set", "device.preset=typical_device", "--out", out, "--quiet"])
        main(["derive", "--set", "device.preset=typical_device", "--out", out, "--quiet"])
        main(["run", "--set", "scenario.name=polariton_branches", "--out", out, "--quiet"])
    assert _payloads(tmp_path / "r0") == _payloads(tmp_path / "r1")


def test_example_configs_validate():
    from pathlib import Path

    from jchsim.config import load_config

    configs = sorted((Path(__file__).parent.parent / "configs").glob("*.yaml"))
    assert configs
    for path in configs:
        load_config(path)
