"""End-to-end CLI behavior: configs, file formats, seeds, exit codes."""

import json
import os

import numpy as np
import pytest
import yaml

from driftlab import DEFAULT_SEED, TimeGrid
from driftlab.cli import main


def write_config(tmp_path, payload, name="config.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(payload))
    return str(path)


def read_csv_columns(path):
    with open(path, "r", encoding="utf-8") as handle:
        header = handle.readline().strip().split(",")
        data = np.loadtxt(handle, delimiter=",", ndmin=2)
    return {name: data[:, i] for i, name in enumerate(header)}


def gbm_payload(**overrides):
    payload = {
        "scenario": {
            "kind": "gbm",
            "sigma": 0.5,
            "drift": {"polynomial": [0.0, 1.0]},
            "correlation": {"kind": "identity"},
        },
        "grid": {"horizon": 1.0, "subintervals": 50},
        "copies": 2,
        "reps": 3,
        "pipeline": "mean-b",
        "seed": 7,
    }
    payload.update(overrides)
    return payload


# --- simulate -------------------------------------------------------------------


def test_simulate_small_noise_gbm_matches_mean(tmp_path, capsys):
    config = write_config(tmp_path, gbm_payload(scenario={
        "kind": "gbm",
        "sigma": 1e-8,
        "drift": {"polynomial": [0.0, 1.0]},
        "correlation": {"kind": "identity"},
    }))
    assert main(["simulate", "--config", config, "--out", str(tmp_path)]) == 0
    out_path = capsys.readouterr().out.strip()
    assert out_path == str(tmp_path / "ensemble.csv")
    columns = read_csv_columns(out_path)
    assert sorted(columns) == ["t", "x1", "x2"]
    t = columns["t"]
    np.testing.assert_allclose(t, TimeGrid(1.0, 50).points, atol=1e-15)
    for name in ("x1", "x2"):
        assert np.abs(columns[name] - t**2 / 2).max() <= 1e-6


def test_simulate_noiseless_particles_write_zeros(tmp_path, capsys):
    config = write_config(tmp_path, {
        "scenario": {
            "kind": "particles",
            "start": 0.0,
            "sigma": 0.0,
            "drift": {"polynomial": [0.0]},
        },
        "grid": {"horizon": 1.0, "subintervals": 20},
        "copies": 2,
        "reps": 1,
        "pipeline": "ips-backtransform",
    })
    assert main(["simulate", "--config", config, "--out", str(tmp_path)]) == 0
    columns = read_csv_columns(capsys.readouterr().out.strip())
    np.testing.assert_array_equal(columns["x1"], 0.0)
    np.testing.assert_array_equal(columns["x2"], 0.0)


# --- estimate -------------------------------------------------------------------


def test_simulate_then_estimate_round_trip(tmp_path, capsys):
    config = write_config(tmp_path, gbm_payload())
    assert main(["simulate", "--config", config, "--out", str(tmp_path)]) == 0
    data_path = capsys.readouterr().out.strip()
    assert main([
        "estimate", "--config", config, "--data", data_path, "--out", str(tmp_path)
    ]) == 0
    est_path = capsys.readouterr().out.strip()
    assert est_path == str(tmp_path / "estimate.csv")
    data = read_csv_columns(data_path)
    est = read_csv_columns(est_path)
    # the CSV floats round-trip exactly, so the estimate equals the mean of
    # the stored copies bit for bit
    mean = (data["x1"] + data["x2"]) / 2.0
    np.testing.assert_array_equal(est["b_hat"], mean)


def test_estimate_on_known_path_returns_it(tmp_path, capsys):
    grid = TimeGrid(1.0, 20)
    lines = ["t,x1"] + [
        f"{repr(float(t))},{repr(float(t * t))}" for t in grid.points
    ]
    data_path = tmp_path / "ensemble.csv"
    data_path.write_text("\n".join(lines) + "\n")
    config = write_config(tmp_path, gbm_payload(
        copies=1, grid={"horizon": 1.0, "subintervals": 20}
    ))
    assert main([
        "estimate", "--config", config, "--data", str(data_path), "--out", str(tmp_path)
    ]) == 0
    est = read_csv_columns(capsys.readouterr().out.strip())
    np.testing.assert_array_equal(est["b_hat"], grid.points**2)


def test_estimate_with_selection_on_flat_path(tmp_path, capsys):
    grid = TimeGrid(1.0, 50)
    lines = ["t,x1"] + [f"{repr(float(t))},0.0" for t in grid.points]
    data_path = tmp_path / "flat.csv"
    data_path.write_text("\n".join(lines) + "\n")
    config = write_config(tmp_path, gbm_payload(
        copies=1,
        pipeline="derivative-with-selection",
        estimator={"max_dim": 6},
        selection={"candidates": {"from": 2, "to": 6}},
    ))
    assert main([
        "estimate", "--config", config, "--data", str(data_path), "--out", str(tmp_path)
    ]) == 0
    paths = capsys.readouterr().out.strip().splitlines()
    assert paths == [str(tmp_path / "estimate.csv"), str(tmp_path / "selection.json")]
    est = read_csv_columns(paths[0])
    # flat data: all coefficients vanish, so the penalty picks the smallest
    # dimension and both estimates are flat
    np.testing.assert_array_equal(est["b_prime_hat"], 0.0)
    np.testing.assert_allclose(est["tt_b_hat"], 0.125, atol=1e-15)
    selection = json.loads((tmp_path / "selection.json").read_text())
    assert selection["m_hat"] == 2
    assert selection["candidates"] == [2, 3, 4, 5, 6]
    assert len(selection["criterion"]) == 5
    assert selection["rate"] == pytest.approx(0.25)


def test_estimate_rejects_mismatched_data(tmp_path, capsys):
    config = write_config(tmp_path, gbm_payload())
    assert main(["simulate", "--config", config, "--out", str(tmp_path)]) == 0
    data_path = capsys.readouterr().out.strip()
    wrong_grid = write_config(
        tmp_path, gbm_payload(grid={"horizon": 1.0, "subintervals": 25}), "wrong1.yaml"
    )
    assert main([
        "estimate", "--config", wrong_grid, "--data", data_path, "--out", str(tmp_path)
    ]) == 1
    wrong_copies = write_config(tmp_path, gbm_payload(copies=3), "wrong2.yaml")
    assert main([
        "estimate", "--config", wrong_copies, "--data", data_path, "--out", str(tmp_path)
    ]) == 1
    bad = tmp_path / "bad.csv"
    bad.write_text("time,x1\n0.0,1.0\n")
    assert main([
        "estimate", "--config", config, "--data", str(bad), "--out", str(tmp_path)
    ]) == 1


# --- experiment -----------------------------------------------------------------


def test_experiment_outputs_are_consistent(tmp_path, capsys):
    config = write_config(tmp_path, gbm_payload())
    assert main(["experiment", "--config", config, "--out", str(tmp_path)]) == 0
    csv_path, json_path = capsys.readouterr().out.strip().splitlines()
    rows = (tmp_path / "report.csv").read_text().strip().splitlines()
    assert rows[0] == "rep,mise,m_hat"
    assert len(rows) == 4
    mises = [float(line.split(",")[1]) for line in rows[1:]]
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["mean_mise"] == pytest.approx(np.mean(mises), abs=1e-12)
    assert summary["std_mise"] == pytest.approx(np.std(mises, ddof=1), abs=1e-12)
    assert summary["reps"] == 3 and summary["copies"] == 2
    assert summary["seed"] == 7
    assert summary["pipeline"] == "mean-b"
    assert summary["single_rep"] is False
    assert summary["mean_m_hat"] is None


def test_seed_precedence(tmp_path, capsys, monkeypatch):
    def summary_seed(config_payload, *args):
        config = write_config(tmp_path, config_payload, "seeded.yaml")
        assert main([
            "experiment", "--config", config, "--out", str(tmp_path), *args
        ]) == 0
        capsys.readouterr()
        return json.loads((tmp_path / "summary.json").read_text())["seed"]

    base = {"canned": {"family": "ips"}, "reps": 1}
    monkeypatch.delenv("DRIFTLAB_SEED", raising=False)
    assert summary_seed(base) == DEFAULT_SEED
    monkeypatch.setenv("DRIFTLAB_SEED", "9")
    assert summary_seed(base) == 9
    assert summary_seed({**base, "seed": 5}) == 5
    assert summary_seed({**base, "seed": 5}, "--seed", "3") == 3


def test_summary_config_echo_reproduces_the_run(tmp_path, capsys, monkeypatch):
    monkeypatch.delenv("DRIFTLAB_SEED", raising=False)
    config = write_config(tmp_path, gbm_payload())
    first_dir, second_dir = tmp_path / "first", tmp_path / "second"
    assert main(["experiment", "--config", config, "--out", str(first_dir)]) == 0
    capsys.readouterr()
    echo = json.loads((first_dir / "summary.json").read_text())["config"]
    config2 = write_config(tmp_path, echo, "echo.yaml")
    assert main(["experiment", "--config", config2, "--out", str(second_dir)]) == 0
    capsys.readouterr()
    assert (first_dir / "report.csv").read_bytes() == (second_dir / "report.csv").read_bytes()
    one = json.loads((first_dir / "summary.json").read_text())
    two = json.loads((second_dir / "summary.json").read_text())
    one.pop("runtime_seconds"), two.pop("runtime_seconds")
    assert one == two


def test_experiment_thread_count_does_not_change_results(tmp_path, capsys):
    config = write_config(tmp_path, gbm_payload())
    serial_dir, pooled_dir = tmp_path / "serial", tmp_path / "pooled"
    assert main([
        "experiment", "--config", config, "--out", str(serial_dir), "--threads", "1"
    ]) == 0
    assert main([
        "experiment", "--config", config, "--out", str(pooled_dir), "--threads", "4"
    ]) == 0
    capsys.readouterr()
    assert (serial_dir / "report.csv").read_bytes() == (pooled_dir / "report.csv").read_bytes()
    one = json.loads((serial_dir / "summary.json").read_text())
    two = json.loads((pooled_dir / "summary.json").read_text())
    one.pop("runtime_seconds"), two.pop("runtime_seconds")
    assert one == two


def test_experiment_table1_writes_all_cells(tmp_path, capsys):
    config = write_config(tmp_path, {"reps": 2, "seed": 3})
    assert main([
        "experiment", "--config", config, "--table1", "--out", str(tmp_path)
    ]) == 0
    paths = capsys.readouterr().out.strip().splitlines()
    assert len(paths) == 5
    for hurst in (0.6, 0.9):
        for delta in (1, 2):
            assert (tmp_path / f"report_table1_h{hurst}_d{delta}.csv").exists()
    payload = json.loads((tmp_path / "summary_table1.json").read_text())
    assert sorted(payload["cells"]) == [
        "hurst=0.6,delta=1", "hurst=0.6,delta=2",
        "hurst=0.9,delta=1", "hurst=0.9,delta=2",
    ]
    for cell in payload["cells"].values():
        assert cell["reps"] == 2 and cell["seed"] == 3


# --- report ----------------------------------------------------------------------


def test_report_renders_table1_grid_and_footnote(tmp_path, capsys):
    config = write_config(tmp_path, {"reps": 2})
    assert main([
        "experiment", "--config", config, "--table1", "--out", str(tmp_path)
    ]) == 0
    capsys.readouterr()
    summary_path = str(tmp_path / "summary_table1.json")
    assert main(["report", summary_path]) == 0
    text = capsys.readouterr().out
    assert "| H \\ delta | delta=1 | delta=2 |" in text
    assert "| H=0.6 |" in text and "| H=0.9 |" in text
    assert "Seeds are not uniform" not in text
    # a second summary with a different seed triggers the footnote
    other = write_config(tmp_path, gbm_payload(seed=123, label="extra"), "other.yaml")
    assert main(["experiment", "--config", other, "--out", str(tmp_path / "o")]) == 0
    capsys.readouterr()
    assert main([
        "report", summary_path, str(tmp_path / "o" / "summary.json"),
        "--out", str(tmp_path),
    ]) == 0
    report_path = capsys.readouterr().out.strip()
    assert report_path == str(tmp_path / "report.md")
    text = (tmp_path / "report.md").read_text()
    assert "| extra |" in text
    assert "Seeds are not uniform" in text
    assert "- seed 123: extra" in text


# --- calibrate -------------------------------------------------------------------


def test_calibrate_writes_sweep(tmp_path, capsys):
    config = write_config(tmp_path, {
        "canned": {"family": "table2", "gamma": 0.0}, "reps": 2, "seed": 1
    })
    assert main([
        "calibrate", "--config", config, "--out", str(tmp_path),
        "--constants", "0.5,1",
    ]) == 0
    payload = json.loads((tmp_path / "calibration.json").read_text())
    assert payload["constants"] == [0.5, 1.0]
    assert payload["chosen"] in payload["constants"]
    assert len(payload["mean_mises"]) == 2
    assert payload["slack"] == 1.1
    capsys.readouterr()


def test_calibrate_rejects_wrong_pipeline(tmp_path, capsys):
    config = write_config(tmp_path, {"canned": {"family": "ips"}, "reps": 1})
    assert main(["calibrate", "--config", config, "--out", str(tmp_path)]) == 1
    capsys.readouterr()


# --- validation and exit codes ------------------------------------------------------


def test_unknown_config_key_exits_1(tmp_path, capsys):
    config = write_config(tmp_path, gbm_payload(bogus=1))
    assert main(["experiment", "--config", config, "--out", str(tmp_path)]) == 1
    assert "bogus" in capsys.readouterr().err


def test_missing_config_file_exits_2(tmp_path, capsys):
    missing = str(tmp_path / "nope.yaml")
    assert main(["experiment", "--config", missing, "--out", str(tmp_path)]) == 2
    assert "i/o error" in capsys.readouterr().err


def test_missing_required_argument_exits_1(tmp_path, capsys):
    assert main(["experiment", "--out", str(tmp_path)]) == 1
    assert "error" in capsys.readouterr().err


def test_canned_config_rejects_scenario_extras(tmp_path, capsys):
    payload = {"canned": {"family": "ips"}, "copies": 10, "reps": 1}
    config = write_config(tmp_path, payload)
    assert main(["experiment", "--config", config, "--out", str(tmp_path)]) == 1
    assert "canned" in capsys.readouterr().err


def test_config_requires_exactly_one_source(tmp_path, capsys):
    both = write_config(tmp_path, {
        "canned": {"family": "ips"}, **gbm_payload()
    })
    assert main(["experiment", "--config", both, "--out", str(tmp_path)]) == 1
    neither = write_config(tmp_path, {"reps": 1}, "neither.yaml")
    assert main(["experiment", "--config", neither, "--out", str(tmp_path)]) == 1
    capsys.readouterr()


def test_unwritable_output_directory_exits_2(tmp_path, capsys):
    if os.geteuid() == 0:
        pytest.skip("running as root: directory permissions are not enforced")
    config = write_config(tmp_path, gbm_payload())
    locked = tmp_path / "locked"
    locked.mkdir()
    locked.chmod(0o500)
    try:
        assert main(["experiment", "--config", config, "--out", str(locked)]) == 2
    finally:
        locked.chmod(0o700)
    capsys.readouterr()
