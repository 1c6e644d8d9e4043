import json
import os

import numpy as np
import pytest
import yaml

from conftest import CONFIG_PATH
from helpers import records_to_csv, synth_records
from spinbath.cli import (
    EXIT_CONFIG,
    EXIT_DATA,
    EXIT_OK,
    EXIT_UNIDENTIFIABLE,
    main,
)


@pytest.fixture(autouse=True)
def pinned_clock(monkeypatch):
    """Freeze the manifest timestamp so byte comparisons are meaningful."""
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")


def run_cli(*argv) -> int:
    return main([str(a) for a in argv])


def test_spectrum_writes_results_and_manifest(tmp_path):
    code = run_cli(
        "spectrum", "--config", CONFIG_PATH, "--out", tmp_path, "--points", "64"
    )
    assert code == EXIT_OK
    assert (tmp_path / "spectrum.csv").exists()
    assert (tmp_path / "spectrum_summary.json").exists()
    manifest = json.loads((tmp_path / "spectrum_manifest.json").read_text())
    assert manifest["command"] == "spectrum"
    assert manifest["seed"] == 0
    assert "spectrum.csv" in manifest["outputs"]
    assert len(manifest["config_hash"]) == 64


def test_spectrum_deterministic_bytes(tmp_path):
    for d in ("a", "b"):
        code = run_cli(
            "spectrum",
            "--config", CONFIG_PATH,
            "--out", tmp_path / d,
            "--points", "64",
        )
        assert code == EXIT_OK
    for name in ("spectrum.csv", "spectrum_summary.json", "spectrum_manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (
            tmp_path / "b" / name
        ).read_bytes()


def test_spectrum_csv_values_reingest(tmp_path):
    from spinbath.io import write_csv

    code = run_cli(
        "spectrum", "--config", CONFIG_PATH, "--out", tmp_path, "--points", "32"
    )
    assert code == EXIT_OK
    path = tmp_path / "spectrum.csv"
    header_line, *rows = path.read_text().strip().split("\n")
    header = tuple(header_line.split(","))
    values = [tuple(float(x) for x in row.split(",")) for row in rows]
    rewritten = tmp_path / "rewritten.csv"
    write_csv(rewritten, header, values)
    assert rewritten.read_bytes() == path.read_bytes()


def test_missing_config_is_config_error(tmp_path):
    code = run_cli(
        "spectrum", "--config", tmp_path / "absent.yaml", "--out", tmp_path
    )
    assert code == EXIT_CONFIG


def test_invalid_config_value(tmp_path):
    tree = yaml.safe_load(CONFIG_PATH.read_text())
    tree["geometry"]["d_nv_nm"] = -1.0
    bad = tmp_path / "bad.yaml"
    bad.write_text(yaml.safe_dump(tree))
    code = run_cli("spectrum", "--config", bad, "--out", tmp_path)
    assert code == EXIT_CONFIG


def test_tau_ee_requires_lattice_block(tmp_path):
    tree = yaml.safe_load(CONFIG_PATH.read_text())
    del tree["lattice"]
    trimmed = tmp_path / "nolattice.yaml"
    trimmed.write_text(yaml.safe_dump(tree))
    code = run_cli("tau-ee", "--config", trimmed, "--out", tmp_path)
    assert code == EXIT_CONFIG


def test_t1_malformed_csv_is_data_error(tmp_path):
    data = tmp_path / "t1.csv"
    data.write_text("nv_id,b_gauss\nNV1,231\n")
    code = run_cli(
        "t1", "--config", CONFIG_PATH, "--out", tmp_path, "--data", data
    )
    assert code == EXIT_DATA


def test_t1_empty_csv_is_ok(tmp_path):
    data = tmp_path / "t1.csv"
    data.write_text("")
    code = run_cli(
        "t1", "--config", CONFIG_PATH, "--out", tmp_path, "--data", data
    )
    assert code == EXIT_OK
    table = (tmp_path / "t1_table.csv").read_text()
    assert table.count("\n") == 1  # header only


def test_t1_table_contents(tmp_path, small_model, geometry):
    rng = np.random.default_rng(21)
    records = synth_records(small_model, geometry, 2e-9, 0.75, rng, noise=0.02)
    data = tmp_path / "t1.csv"
    records_to_csv(records, data)
    code = run_cli(
        "t1", "--config", CONFIG_PATH, "--out", tmp_path, "--data", data
    )
    assert code == EXIT_OK
    header, *rows = (tmp_path / "t1_table.csv").read_text().strip().split("\n")
    assert "delta_gamma_per_s" in header
    assert len(rows) == len(records)
    manifest = json.loads((tmp_path / "t1_manifest.json").read_text())
    assert str(data) in manifest["input_hashes"]


def test_fit_single_point_unidentifiable(tmp_path, small_model, geometry):
    rng = np.random.default_rng(2)
    records = synth_records(
        small_model, geometry, 2e-9, 0.75, rng, fields=(231.0,)
    )
    data = tmp_path / "t1.csv"
    records_to_csv(records, data)
    code = run_cli(
        "fit",
        "--config", CONFIG_PATH,
        "--out", tmp_path,
        "--data", data,
        "--free", "tau_e,theta_e",
        "--grid", "16",
    )
    assert code == EXIT_UNIDENTIFIABLE


def test_decay_fit_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    t_us = np.geomspace(10.0, 3e4, 36)
    truth = dict(a=0.9, t1_us=3000.0, iota=1.0, c=0.05)
    y = truth["a"] * np.exp(-(t_us / truth["t1_us"]) ** truth["iota"]) + truth["c"]
    y += 0.01 * rng.standard_normal(y.size)
    data = tmp_path / "decay.csv"
    lines = ["t_us,signal,sigma"]
    lines += [f"{float(t)!r},{float(v)!r},0.01" for t, v in zip(t_us, y)]
    data.write_text("\n".join(lines) + "\n")
    code = run_cli(
        "decay-fit", "--config", CONFIG_PATH, "--out", tmp_path, "--data", data
    )
    assert code == EXIT_OK
    payload = json.loads((tmp_path / "decay_fit.json").read_text())
    assert payload["T1"] == pytest.approx(3e-3, rel=0.15)
    assert payload["iota"] == pytest.approx(1.0, abs=0.15)
    assert payload["T1_us"] == pytest.approx(payload["T1"] * 1e6)


def test_decay_fit_flat_curve_unidentifiable(tmp_path):
    data = tmp_path / "decay.csv"
    lines = ["t_us,signal,sigma"]
    lines += [f"{t},0.5,0.01" for t in range(1, 31)]
    data.write_text("\n".join(lines) + "\n")
    code = run_cli(
        "decay-fit", "--config", CONFIG_PATH, "--out", tmp_path, "--data", data
    )
    assert code == EXIT_UNIDENTIFIABLE
