"""Experiment runner: config handling, CSV format, determinism, exit codes."""

import re

import numpy as np
import pytest

from foliated_flows import checks
from foliated_flows.cli import main

PROVENANCE = re.compile(r"^# config_sha256=[0-9a-f]{64} seed=-?\d+$")


def write_config(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def read_csv(path):
    lines = path.read_text().splitlines()
    assert PROVENANCE.match(lines[0]), lines[0]
    header = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:]]
    return lines[0], header, rows


def test_invariant_run_writes_oracle_comparison(tmp_path):
    cfg = write_config(tmp_path, "manifold = e1\nf_coeffs = 0.3\nn = 128\n")
    assert main(["invariant", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    _, header, rows = read_csv(tmp_path / "invariant.csv")
    assert header == ["t", "phi", "oracle", "abs_err", "sqrt_g"]
    assert len(rows) == 128
    data = np.array(rows, dtype=float)
    assert np.max(np.abs(np.abs(data[:, 1] - data[:, 2]) - data[:, 3])) < 1e-17
    assert data[:, 3].max() < 1e-4
    assert np.all(data[:, 4] > 0.0)


def test_semigroup_run_matches_oracle_column(tmp_path):
    cfg = write_config(tmp_path, (
        "manifold = e1\nf_coeffs = 0.3\nfn = cos_t\nz = 0.4, 0.2\n"
        "t = 0.1\nn_paths = 2000\nseed = 42\n"))
    assert main(["semigroup", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    _, header, rows = read_csv(tmp_path / "semigroup.csv")
    assert header == ["t", "n_paths", "mean", "stderr", "oracle"]
    (t, n_paths, mean, stderr, oracle), = [list(map(float, r)) for r in rows]
    assert (t, n_paths) == (0.1, 2000)
    assert oracle == pytest.approx(
        np.exp(-2 * np.pi ** 2 * 0.1) * np.cos(2 * np.pi * 0.2), rel=1e-15)
    assert abs(mean - oracle) < 4.0 * stderr


def test_reruns_are_byte_identical(tmp_path):
    cfg = write_config(tmp_path, "manifold = e2\nu_coeffs = 0.2\nn = 64\n")
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["invariant", "--config", str(cfg), "--out", str(out_a)]) == 0
    assert main(["invariant", "--config", str(cfg), "--out", str(out_b)]) == 0
    assert (out_a / "invariant.csv").read_bytes() == \
        (out_b / "invariant.csv").read_bytes()


def test_seed_override_changes_digest(tmp_path):
    cfg = write_config(tmp_path, (
        "manifold = e1\nfn = cos_t\nt = 0.05\nn_paths = 50\nk = 6\nseed = 1\n"))
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["semigroup", "--config", str(cfg), "--out", str(out_a)]) == 0
    assert main(["semigroup", "--config", str(cfg), "--out", str(out_b),
                 "--seed", "2"]) == 0
    prov_a = (out_a / "semigroup.csv").read_text().splitlines()[0]
    prov_b = (out_b / "semigroup.csv").read_text().splitlines()[0]
    assert prov_a != prov_b
    assert prov_b.endswith("seed=2")


def test_unknown_key_is_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path, "manifold = e1\nn = 64\nn_pathz = 100\n")
    assert main(["invariant", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "n_pathz" in capsys.readouterr().err


def test_duplicate_key_is_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path, "manifold = e1\nn = 64\nn = 128\n")
    assert main(["invariant", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "duplicate" in capsys.readouterr().err


def test_missing_seed_is_exit_2(tmp_path, capsys):
    cfg = write_config(tmp_path, "manifold = e1\nfn = cos_t\nn_paths = 10\n")
    assert main(["semigroup", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "seed" in capsys.readouterr().err


def test_missing_config_file_is_exit_2(tmp_path, capsys):
    missing = tmp_path / "nope.cfg"
    assert main(["invariant", "--config", str(missing),
                 "--out", str(tmp_path)]) == 2
    assert "not found" in capsys.readouterr().err


def test_nonpositive_value_is_exit_2(tmp_path):
    cfg = write_config(tmp_path, "manifold = e1\nn = -4\n")
    assert main(["invariant", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_carriere_rejects_e1(tmp_path, capsys):
    cfg = write_config(tmp_path, "manifold = e1\nf_coeffs = 0.3\n")
    assert main(["carriere", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "e2" in capsys.readouterr().err


def test_carriere_emits_moment_and_cell_tables(tmp_path):
    cfg = write_config(tmp_path, (
        "manifold = e2\nu_coeffs = 0.2\nn = 512\nm_max = 2\ncells = 8\n"))
    assert main(["carriere", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    _, header, rows = read_csv(tmp_path / "carriere_moments.csv")
    assert header == ["f", "lhs", "rhs", "deviation", "f0", "c"]
    assert [r[0] for r in rows] == ["one", "sin1", "cos1", "sin2", "cos2"]
    assert max(float(r[3]) for r in rows) < 1e-4
    _, header2, rows2 = read_csv(tmp_path / "carriere_cells.csv")
    assert header2 == ["alpha", "beta", "mu", "lebesgue_over_mu", "h_over_c",
                       "deviation"]
    assert len(rows2) == 8


def test_dilate_run_flattens_curvature(tmp_path):
    cfg = write_config(tmp_path, "manifold = e2\nu_coeffs = 0.2\nn = 512\n")
    assert main(["dilate", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    _, header, rows = read_csv(tmp_path / "dilate.csv")
    assert header == ["t", "phi_base", "log_psi", "kappa_dilated",
                      "delta_kappa", "phi_dilated"]
    data = np.array(rows, dtype=float)
    L = np.log((3.0 + np.sqrt(5.0)) / 2.0)
    assert np.max(np.abs(data[:, 3] - L)) < 1e-4      # curvature pinned at L
    assert np.max(np.abs(data[:, 4])) < 1e-3          # harmonicity defect
    assert np.max(np.abs(data[:, 5] - 1.0)) < 1e-4    # re-solved density is 1


def test_flow_run_emits_trajectory_and_convergence(tmp_path):
    cfg = write_config(tmp_path, (
        "manifold = e1\nf_coeffs = 0.3\nk = 3, 4, 5\nt_final = 0.5\n"
        "stride = 64\nseed = 9\n"))
    assert main(["flow", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    _, header, rows = read_csv(tmp_path / "flow.csv")
    assert header == ["time", "z0", "z1", "sheet0", "sheet1", "ortho_residual"]
    data = np.array(rows, dtype=float)
    assert data[0, 0] == 0.0 and data[-1, 0] == 0.5
    assert data[:, 5].max() < 1e-8
    _, header2, rows2 = read_csv(tmp_path / "flow_convergence.csv")
    assert header2 == ["k", "t_final", "endpoint_gap_to_finest"]
    assert [int(r[0]) for r in rows2] == [3, 4, 5]
    assert float(rows2[-1][2]) == 0.0    # finest level compares to itself


def test_verify_run_reports_every_check(tmp_path, capsys):
    cfg = write_config(tmp_path, "scope = geometry\nn_paths = 50\nseed = 0\n")
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "checks passed" in out
    assert "FAIL" not in out
    _, header, rows = read_csv(tmp_path / "verify.csv")
    assert header == ["name", "scope", "residual", "tolerance", "passed"]
    assert all(r[1] == "geometry" for r in rows)
    assert all(r[4] == "1" for r in rows)


def test_verify_failure_is_exit_1(tmp_path, capsys, monkeypatch):
    def doomed(scope="all", n_paths=2000, seed=None):
        return [checks.CheckResult(name="doomed", scope="geometry",
                                   residual=1.0, tolerance=1e-6)]

    monkeypatch.setattr("foliated_flows.cli.run_checks", doomed)
    cfg = write_config(tmp_path, "scope = geometry\nseed = 0\n")
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path)]) == 1
    assert "FAIL geometry/doomed" in capsys.readouterr().out
