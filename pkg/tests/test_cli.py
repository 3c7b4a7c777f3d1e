"""Command-line front end: exit codes, artifacts, determinism."""

import csv
import json

import numpy as np
import pytest

from finsler_area.cli import main


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path), "--quiet"])


def load_json(tmp_path, name):
    return json.loads((tmp_path / name).read_text())


class TestCheckMetric:
    def test_euclidean_passes(self, tmp_path):
        assert run(tmp_path, "check-metric", "--kind", "euclidean") == 0
        rep = load_json(tmp_path, "check_metric_report.json")
        assert rep["verdict"] == "finsler"
        assert rep["f_min"] == pytest.approx(1.0, abs=1e-12)
        assert rep["f_max"] == pytest.approx(1.0, abs=1e-12)

    def test_supercritical_drift_fails_ga(self, tmp_path):
        code = run(tmp_path, "check-metric", "--kind", "randers",
                   "--b", "0,0,0.7", "--ga", "--grid", "48")
        assert code == 1
        rep = load_json(tmp_path, "check_metric_report.json")
        assert rep["verdict"] != "finsler"
        assert rep["symmetrized"]["verdict"] != "finsler"

    def test_inline_metric_json(self, tmp_path):
        spec = json.dumps({"kind": "randers", "dim": 3,
                           "params": {"b": [0, 0, 0.5]}})
        assert run(tmp_path, "check-metric", "--metric", spec) == 0

    def test_unknown_kind_is_usage_error(self, tmp_path):
        assert run(tmp_path, "check-metric", "--kind", "kropina") == 2

    def test_missing_metric_is_usage_error(self, tmp_path):
        assert run(tmp_path, "check-metric") == 2


class TestScans:
    def test_integrand_scan_axis_row(self, tmp_path):
        assert run(tmp_path, "integrand-scan", "--kind", "randers",
                   "--b", "0,0,0.5", "--grid", "16") == 0
        with (tmp_path / "integrand_scan.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        first = {(r["Z1"], r["Z2"], r["Z3"]): float(r["area_integrand"])
                 for r in rows[:6]}
        assert first[("1", "0", "0")] == pytest.approx(0.64952, abs=1e-5)
        assert first[("0", "0", "1")] == pytest.approx(1.0, rel=1e-10)

    def test_ellipticity_scan_verdict(self, tmp_path):
        assert run(tmp_path, "ellipticity-scan", "--kind", "randers",
                   "--b", "0,0,0.5", "--grid", "16") == 0
        assert run(tmp_path, "ellipticity-scan", "--kind", "randers",
                   "--b", "0,0,0.65", "--grid", "16") == 1

    def test_threshold_scan_report(self, tmp_path):
        assert run(tmp_path, "threshold-scan", "--family", "matsumoto",
                   "--grid", "64", "--tol", "0.004") == 0
        rep = load_json(tmp_path, "threshold_report.json")
        assert rep["threshold"] == pytest.approx(0.5, abs=5e-3)

    def test_symmetrize_artifacts(self, tmp_path):
        assert run(tmp_path, "symmetrize", "--kind", "randers",
                   "--b", "0,0,0.5", "--grid", "16") == 0
        rep = load_json(tmp_path, "symmetrize_report.json")
        assert rep["even_defect"] <= 1e-12
        assert (tmp_path / "symmetrize_grid.csv").exists()


class TestSolveAndVerify:
    def test_solve_graph_affine(self, tmp_path):
        code = run(tmp_path, "solve-graph", "--kind", "randers", "--b", "0,0,0.4",
                   "--mesh", "disk:8", "--boundary", "affine:0.3,-0.2,0.1")
        assert code == 0
        rep = load_json(tmp_path, "graph_solution_report.json")
        assert rep["residual"] <= 1e-10
        assert rep["max_principle"]["holds"]
        rows = (tmp_path / "graph_solution.csv").read_text().splitlines()
        assert rows[0] == "u1,u2,f"
        assert len(rows) == rep["n_vertices"] + 1

    def test_verify_isop(self, tmp_path):
        code = run(tmp_path, "verify-isop", "--kind", "randers", "--b", "0,0,0.2",
                   "--mesh", "disk:8", "--boundary", "cosine_wave:0.2")
        assert code == 0
        rep = load_json(tmp_path, "isop_report.json")
        assert rep["inequalities"]["isop1"]["holds"]
        assert rep["inequalities"]["isop2"]["holds"]
        assert rep["convex_hull"]["max_violation"] <= 1e-6


class TestFunkRoundtrip:
    def test_roundtrip_report(self, tmp_path):
        assert run(tmp_path, "funk-roundtrip", "--band", "6", "--seed", "4") == 0
        rep = load_json(tmp_path, "funk_roundtrip_report.json")
        assert rep["sup_error"] <= 1e-8


class TestPlumbing:
    @pytest.mark.parametrize("command", [
        "check-metric", "symmetrize", "threshold-scan", "integrand-scan",
        "ellipticity-scan", "solve-graph", "verify-isop", "funk-roundtrip"])
    def test_selftests_pass(self, tmp_path, command):
        assert run(tmp_path, command, "--selftest") == 0

    def test_byte_identical_reruns(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for out in (a, b):
            assert main(["integrand-scan", "--kind", "randers", "--b", "0,0,0.3",
                         "--grid", "16", "--seed", "7", "--out", str(out),
                         "--quiet"]) == 0
        assert (a / "integrand_scan.csv").read_bytes() == \
            (b / "integrand_scan.csv").read_bytes()
        assert (a / "integrand_scan_report.json").read_bytes() == \
            (b / "integrand_scan_report.json").read_bytes()

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"kind": "randers", "b": "0,0,0.9"}))
        # flag wins over the config value
        code = main(["check-metric", "--config", str(cfg), "--b", "0,0,0.2",
                     "--ga", "--grid", "32", "--out", str(tmp_path), "--quiet"])
        assert code == 0

    def test_unknown_config_field_rejected(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"kind": "euclidean", "mystery": True}))
        assert main(["check-metric", "--config", str(cfg),
                     "--out", str(tmp_path), "--quiet"]) == 2

    def test_nonpositive_tolerance_rejected(self, tmp_path):
        assert run(tmp_path, "threshold-scan", "--tol", "-1") == 2
