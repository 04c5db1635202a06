"""CLI front end: config handling, reports, exit codes, determinism."""

import json
import os

import pytest

from qhm.cli import ConfigError, _parse_kv, load_config, main


def run(tmp_path, *argv):
    out = tmp_path / "out"
    code = main([*argv, "--out", str(out)])
    return code, out


class TestConfigParsing:
    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            _parse_kv("bogus = 1\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError):
            _parse_kv("seed = 1\nseed = 2\n")

    def test_comments_and_blanks_ignored(self):
        assert _parse_kv("# comment\n\nseed = 3  # trailing\n") == {"seed": "3"}

    def test_bad_rational_exits_2(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("su = 0.3\n")
        assert main(["verify", "--config", str(cfg)]) == 2
        assert "config error" in capsys.readouterr().err

    def test_su_out_of_range_exits_2(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("su = 3/5\n")
        assert main(["verify", "--config", str(cfg)]) == 2

    def test_missing_config_exits_2(self, tmp_path):
        assert main(["verify", "--config", str(tmp_path / "nope.cfg")]) == 2

    def test_tolerance_override(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("tol.exact = 1e-10\nseed = 5\n")

        class NS:
            refinement = None
            seed = None
            out = None

        rc = load_config(str(cfg), NS())
        assert rc.tolerances["exact"] == 1e-10
        assert rc.seed == 5


class TestVerify:
    def test_default_run_passes(self, tmp_path):
        code, out = run(tmp_path, "verify")
        assert code == 0
        rep = json.loads((out / "verify_report.json").read_text())
        assert rep["all_pass"]
        names = {c["name"] for c in rep["checks"]}
        assert "projection_idempotent" in names
        assert "metric_compatibility" in names
        for c in rep["checks"]:
            assert c["anchor"]

    def test_deterministic_report(self, tmp_path):
        _, out1 = run(tmp_path / "a", "verify")
        _, out2 = run(tmp_path / "b", "verify")
        a = (out1 / "verify_report.json").read_bytes()
        b = (out2 / "verify_report.json").read_bytes()
        assert a == b

    def test_tampered_star_fails(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("debug.tamper_star = true\n")
        code, out = run(tmp_path, "verify", "--config", str(cfg))
        assert code == 1
        rep = json.loads((out / "verify_report.json").read_text())
        assert not rep["all_pass"]
        failing = [c["name"] for c in rep["checks"] if not c["pass"]]
        assert "projection_idempotent" in failing


class TestSolve:
    def test_solve_writes_report_and_csv(self, tmp_path):
        code, out = run(tmp_path, "solve")
        assert code == 0
        rep = json.loads((out / "solve_summary.json").read_text())
        assert rep["all_pass"]
        for name in rep["csv_files"]:
            text = (out / name).read_text().splitlines()
            assert text[0] == "x,y,re,im"
            assert len(text) > 1

    def test_solve_deterministic(self, tmp_path):
        _, out1 = run(tmp_path / "a", "solve")
        _, out2 = run(tmp_path / "b", "solve")
        assert (out1 / "solve_summary.json").read_bytes() \
            == (out2 / "solve_summary.json").read_bytes()
        assert (out1 / "g3.csv").read_bytes() == (out2 / "g3.csv").read_bytes()

    def test_zero_curvature_stub(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("debug.zero_curvature = true\n")
        code, out = run(tmp_path, "solve", "--config", str(cfg))
        assert code == 0
        rep = json.loads((out / "solve_summary.json").read_text())
        assert rep["stub"] == "zero_curvature"
        assert rep["ym"] == 0.0

    def test_sweep_table(self, tmp_path):
        code, out = run(tmp_path, "solve", "--sweep", "--refinement", "1")
        assert code == 0
        rep = json.loads((out / "solve_summary.json").read_text())
        refs = [row["refinement"] for row in rep["sweep"]]
        assert refs == [1, 2, 3]


class TestMorita:
    def test_clean_run_passes(self, tmp_path):
        code, out = run(tmp_path, "morita")
        assert code == 0
        rep = json.loads((out / "morita_report.json").read_text())
        assert rep["all_pass"]
        assert rep["sample_count"] == 20

    def test_broken_unitary_fails(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("morita.broken_u = 0.05\n")
        code, out = run(tmp_path, "morita", "--config", str(cfg))
        assert code == 1

    def test_bad_rescale_exits_1_with_stage(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("su = 2/5\nsv = 2/5\n")
        code = main(["morita", "--config", str(cfg),
                     "--out", str(tmp_path / "o")])
        assert code == 1
        assert "morita grid" in capsys.readouterr().err
