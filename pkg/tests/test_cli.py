"""Tests for configuration parsing, file output, and the command line."""

import json
import os

import numpy as np
import pytest

import conjlocus as cl
from conjlocus import io as cio
from conjlocus.cli import main


class TestConfig:
    def test_defaults(self):
        c = cl.RunConfig()
        assert c.semi_axes == cl.PAPER_SEMI_AXES
        assert c.base_point == cl.PAPER_BASE_POINT
        assert abs(c.resolved_t_max() - 1.25 * np.pi * max(c.semi_axes)) < 1e-12

    def test_parse_file_with_comments_and_overrides(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text(
            "# a comment\n"
            "semi_axes = 1.0, 1.1, 1.2, 1.3\n"
            "n_theta = 24\n"
            "ply_binary = true\n"
            "\n"
            "out_dir = results\n"
        )
        c = cl.parse_config(str(p), overrides={"n_phi": "48"})
        assert c.semi_axes == (1.0, 1.1, 1.2, 1.3)
        assert c.n_theta == 24 and c.n_phi == 48
        assert c.ply_binary is True
        assert c.out_dir == "results"

    def test_unknown_key_rejected(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("no_such_key = 1\n")
        with pytest.raises(cl.ConfigError, match="no_such_key"):
            cl.parse_config(str(p))

    def test_malformed_value_names_key(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("n_theta = banana\n")
        with pytest.raises(cl.ConfigError, match="n_theta"):
            cl.parse_config(str(p))

    def test_validation_errors(self):
        with pytest.raises(cl.ConfigError, match="t_max"):
            cl.RunConfig(t_max=-1.0).validate()
        with pytest.raises(cl.ConfigError, match="n_theta"):
            cl.RunConfig(n_theta=4).validate()
        with pytest.raises(cl.ConfigError, match="base_point"):
            cl.RunConfig(base_point=(0.0, 1.0, 0.3)).validate()

    def test_hash_stable_and_sensitive(self):
        a = cl.RunConfig()
        b = cl.RunConfig()
        c = cl.RunConfig(n_theta=32)
        assert a.hash() == b.hash()
        assert a.hash() != c.hash()
        assert len(a.hash()) == 16


class TestIO:
    def test_csv_round_trip(self, tmp_path):
        cfg = cl.RunConfig()
        path = str(tmp_path / "t.csv")
        cio.write_csv(
            path,
            "trace",
            ["t", "area"],
            np.array([[0.0, 1.0], [0.5, 0.25]]),
            config=cfg,
        )
        meta, cols, rows = cio.read_csv(path)
        assert meta["schema"] == "trace/v1"
        assert meta["config"] == cfg.hash()
        assert cols == ["t", "area"]
        assert float(rows[1][1]) == 0.25

    def test_float_precision_survives(self, tmp_path):
        x = 1.0 / 3.0 + 1e-16
        path = str(tmp_path / "p.csv")
        cio.write_csv(path, "trace", ["t"], np.array([[x]]))
        _, _, rows = cio.read_csv(path)
        assert float(rows[0][0]) == x

    def test_sidecar(self, tmp_path):
        cfg = cl.RunConfig(n_theta=32)
        path = str(tmp_path / "out.csv")
        cio.write_sidecar(path, cfg)
        with open(path + ".meta.json") as fh:
            blob = json.load(fh)
        assert blob["n_theta"] == 32
        assert blob["config_hash"] == cfg.hash()

    @pytest.mark.parametrize("binary", [False, True])
    def test_ply_header_and_size(self, tmp_path, frame, t_max, binary):
        sw = cl.sweep(frame, 16, 32, t_max)
        path = str(tmp_path / ("s_bin.ply" if binary else "s_asc.ply"))
        cio.write_sheet_ply(path, sw.sheet1, config=cl.RunConfig(), binary=binary)
        with open(path, "rb") as fh:
            head = fh.read(600).decode("ascii", "replace")
        assert head.startswith("ply\n")
        fmt = "binary_little_endian" if binary else "ascii"
        assert f"format {fmt} 1.0" in head
        assert "element vertex 512" in head
        assert "element face" in head
        assert "property double R" in head


class TestCommandLine:
    def test_trace_writes_csv_with_two_sign_changes(self, tmp_path, capsys):
        out = str(tmp_path / "out")
        rc = main(["trace", "--out-dir", out])
        assert rc == 0
        text = capsys.readouterr().out
        assert "R1 = 3.415395662" in text
        assert "R2 = 3.634378728" in text
        meta, cols, rows = cio.read_csv(os.path.join(out, "trace.csv"))
        assert meta["schema"] == "area_trace/v1"
        areas = np.array([float(r[cols.index("area")]) for r in rows])
        flips = np.sum(np.sign(areas[1:]) * np.sign(areas[:-1]) < 0)
        assert flips == 2
        assert os.path.exists(os.path.join(out, "trace.csv.meta.json"))

    def test_trace_with_velocity_direction(self, tmp_path, capsys):
        out = str(tmp_path / "out")
        rc = main(
            ["trace", "--direction", "0.392238,0.663092,-0.993224", "--out-dir", out]
        )
        assert rc == 0
        assert "umbilic" in capsys.readouterr().out

    def test_config_error_exit_2(self, tmp_path, capsys):
        rc = main(["trace", "--t-max", "-1", "--out-dir", str(tmp_path)])
        assert rc == 2
        assert "t_max" in capsys.readouterr().err

    def test_numeric_failure_exit_3_with_diagnostics(self, tmp_path, capsys):
        # A horizon far too short to contain the first conjugate point.
        out = str(tmp_path / "out")
        rc = main(["trace", "--t-max", "0.4", "--out-dir", out])
        assert rc == 3
        assert os.path.exists(os.path.join(out, "diagnostics.txt"))

    def test_verify_subset_exit_0(self, tmp_path, capsys):
        out = str(tmp_path / "out")
        rc = main(
            [
                "verify",
                "--check", "curvature_crosscheck",
                "--check", "fig2_generic",
                "--out-dir", out,
            ]
        )
        assert rc == 0
        text = capsys.readouterr().out
        assert "curvature_crosscheck" in text
        assert "PASS" in text

    def test_coords_writes_lines(self, tmp_path):
        out = str(tmp_path / "out")
        rc = main(["coords", "--n-lines", "1", "--out-dir", out])
        assert rc == 0
        meta, cols, rows = cio.read_csv(os.path.join(out, "coords_u.csv"))
        assert meta["schema"].startswith("polyline")
        assert "closed" in cols
        assert len(rows) > 10

    def test_threads_env_override(self, monkeypatch):
        from conjlocus.locus import _n_threads

        monkeypatch.setenv("CONJLOCUS_THREADS", "2")
        assert _n_threads() == 2
        assert _n_threads(6) == 2  # env wins over the config request
        monkeypatch.delenv("CONJLOCUS_THREADS")
        assert _n_threads(6) == 6
