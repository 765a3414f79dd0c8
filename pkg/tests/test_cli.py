import json
import subprocess

import numpy as np
import pytest

from semijulia.cli import EXIT_ERROR, EXIT_INCONCLUSIVE, EXIT_OK, EXIT_USAGE, build_parser, preset_pair, run
from semijulia.io_render import read_cloud_csv, read_json, read_pnm


def sjl(*argv):
    return run([str(a) for a in argv])


class TestUsage:
    def test_unknown_flag(self, tmp_path, capsys):
        assert sjl("julia", "--preset", "cantor3", "--seed", 1, "--bogus", "-o", tmp_path) == EXIT_USAGE
        assert "--preset" in capsys.readouterr().err   # help text printed

    def test_missing_seed(self, tmp_path):
        assert sjl("julia", "--preset", "cantor3", "-o", tmp_path) == EXIT_USAGE

    def test_bad_p(self, tmp_path):
        assert sjl("tfun", "--preset", "annulus", "--p", 1.5, "-o", tmp_path) == EXIT_USAGE

    def test_non_positive_budget(self, tmp_path):
        assert sjl("tfun", "--preset", "annulus", "--grid", 0, "-o", tmp_path) == EXIT_USAGE

    def test_unknown_preset(self, tmp_path):
        assert sjl("tfun", "--preset", "nope", "-o", tmp_path) == EXIT_USAGE

    def test_no_subcommand(self):
        assert sjl() == EXIT_USAGE

    def test_help_lists_flags(self, capsys):
        with pytest.raises(SystemExit) as ex:
            sjl("tfun", "--help")
        assert ex.value.code == 0
        text = capsys.readouterr().out
        for flag in ("--preset", "--h1", "--h2", "--p", "--seed", "--grid", "--depth", "--iters",
                     "--tol", "--out", "--config", "--workers", "--gamma"):
            assert flag in text

    def test_every_subcommand_registered(self):
        sub = next(a for a in build_parser()._actions if a.dest == "command")
        assert set(sub.choices) == {"julia", "classify", "tfun", "takagi", "dim", "scan", "construct", "sample"}


class TestPresets:
    def test_names(self):
        assert preset_pair("annulus").h2.leading == 0.5
        assert preset_pair("cantor3").h2.leading == 2
        assert preset_pair("monomialQ(pi/5)").h2.leading == pytest.approx(np.exp(1j * np.pi / 5))
        assert preset_pair("monomialQ(0.3)").h2.leading == pytest.approx(np.exp(0.3j))
        assert preset_pair("monomialQ").h2.leading == pytest.approx(np.exp(1j * np.pi / 5))


class TestJulia:
    def test_outputs_and_reproducibility(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert sjl("julia", "--preset", "cantor3", "--n", 200000, "--seed", 7, "-o", out) == EXIT_OK
        for name in ("julia.csv", "julia.pgm"):
            assert (a / name).read_bytes() == (b / name).read_bytes()
        ca, cb = read_json(a / "run_config.json"), read_json(b / "run_config.json")
        assert ca.pop("out") != cb.pop("out") and ca == cb
        pts = read_cloud_csv(a / "julia.csv")
        assert pts.size == 200000
        assert read_pnm(a / "julia.pgm").shape == (512, 512)

    def test_fiber(self, tmp_path):
        assert sjl("julia", "--preset", "cantor3", "--kind", "fiber", "--preperiod", "2", "--period", "1",
                   "--n", 500, "--seed", 1, "--grid", 64, "-o", tmp_path) == EXIT_OK
        r = np.abs(read_cloud_csv(tmp_path / "julia.csv"))
        assert np.allclose(r, 0.5 ** (1 / 3), atol=1e-6)


class TestTfun:
    def test_ramp(self, tmp_path):
        assert sjl("tfun", "--preset", "annulus", "--p", 0.5, "--grid", 512, "--tol", 1e-4, "--seed", 1,
                   "-o", tmp_path) == EXIT_OK
        img = read_pnm(tmp_path / "T.pgm").astype(float) / 255
        meta = read_json(tmp_path / "T.json")
        R = meta["escape_radius"]
        x = -R + 2 * R / 511 * np.arange(512)
        want = np.clip(np.log2(np.abs(x) + 1e-300), 0, 1)
        assert np.max(np.abs(img[255] - want)) <= 0.02 + 1 / 255

    def test_config_file_and_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# comment\npreset = annulus\ngrid = 64\np = 0.3\n")
        assert sjl("tfun", "--config", cfg, "--grid", 48, "-o", tmp_path / "o") == EXIT_OK
        eff = read_json(tmp_path / "o" / "run_config.json")
        assert eff["grid"] == 48 and eff["p"] == 0.3 and eff["preset"] == "annulus"
        assert read_pnm(tmp_path / "o" / "T.pgm").shape == (48, 48)

    def test_json_config(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"preset": "annulus", "grid": 40}))
        assert sjl("tfun", "--config", cfg, "-o", tmp_path) == EXIT_OK
        assert read_pnm(tmp_path / "T.pgm").shape == (40, 40)

    def test_config_unknown_key(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("colour = red\n")
        assert sjl("tfun", "--config", cfg, "--preset", "annulus", "-o", tmp_path) == EXIT_USAGE

    def test_threads_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SJL_THREADS", "1")
        assert sjl("tfun", "--preset", "annulus", "--grid", 32, "-o", tmp_path) == EXIT_OK
        assert read_json(tmp_path / "run_config.json")["workers"] == 1


class TestClassify:
    def test_cantor3(self, tmp_path):
        assert sjl("classify", "--preset", "cantor3", "-o", tmp_path) == EXIT_OK
        rep = read_json(tmp_path / "report.json")
        assert (rep["B"], rep["connected"], rep["Q"], rep["I"]) == ("yes", "no", "no", "no")
        assert rep["locus"] == "D"

    def test_inconclusive_exit(self, tmp_path):
        code = sjl("classify", "--h1", "0 0 0 1", "--h2", "0 0 0 1.4", "--grid", 256, "--n", 4000,
                   "-o", tmp_path)
        assert code == EXIT_INCONCLUSIVE
        assert read_json(tmp_path / "report.json")["locus"] == "inconclusive"

    def test_bad_polynomial(self, tmp_path):
        assert sjl("classify", "--h1", "0 0 x", "--h2", "0 0 1", "-o", tmp_path) == EXIT_USAGE


class TestOtherCommands:
    def test_takagi(self, tmp_path):
        assert sjl("takagi", "--preset", "annulus", "--grid", 128, "-o", tmp_path) == EXIT_OK
        img = read_pnm(tmp_path / "psi1.pgm")
        assert img.dtype.str == ">u2" and img.shape == (128, 128)
        assert read_json(tmp_path / "psi1.pgm.json")["maxval"] == 65535

    def test_dim(self, tmp_path):
        assert sjl("dim", "--preset", "cantor3", "--seed", 1, "--n", 20000, "--n-max", 6, "-o", tmp_path) == EXIT_OK
        rep = read_json(tmp_path / "dimension.json")
        assert abs(rep["delta_estimate"] - 1.6309) < 0.05

    def test_scan(self, tmp_path):
        assert sjl("scan", "--preset", "cantor3", "--d", 3, "--res", 2, "--re-range", "1.8,2.2",
                   "--im-range=-0.1,0.1", "--grid", 256, "--workers", 1, "-o", tmp_path) == EXIT_OK
        rows = (tmp_path / "locus.csv").read_text().splitlines()
        assert rows[0] == "re_a,im_a,code" and len(rows) == 5
        assert read_pnm(tmp_path / "locus.ppm").shape == (2, 2, 3)

    def test_scan_h1_only(self, tmp_path):
        assert sjl("scan", "--h1", "-1 0 1", "--res", 2, "--re-range", "1.9,2.1", "--im-range=-0.1,0.1",
                   "--grid", 128, "--workers", 1, "-o", tmp_path) == EXIT_OK
        assert sjl("scan", "--d", 3, "-o", tmp_path) == EXIT_USAGE
        assert sjl("scan", "--h1", "-1 0 1", "--res", 1, "-o", tmp_path) == EXIT_USAGE

    def test_sample(self, tmp_path):
        assert sjl("sample", "--preset", "cantor3", "--seed", 3, "--n", 300, "-o", tmp_path) == EXIT_OK
        assert read_cloud_csv(tmp_path / "sample.csv").size == 300

    def test_construct_hard_error(self, tmp_path):
        assert sjl("construct", "--h1", "0 0 1", "--b", "0", "-o", tmp_path) == EXIT_ERROR

    def test_console_script(self, tmp_path):
        res = subprocess.run(["sjl", "sample", "--preset", "annulus", "--seed", "1", "--n", "50", "-o", str(tmp_path)],
                             capture_output=True, text=True)
        assert res.returncode == 0 and "sample:" in res.stdout
