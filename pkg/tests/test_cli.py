"""Command-line plumbing: grid specs, config files, exit codes, CSV output."""

import re

import numpy as np
import pytest

from richext import cli, extrapolation


class TestParseLamGrid:
    def test_pow2_inclusive_endpoints(self):
        grid = cli.parse_lam_grid("pow2:-3:0:1")
        np.testing.assert_allclose(grid, [0.125, 0.25, 0.5, 1.0], rtol=1e-15)

    def test_pow2_fractional_step(self):
        grid = cli.parse_lam_grid("pow2:-18:-4:0.2")
        assert len(grid) == 71
        assert grid[0] == pytest.approx(2.0**-18, rel=1e-12)
        assert grid[-1] == pytest.approx(2.0**-4, rel=1e-12)

    def test_geom(self):
        np.testing.assert_allclose(cli.parse_lam_grid("geom:1e-7:10:41"),
                                   np.geomspace(1e-7, 10, 41), rtol=1e-15)

    @pytest.mark.parametrize("spec", [
        "pow2:0:-1:1",       # hi below lo
        "pow2:0:1:0",        # zero step
        "pow2:0:1",          # missing field
        "pow2:a:b:c",
        "geom:0:1:5",        # lo must be positive
        "geom:1:2:1",        # need at least two points
        "linspace:1:2:3",
        "",
    ])
    def test_bad_specs(self, spec):
        with pytest.raises(ValueError, match="bad grid spec"):
            cli.parse_lam_grid(spec)


class TestConfigFile:
    def test_parses_types_and_comments(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "# instance\n"
            "seed = 4\n"
            "noise-std = 0.25   # same spelling as the flag\n"
            "\n"
            "m = 0,1,3\n"
            "rule = 1/k\n"
        )
        values = cli.load_config_file(path)
        assert values == {"seed": 4, "noise_std": 0.25, "m": (0, 1, 3),
                          "rule": "1/k"}
        assert isinstance(values["seed"], int)

    def test_unknown_key_reports_line_number(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("seed=1\nstepsize=0.1\n")
        with pytest.raises(ValueError, match=r"2: unknown key 'stepsize'"):
            cli.load_config_file(path)

    def test_missing_equals(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("seed\n")
        with pytest.raises(ValueError, match="expected key=value"):
            cli.load_config_file(path)

    def test_flags_beat_file_entries(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("seed=3\nd=12\n")
        args = cli.build_parser().parse_args(
            ["acc-gd", "--config", str(path), "--seed", "7"])
        config = cli.config_from_args(args)
        assert config.seed == 7   # flag wins
        assert config.d == 12     # file fills the rest


class TestSubcommandAliases:
    def test_smoothing_modes(self):
        parser = cli.build_parser()
        args = parser.parse_args(["smoothing", "--mode", "oracle-curve"])
        assert cli.config_from_args(args).experiment == "smoothing-oracle"
        args = parser.parse_args(["smoothing"])
        assert cli.config_from_args(args).experiment == "smoothing-bias"

    def test_ridge_modes(self):
        parser = cli.build_parser()
        args = parser.parse_args(["ridge", "--mode", "decay"])
        assert cli.config_from_args(args).experiment == "ridge-decay"
        args = parser.parse_args(["ridge"])
        assert cli.config_from_args(args).experiment == "ridge-experiment"

    def test_unknown_experiment_rejected(self):
        with pytest.raises(ValueError, match="unknown experiment"):
            cli.ExperimentConfig(experiment="warp-drive")


class TestExitCodes:
    def test_zero_when_all_checks_pass(self, capsys):
        assert cli.main(["weights", "--m", "0,3,10"]) == 0
        out = capsys.readouterr().out
        assert "3/3 checks passed" in out
        assert "FAIL" not in out

    def test_one_on_divergence(self, tmp_path, capsys):
        # acc-gd takes its step from the config; 1e9 blows up in a few
        # iterations on a tiny quadratic, well before the reference solve
        cfg = tmp_path / "run.cfg"
        cfg.write_text("gamma=1e9\nd=4\niters=64\nref_budget=400\n")
        with np.errstate(over="ignore", invalid="ignore"):
            code = cli.main(["acc-gd", "--config", str(cfg)])
        assert code == 1
        assert "FAIL acc-gd" in capsys.readouterr().out

    def test_two_on_bad_flag_value(self):
        with pytest.raises(SystemExit) as exc:
            cli.main(["weights", "--m", "three"])
        assert exc.value.code == 2

    def test_two_on_config_error(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("stepsize=0.1\n")
        with pytest.raises(SystemExit) as exc:
            cli.main(["weights", "--config", str(cfg)])
        assert exc.value.code == 2

    def test_two_on_missing_config_file(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            cli.main(["weights", "--config", str(tmp_path / "nope.cfg")])
        assert exc.value.code == 2

    def test_two_on_bad_grid_spec(self, capsys):
        code = cli.main(["smoothing-bias", "--lam-grid", "nope"])
        assert code == 2
        assert "bad grid spec" in capsys.readouterr().err


class TestCsvOutput:
    def test_header_and_rows(self, tmp_path, capsys):
        out = tmp_path / "weights.csv"
        assert cli.main(["weights", "--m", "2", "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert re.fullmatch(
            r"# richext-csv v1 experiment=weights seed=0 config=[0-9a-f]{12}",
            lines[0])
        assert lines[1] == "m,i,alpha"
        assert len(lines) == 2 + 3
        assert lines[2].split(",") == ["2", "1", "3"]  # alpha_1 = C(3, 1)

    def test_floats_roundtrip_exactly(self, tmp_path, capsys):
        out = tmp_path / "filter.csv"
        assert cli.main(["filter", "--m", "1", "--out", str(out)]) == 0
        rows = [ln.split(",") for ln in out.read_text().splitlines()[2:]]
        mu = np.array([float(r[1]) for r in rows])
        s = np.array([float(r[2]) for r in rows])
        # 17 significant digits reproduce the doubles bit for bit
        np.testing.assert_array_equal(s, extrapolation.spectral_filter(mu, 1))


class TestDeterminism:
    def test_identical_config_gives_identical_bytes(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["ridge-decay", "--n", "400", "--seed", "5"]
        first = cli.main(argv + ["--out", str(a)])
        second = cli.main(argv + ["--out", str(b)])
        assert first == second
        assert a.read_bytes() == b.read_bytes()
