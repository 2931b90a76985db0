"""Tests for the nehari-bif command line."""

import pytest

from nehari_bif.main import main
from nehari_bif.report import read_csv, read_grid_function

SMALL = ["--set", "model.n=30", "--set", "optimizer.restarts=2"]
FIBER = ["fiber", "--A", "1", "--B", "1", "--C", "1", "--p", "2", "--q", "3", "--gamma", "4"]
NEP = ["--set", "model.model=nep", *SMALL]


def _run(tmp_path, *argv):
    return main([*argv, "--output-dir", str(tmp_path), "-q"])


class TestFiberCommand:
    """Tests for the fiber subcommand."""

    @pytest.mark.parametrize("lam,case", [("0.2", "I"), ("0.3", "III")])
    def test_case(self, tmp_path, capsys, lam, case):
        """lambda(u) = 1/4 separates case I from case III."""
        assert _run(tmp_path, *FIBER, "--lambda", lam) == 0
        meta, columns, rows = read_csv(tmp_path / "fiber.csv")
        assert rows[0][columns.index("case")] == case
        assert float(rows[0][columns.index("lambda_u")]) == pytest.approx(0.25, rel=1e-12)
        assert f"Case {case}" in capsys.readouterr().out
        assert (tmp_path / "fiber_manifest.csv").exists()
        assert meta["manifest"] == read_csv(tmp_path / "fiber_manifest.csv")[0]["manifest"]

    def test_invalid_exponents(self, tmp_path):
        """Exponents out of order are an input error."""
        argv = ["fiber", "--A", "1", "--B", "1", "--C", "1", "--p", "3", "--q", "2"]
        assert _run(tmp_path, *argv, "--gamma", "4", "--lambda", "0.1") == 2
        assert not (tmp_path / "fiber.csv").exists()

    def test_missing_required_argument(self, tmp_path):
        """argparse refuses an incomplete command line."""
        with pytest.raises(SystemExit) as info:
            _run(tmp_path, "fiber", "--A", "1")
        assert info.value.code == 2


class TestExitCodes:
    """Tests for error mapping."""

    def test_missing_config(self, tmp_path):
        """A missing configuration file exits with 2."""
        assert _run(tmp_path, "check", "--config", str(tmp_path / "absent.ini")) == 2

    def test_bad_override(self, tmp_path):
        """Malformed overrides exit with 2."""
        assert _run(tmp_path, "check", "--set", "model.n") == 2

    def test_non_convergence(self, tmp_path):
        """An exhausted iteration budget exits with 3."""
        assert _run(tmp_path, "extremal", *SMALL, "--set", "optimizer.max_iter=1") == 3

    def test_nep_on_kirchhoff(self, tmp_path):
        """The nep subcommand needs a nep model."""
        assert _run(tmp_path, "nep", *SMALL) == 2


class TestAnalysisCommands:
    """Tests for the subcommands that run the optimizer."""

    def test_check(self, tmp_path):
        """check writes the sampled constants."""
        assert _run(tmp_path, "check", *SMALL, "--samples", "10") == 0
        _, columns, rows = read_csv(tmp_path / "check.csv")
        assert rows[0][columns.index("samples")] == "10"
        assert float(rows[0][columns.index("C1")]) > 0.0

    def test_extremal(self, tmp_path):
        """extremal writes lambda* with its Sobolev cross-check and the maximizer."""
        assert _run(tmp_path, "extremal", *SMALL) == 0
        _, columns, rows = read_csv(tmp_path / "extremal.csv")
        row = dict(zip(columns, rows[0]))
        lambda_star = float(row["lambda_star"])
        assert lambda_star / float(row["lambda0_star"]) == pytest.approx(9.0 / 8.0, rel=1e-10)
        assert float(row["lambda_star_sobolev"]) == pytest.approx(lambda_star, rel=1e-4)
        assert read_grid_function(tmp_path / "extremal_maximizer.csv").grid.n == 30

    def test_solve(self, tmp_path):
        """solve writes a certified minus solution at half of lambda*."""
        assert _run(tmp_path, "extremal", *SMALL) == 0
        _, columns, rows = read_csv(tmp_path / "extremal.csv")
        lam = 0.5 * float(rows[0][columns.index("lambda_star")])
        argv = ["solve", *SMALL, "--lambda", repr(lam), "--branch", "minus", "--samples", "10"]
        assert _run(tmp_path, *argv) == 0
        _, columns, rows = read_csv(tmp_path / "solve.csv")
        row = dict(zip(columns, rows[0]))
        assert row["target"] == "J_minus_ground_state"
        assert row["converged"] == "true"
        assert row["stalled"] in ("true", "false")
        assert float(row["energy"]) > 0.0
        assert "norm_bound" in row["checks"].split(";")

    def test_probe(self, tmp_path):
        """Above lambda* every probed ray is case III."""
        assert _run(tmp_path, "probe", *SMALL, "--directions", "20") == 0
        _, columns, rows = read_csv(tmp_path / "probe.csv")
        row = dict(zip(columns, rows[0]))
        assert row["case3_fraction"] == "1"
        assert row["maximizer_case"] == "III"

    def test_sweep(self, tmp_path):
        """sweep writes the diagram with its header and gnuplot files."""
        argv = ["sweep", *SMALL, "--set", "sweep.count=4", "--set", "sweep.lo=0.3", "--gnuplot"]
        assert _run(tmp_path, *argv) == 0
        meta, columns, rows = read_csv(tmp_path / "sweep.csv")
        assert meta["model_id"].startswith("kirchhoff")
        assert float(meta["lambda_star"]) > float(meta["lambda0_star"])
        assert len(rows) == 4
        assert rows[-1][columns.index("exists")] == "false"
        assert (tmp_path / "sweep_plus.dat").exists()
        assert (tmp_path / "sweep_minus.dat").exists()

    def test_sweep_margin(self, tmp_path):
        """Without hi the relative grid ends at 1 + margin times lambda*."""
        argv = ["sweep", *SMALL, "--set", "sweep.count=2", "--set", "sweep.lo=0.5"]
        assert _run(tmp_path, *argv, "--set", "sweep.margin=0.25") == 0
        meta, _, rows = read_csv(tmp_path / "sweep.csv")
        assert float(rows[-1][0]) == pytest.approx(1.25 * float(meta["lambda_star"]), rel=1e-12)

    def test_nep_diagonal(self, tmp_path):
        """nep --diagonal writes one row per regime."""
        argv = ["nep", *NEP, "--diagonal", "--directions", "20"]
        assert _run(tmp_path, *argv) == 0
        _, columns, rows = read_csv(tmp_path / "nep_diagonal.csv")
        regimes = [row[columns.index("regime")] for row in rows]
        assert regimes == ["below_mu0", "between", "above_lambda_cross"]
        assert rows[0][columns.index("case3_fraction")] == "1"

    def test_sweep_deterministic(self, tmp_path):
        """Two runs with the same inputs write identical tables and manifests."""
        argv = ["sweep", *SMALL, "--set", "sweep.count=3", "--seed", "5"]
        assert _run(tmp_path / "a", *argv) == 0
        assert _run(tmp_path / "b", *argv) == 0
        first = (tmp_path / "a" / "sweep.csv").read_bytes()
        assert first == (tmp_path / "b" / "sweep.csv").read_bytes()
        manifest = (tmp_path / "a" / "sweep_manifest.csv").read_bytes()
        assert manifest == (tmp_path / "b" / "sweep_manifest.csv").read_bytes()


class TestEnvironment:
    """Tests for NEHARI_* variables on the command line."""

    def test_output_dir(self, tmp_path, monkeypatch):
        """NEHARI_OUTPUT_DIR is used without --output-dir."""
        monkeypatch.setenv("NEHARI_OUTPUT_DIR", str(tmp_path / "env"))
        assert main([*FIBER, "--lambda", "0.2", "-q"]) == 0
        assert (tmp_path / "env" / "fiber.csv").exists()
