import json

import numpy as np
import pytest

from smoothcd import prox as px
from smoothcd.cli import main
from smoothcd.problems import QuadraticComposite


@pytest.fixture()
def tiny_problem(tmp_path):
    quad = QuadraticComposite.from_least_squares(
        np.eye(3), np.array([2.0, -0.5, 0.1]), px.GroupNormProx.l1(0.5, 3)
    )
    path = tmp_path / "problem.json"
    quad.dump(path)
    return path


def _config(tmp_path, tiny_problem, **over):
    doc = {
        "problem": str(tiny_problem),
        "smoothing": "moreau",
        "solver": "cd",
        "epochs": 200,
        "tol": 0.1,
        "seed": 3,
        "out": str(tmp_path / "trace.csv"),
    }
    doc.update(over)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(doc))
    return path


class TestSolve:
    def test_smoke(self, tmp_path, tiny_problem, capsys):
        cfg = _config(tmp_path, tiny_problem)
        assert main(["solve", "--config", str(cfg)]) == 0
        out = capsys.readouterr().out
        assert "F_gamma" in out and "grad norm" in out
        trace = (tmp_path / "trace.csv").read_text()
        assert trace.startswith("k,epoch,time_s,f_gamma,f_orig_at_B,grad_norm")

    def test_tol_override_propagates(self, tmp_path, tiny_problem):
        cfg = _config(tmp_path, tiny_problem)
        assert main(["solve", "--config", str(cfg), "--tol", "1e-6"]) == 0
        rows = (tmp_path / "trace.csv").read_text().strip().split("\n")[1:]
        final_grad = float(rows[-1].split(",")[-1])
        assert final_grad <= 1e-6

    def test_unknown_smoothing_exit_2(self, tmp_path, tiny_problem, capsys):
        cfg = _config(tmp_path, tiny_problem, smoothing="nonsense")
        assert main(["solve", "--config", str(cfg)]) == 2
        err = capsys.readouterr().err
        for name in ("moreau", "fb", "dr", "ns"):
            assert name in err

    def test_every_smoothing_and_solver(self, tmp_path, tiny_problem):
        for smoothing in ("moreau", "fb", "dr", "ns"):
            for solver in ("cd", "accd", "restart"):
                cfg = _config(
                    tmp_path,
                    tiny_problem,
                    smoothing=smoothing,
                    solver=solver,
                    out=str(tmp_path / f"{smoothing}_{solver}.csv"),
                )
                assert main(["solve", "--config", str(cfg)]) == 0
                assert (tmp_path / f"{smoothing}_{solver}.csv").exists()

    def test_generator_problem_inline(self, tmp_path):
        doc = {
            "problem": {"kind": "quadratic_l1", "n": 8, "m": 4, "lam": 0.5, "seed": 5},
            "smoothing": "fb",
            "solver": "accd",
            "epochs": 100,
            "tol": 0.1,
            "out": str(tmp_path / "t.csv"),
        }
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps(doc))
        assert main(["solve", "--config", str(cfg)]) == 0


class TestBench:
    def test_micro_grid_under_a_minute(self, tmp_path, capsys):
        import time

        spec = {
            "problem": {"kind": "quadratic_l1", "n": 10, "m": 5, "lam": 0.5, "seed": 11},
            "smoothings": ["fb", "dr"],
            "solvers": [{"solver": "cd", "epochs": 100, "tol": 0.1, "seed": 0}],
            "repeats": 3,
            "out": str(tmp_path / "res"),
        }
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(spec))
        t0 = time.perf_counter()
        assert main(["bench", "--spec", str(path)]) == 0
        assert time.perf_counter() - t0 < 60.0
        assert len(list((tmp_path / "res" / "traces").glob("*.csv"))) == 6
        assert "all runs completed" in capsys.readouterr().out

    def test_out_redirect(self, tmp_path):
        spec = {
            "problem": {"kind": "quadratic_l1", "n": 8, "m": 4, "lam": 0.5, "seed": 11},
            "smoothings": ["fb"],
            "solvers": [{"solver": "cd", "epochs": 50, "tol": 0.1, "seed": 0}],
            "repeats": 1,
            "out": str(tmp_path / "default"),
        }
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(spec))
        assert main(["bench", "--spec", str(path), "--out", str(tmp_path / "other")]) == 0
        assert (tmp_path / "other" / "summary.json").exists()
        assert not (tmp_path / "default").exists()

    def test_malformed_spec_exit_2(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert main(["bench", "--spec", str(path)]) == 2
        path2 = tmp_path / "bad2.json"
        path2.write_text(json.dumps({"problem": {"kind": "quadratic_l1", "n": 4}}))
        assert main(["bench", "--spec", str(path2)]) == 2


class TestCheck:
    def test_all_suites_pass(self, capsys):
        assert main(["check"]) == 0
        out = capsys.readouterr().out
        for name in ("prox", "smoothing", "solvers", "bregman"):
            assert f"[pass] {name}" in out

    def test_single_suite(self, capsys):
        assert main(["check", "--suite", "prox"]) == 0
        out = capsys.readouterr().out
        assert "[pass] prox" in out and "smoothing" not in out

    def test_unknown_suite(self, capsys):
        assert main(["check", "--suite", "nope"]) == 2

    def test_mutated_lipschitz_fails_suite(self):
        from smoothcd.checks import run_smoothing_suite

        rep = run_smoothing_suite(seed=0, lipschitz_scale=0.5)
        assert not rep.passed


class TestConstants:
    def test_restart_period_values(self, capsys):
        assert (
            main(
                [
                    "constants", "restart-period", "--blocks", "10", "--qbar", "2",
                    "--kappa-bar", "1", "--alpha-restart", str(float(np.exp(-2))),
                ]
            )
            == 0
        )
        assert "= 55" in capsys.readouterr().out
        assert (
            main(
                [
                    "constants", "restart-period", "--blocks", "1", "--qbar", "1",
                    "--kappa-bar", "1", "--alpha-restart", "1", "--delta0", "4",
                ]
            )
            == 0
        )
        assert "= 4" in capsys.readouterr().out

    def test_growth_me_hand_value(self, capsys):
        assert (
            main(
                [
                    "constants", "growth", "--family", "me", "--q", "2",
                    "--kappa", "1", "--gamma", "1",
                ]
            )
            == 0
        )
        assert "0.5" in capsys.readouterr().out

    def test_invalid_q_exit_2(self):
        assert (
            main(
                [
                    "constants", "growth", "--family", "me", "--q", "3",
                    "--kappa", "1", "--gamma", "1",
                ]
            )
            == 2
        )

    def test_doubling(self, capsys):
        assert main(["constants", "doubling", "--k0", "5", "--count", "7"]) == 0
        assert "5 10 5 20 5 10 5" in capsys.readouterr().out


class TestHelp:
    @pytest.mark.parametrize(
        "argv",
        [["--help"], ["solve", "--help"], ["bench", "--help"], ["check", "--help"],
         ["constants", "--help"], ["constants", "growth", "--help"]],
    )
    def test_help_exits_zero(self, argv, capsys):
        assert main(argv) == 0
        assert "usage" in capsys.readouterr().out.lower()

    def test_usage_error_exit_2(self, capsys):
        assert main(["solve"]) == 2  # missing --config
        assert main(["nonsense"]) == 2
