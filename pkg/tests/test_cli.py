from __future__ import annotations

import json

import numpy as np
import pytest

from tugdpp.cli import main
from tugdpp.grid import GridField

QUAD_CFG = """\
eps = 0.2
grid.dx = 0.05
solver.method = policy
f.kind = quadratic-compatible
g.kind = quadratic
game.paths = 400
extremal.samples = 256
holder.eps_list = 0.25,0.2
convergence.eps_list = 0.25,0.2
convergence.exact = quadratic
"""


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(QUAD_CFG, encoding="utf-8")
    return str(path)


def test_constants_json(capsys):
    assert main(["constants", "--dim", "2", "--p", "2"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["gamma"] == pytest.approx(0.5, abs=1e-12)


def test_constants_mc_csv(capsys):
    assert main(["constants", "--dim", "3", "--p", "1.5", "--mc-check", "20000", "--format", "csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "kind,closed_form,mc_estimate,std_error,z_score"
    assert len(lines) > 2


def test_solve_writes_solution_and_report(cfg, tmp_path, capsys):
    prefix = str(tmp_path / "quad")
    assert main(["solve", "--config", cfg, "--out", prefix]) == 0
    rep = json.loads((tmp_path / "quad.report.json").read_text())
    assert rep["final_residual"] <= 1e-8
    assert {"iterations", "apriori_bound_ok", "monotone_ok", "residual_history"} <= set(rep)
    sol = GridField.from_csv(tmp_path / "quad.solution.csv")
    mask = sol.classes == 1
    x = sol.coords()[mask]
    assert np.max(np.abs(sol.values[mask] - np.sum(x * x, axis=1))) < 1e-8
    assert "converged=True" in capsys.readouterr().err


def test_solve_is_byte_stable(cfg, tmp_path):
    for name in ("a", "b"):
        assert main(["solve", "--config", cfg, "--out", str(tmp_path / name)]) == 0
    assert (tmp_path / "a.report.json").read_bytes() == (tmp_path / "b.report.json").read_bytes()
    assert (tmp_path / "a.solution.csv").read_bytes() == (tmp_path / "b.solution.csv").read_bytes()


def test_not_converged_exits_three(tmp_path):
    path = tmp_path / "short.cfg"
    path.write_text("eps = 0.2\ngrid.dx = 0.05\ng.kind = expression-id\ng.id = sign-x1\nsolver.max_iter = 2\n")
    assert main(["solve", "--config", str(path), "--out", str(tmp_path / "s")]) == 3
    assert json.loads((tmp_path / "s.report.json").read_text())["iterations"] == 2


def test_simulate_compare_and_per_path(cfg, tmp_path):
    prefix = str(tmp_path / "game")
    assert main(["simulate", "--config", cfg, "--out", prefix, "--compare", "--per-path", "--start", "0.1,0",
                 "--seed", "4"]) == 0
    stats = json.loads((tmp_path / "game.stats").read_text())
    assert stats["seed"] == 4 and stats["start"] == [0.1, 0.0]
    assert {"mean_payoff", "std_error", "solver_value", "abs_error", "agree"} <= set(stats)
    assert stats["solver_value"] == pytest.approx(0.01, abs=1e-8)
    rows = (tmp_path / "game.paths.csv").read_text().splitlines()
    assert rows[0] == "path_id,payoff,steps" and len(rows) == 401


def test_simulate_rejects_outside_start(cfg, capsys):
    assert main(["simulate", "--config", cfg, "--start", "3,0"]) == 2
    assert "interior" in capsys.readouterr().err


def test_extremal(cfg, capsys):
    assert main(["extremal", "--config", cfg, "--nodes", "5"]) == 0
    cap = capsys.readouterr()
    lines = cap.out.splitlines()
    assert lines[0] == "x1,x2,Lplus,Lminus,f,margin_plus,margin_minus"
    assert len(lines) == 6
    assert all(float(r.split(",")[5]) >= -1e-6 for r in lines[1:])
    assert "ok=True" in cap.err


def test_extremal_refuses_p_above_two(tmp_path, capsys):
    path = tmp_path / "p3.cfg"
    path.write_text("p = 3\neps = 0.2\n")
    assert main(["extremal", "--config", str(path)]) == 2


@pytest.mark.parametrize("mode", ["expansion", "limit", "midpoint"])
def test_expansion_check(mode, capsys):
    assert main(["expansion-check", "--p", "1.5", "--mode", mode, "--point", "0.2,0.1",
                 "--function", "exp-mix", "--eps-list", "0.2,0.1,0.05"]) == 0
    cap = capsys.readouterr()
    assert cap.out.splitlines()[0].startswith("eps,remainder,predicted,measured")
    assert len(cap.out.splitlines()) == 4
    assert "fitted_order=" in cap.err


def test_holder_and_convergence(cfg, tmp_path):
    prefix = str(tmp_path / "study")
    assert main(["holder", "--config", cfg, "--out", prefix, "--gamma", "0.5"]) == 0
    head = (tmp_path / "study.holder.csv").read_text().splitlines()
    assert head[0] == "eps,gamma,quotient_sup,pair_count,own_fitted_gamma" and len(head) == 3
    assert main(["convergence", "--config", cfg, "--out", prefix]) == 0
    conv = (tmp_path / "study.convergence.csv").read_text().splitlines()
    assert conv[0] == "eps,dx,sup_error,iterations,final_residual" and len(conv) == 3


def test_config_errors_exit_two(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("eps = 0.2\nsolver.magic = 1\n")
    assert main(["solve", "--config", str(path)]) == 2
    assert "unknown key" in capsys.readouterr().err
    assert main(["solve", "--threads", "0"]) == 2


def test_io_errors_exit_four(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "missing.cfg")]) == 4
    assert main(["constants", "--dim", "2", "--p", "1.5", "--out", str(tmp_path / "no" / "x")]) == 4
