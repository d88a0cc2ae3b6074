"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np
import scipy.fft as sfft

from . import __version__
from .config import AUTO, RunConfig, default_config, load_config
from .errors import ConfigError, NotConverged, RangeError, TugDppError
from .reporting import emit_report

log = logging.getLogger("tugdpp")


# ---------------------------------------------------------------------------
# helpers


def _config(args) -> RunConfig:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if args.config:
        return load_config(args.config, overrides)
    cfg = default_config()
    return cfg.with_values(**overrides) if overrides else cfg


def _emit(args, results, name: str, fmt: str | None = None) -> None:
    fmt = fmt or args.format
    ext = {"json": "json", "text": "txt", "csv": "csv"}[fmt]
    if args.out:
        emit_report(results, fmt, f"{args.out}.{name}.{ext}" if name else f"{args.out}.{ext}")
    else:
        sys.stdout.write(emit_report(results, fmt))


def _echo(cfg: RunConfig) -> dict:
    return {k: (v if isinstance(v, (int, float, str, bool)) else ",".join(map(repr, v)))
            for k, v in cfg.values}


def _no_randomness(args, name: str) -> None:
    if getattr(args, "seed", None) is not None:
        print(f"note: {name} uses no randomness; --seed ignored", file=sys.stderr)


def _vector(text: str, key: str):
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise RangeError(key, text, "expected comma-separated numbers") from None


def _floats(text: str, key: str):
    v = _vector(text, key)
    if not v or any(t <= 0 for t in v):
        raise RangeError(key, text, "expected positive numbers")
    return v


def _study_problem(cfg: RunConfig, eps: float):
    # studies default to policy iteration unless the config asks otherwise
    method = cfg["solver.method"] if "solver.method" in cfg.explicit else "policy"
    return cfg.problem(eps=eps, method=method)


# ---------------------------------------------------------------------------
# subcommands


def cmd_constants(args) -> int:
    from .kernel import MOMENT_KINDS, KernelParams, closed_form, mc_moment_oracle, moment_table

    _ = args.config and print("note: constants ignores --config", file=sys.stderr)
    params = KernelParams(args.dim, args.p)
    table = moment_table(params)
    results = {"dim": args.dim, "p": args.p, "gamma": params.gamma, **table.as_dict()}
    if args.mc_check:
        seed = args.seed if args.seed is not None else 0
        rows = []
        for i, kind in enumerate(MOMENT_KINDS):
            est, se = mc_moment_oracle(args.dim, args.p, kind, args.mc_check, seed + i)
            cf = closed_form(args.dim, args.p, kind)
            rows.append({"kind": kind, "closed_form": cf, "mc_estimate": est, "std_error": se,
                         "z_score": abs(est - cf) / se if se > 0 else 0.0})
        if args.format == "csv":
            _emit(args, rows, "constants")
            return 0
        results["mc_samples"] = args.mc_check
        results["mc_seed"] = seed
        results["mc_check"] = rows
    elif args.format == "csv":
        _emit(args, [results], "constants")
        return 0
    _emit(args, results, "constants")
    return 0


def cmd_solve(args) -> int:
    from .solver import solve

    _no_randomness(args, "solve")
    cfg = _config(args)
    problem = cfg.problem()
    code = 0
    try:
        report = solve(problem)
    except NotConverged as exc:
        if exc.report is None:
            raise
        report = exc.report
        print(f"error: {exc}", file=sys.stderr)
        code = NotConverged.exit_code
    summary = report.summary()
    summary["config"] = _echo(cfg)
    if args.out:
        report.solution.to_csv(f"{args.out}.solution.csv")
    fmt = "json" if args.format == "csv" else args.format
    _emit(args, summary, "report", fmt)
    print(f"solve: iterations={report.iterations} final_residual={report.final_residual:.3e} "
          f"converged={report.converged} seconds={report.seconds:.1f}", file=sys.stderr)
    return code


def _strategy(kind: str, report, cfg: RunConfig, dim: int):
    from .game import Strategy

    if kind == "optimal":
        return Strategy("optimal", report=report)
    if kind == "fixed":
        d = cfg["game.direction"]
        d = tuple(np.eye(dim)[0]) if d == AUTO else d
        if len(d) != dim:
            raise RangeError("game.direction", d, f"needs {dim} components")
        d = tuple(np.asarray(d) / np.linalg.norm(d))
        return Strategy("fixed", direction=d)
    if kind == "radial":
        return Strategy("radial", center=tuple(cfg.domain().center))
    return Strategy("adversarial-random")


def cmd_simulate(args) -> int:
    from .game import GameConfig, play, value_vs_solver
    from .solver import solve

    cfg = _config(args)
    problem = cfg.problem()
    dim = problem.dim
    if args.start:
        start = _vector(args.start, "--start")
    else:
        s = cfg["game.start"]
        start = tuple(problem.domain.center) if s == AUTO else s
    if len(start) != dim or not problem.domain.contains(np.asarray(start)):
        raise RangeError("start", start, "must be an interior point")
    paths = args.paths if args.paths is not None else cfg["game.paths"]
    kinds = (cfg["game.strategy_I"], cfg["game.strategy_II"])
    report = solve(problem) if "optimal" in kinds or args.compare else None
    game = GameConfig(problem, start, paths, _strategy(kinds[0], report, cfg, dim),
                      _strategy(kinds[1], report, cfg, dim), seed=cfg["seed"],
                      max_steps=cfg["game.max_steps"])
    stats = play(game)
    results = stats.summary()
    results["seed"] = cfg["seed"]
    results["start"] = list(start)
    if report is not None:
        d = value_vs_solver(game, report, stats)
        results.update({"solver_value": d.solver_value, "abs_error": d.abs_error,
                        "se_ratio": d.se_ratio, "agree": d.agree})
    results["config"] = _echo(cfg)
    fmt = "json" if args.format == "csv" else args.format
    if args.out:
        emit_report(results, fmt, f"{args.out}.stats")
        if cfg["game.per_path"] or args.per_path:
            rows = [{"path_id": i, "payoff": float(stats.payoffs[i]), "steps": int(stats.steps[i])}
                    for i in range(stats.paths)]
            emit_report(rows, "csv", f"{args.out}.paths.csv")
    else:
        sys.stdout.write(emit_report(results, fmt))
    print(f"simulate: mean_payoff={stats.mean_payoff:.6g} std_error={stats.std_error:.3g} "
          f"truncated={stats.truncated_paths}", file=sys.stderr)
    return 0


def cmd_extremal(args) -> int:
    from .extremal import ExtremalParams, verify_extremal_inequalities
    from .solver import solve

    cfg = _config(args)
    problem = cfg.problem()
    ExtremalParams.for_kernel(problem.params)  # refuse p > 2 before solving
    report = solve(problem)
    nodes = args.nodes if args.nodes is not None else cfg["extremal.nodes"]
    rep = verify_extremal_inequalities(report.solution, problem, nodes, seed=cfg["seed"],
                                       slack=cfg["extremal.slack"], samples=cfg["extremal.samples"])
    rows = rep.rows()
    if args.out:
        emit_report(rows, "csv", f"{args.out}.extremal.csv")
    else:
        sys.stdout.write(emit_report(rows, "csv"))
    print(f"extremal: nodes={len(rows)} worst_margin_plus={rep.worst_plus:.3e} "
          f"worst_margin_minus={rep.worst_minus:.3e} ok={rep.ok}", file=sys.stderr)
    return 0


def cmd_expansion(args) -> int:
    from .harness import (check_expansion, check_midpoint_expansion, check_normalized_limit, smooth_cos_x1,
                          smooth_exp_mix, smooth_linear, smooth_quadratic)
    from .kernel import KernelParams

    _no_randomness(args, "expansion-check")
    dim = args.dim
    funcs = {
        "cos-x1": smooth_cos_x1(),
        "quadratic": smooth_quadratic(),
        "linear": smooth_linear(np.eye(dim)[0]),
        "exp-mix": smooth_exp_mix(),
    }
    u = funcs[args.function]
    ladder = _floats(args.eps_list, "--eps-list")
    params = KernelParams(dim, args.p, max(ladder))
    x = np.zeros(dim) if args.point is None else np.asarray(_vector(args.point, "--point"))
    z = np.eye(dim)[0] if args.direction is None else np.asarray(_vector(args.direction, "--direction"))
    if x.size != dim or z.size != dim:
        raise ConfigError("--point and --direction need N components")
    if args.mode == "expansion":
        rep = check_expansion(u, x, z, params, ladder)
    elif args.mode == "limit":
        rep = check_normalized_limit(u, x, params, ladder)
    else:
        rep = check_midpoint_expansion(u, x, params, ladder)
    _emit(args, rep.rows(), "expansion", "csv")
    order = rep.fitted_order
    print(f"expansion-check: mode={args.mode} function={args.function} "
          f"fitted_order={'exact' if order is None else format(order, '.4f')} "
          f"max_remainder={max(rep.measured_remainders):.3e}", file=sys.stderr)
    return 0


def cmd_holder(args) -> int:
    from .harness import holder_quotient, holder_study
    from .solver import solve

    cfg = _config(args)
    gamma = args.gamma
    if gamma is None and cfg["holder.gamma"] != AUTO:
        gamma = cfg["holder.gamma"]
    R = cfg["holder.radius"]
    R = cfg["domain.radius"] if R == AUTO else R
    sols = []
    for eps in cfg["holder.eps_list"]:
        prob = _study_problem(cfg, eps)
        sols.append((eps, solve(prob).solution, prob.params))
    center = cfg.domain().center
    study = holder_study([(e, s) for e, s, _ in sols], R, sols[0][2], gamma=gamma, center=center,
                         pairs=cfg["holder.pairs"], seed=cfg["seed"])
    rows = study.rows()
    for row, (e, s, par) in zip(rows, sols):
        own = holder_quotient(s, R, None, par, center=center, pairs=cfg["holder.pairs"], seed=cfg["seed"])
        row["own_fitted_gamma"] = own.gamma
    _emit(args, rows, "holder", "csv")
    print(f"holder: gamma={study.gamma:.2f} ratio={study.ratio:.4f} bounded={study.bounded}", file=sys.stderr)
    return 0


def cmd_convergence(args) -> int:
    from . import problems
    from .harness import convergence_study

    _no_randomness(args, "convergence")
    cfg = _config(args)
    dim, p = cfg["dim"], cfg["p"]
    kind = cfg["convergence.exact"]
    if kind == "radial-p-harmonic":
        exact = problems.radial_power(problems.radial_p_harmonic_exponent(dim, p), cfg.domain().center)
        f = 0.0
    elif kind == "quadratic":
        exact = problems.quadratic(cfg.domain().center)
        f = problems.quadratic_source(dim, p)
    else:
        exact = problems.linear(np.eye(dim)[0], -float(np.asarray(cfg.domain().center)[0]))
        f = 0.0
    probs = [_study_problem(cfg, e).with_changes(f=f, g=exact) for e in sorted(cfg["convergence.eps_list"], reverse=True)]
    table = convergence_study(probs, exact)
    _emit(args, [r.as_dict() for r in table.rows], "convergence", "csv")
    print(f"convergence: exact={kind} errors={' '.join(format(r.sup_error, '.3e') for r in table.rows)} "
          f"nonincreasing={table.nonincreasing}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--out", help="output prefix (default: stdout)")
    common.add_argument("--seed", type=int, help="overrides the config seed")
    common.add_argument("--threads", type=int, default=1, help="FFT worker threads")
    common.add_argument("--format", choices=("text", "csv", "json"), default="json",
                        help="report format (tables are always csv)")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="tugdpp", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("constants", parents=[common], help="kernel constants and moment table")
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--mc-check", type=int, metavar="SAMPLES",
                    help="add Monte Carlo columns: kind, closed_form, mc_estimate, std_error, z_score")
    sp.set_defaults(func=cmd_constants)

    sp = sub.add_parser("solve", parents=[common], help="solve the DPP; writes PREFIX.solution.csv and "
                        "PREFIX.report.json")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("simulate", parents=[common], help="play the game; writes PREFIX.stats and, with "
                        "--per-path, PREFIX.paths.csv (path_id,payoff,steps)")
    sp.add_argument("--paths", type=int)
    sp.add_argument("--start", help='start point "x1,...,xN"')
    sp.add_argument("--per-path", action="store_true")
    sp.add_argument("--compare", action="store_true", help="also solve and compare with u(start)")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("extremal", parents=[common], help="extremal inequalities at sampled nodes; CSV "
                        "columns x1..xN,Lplus,Lminus,f,margin_plus,margin_minus")
    sp.add_argument("--nodes", type=int)
    sp.set_defaults(func=cmd_extremal)

    sp = sub.add_parser("expansion-check", parents=[common], help="expansion remainders; CSV columns "
                        "eps,remainder,predicted,measured[,angle_max,angle_min]")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--dim", type=int, default=2)
    sp.add_argument("--eps-list", default="0.2,0.1,0.05,0.025")
    sp.add_argument("--function", choices=("cos-x1", "quadratic", "linear", "exp-mix"), default="cos-x1")
    sp.add_argument("--mode", choices=("expansion", "limit", "midpoint"), default="expansion")
    sp.add_argument("--point", help='x as "x1,...,xN" (default origin)')
    sp.add_argument("--direction", help='z as "z1,...,zN" (default e1)')
    sp.set_defaults(func=cmd_expansion)

    sp = sub.add_parser("holder", parents=[common], help="Hoelder quotients over holder.eps_list; CSV "
                        "columns eps,gamma,quotient_sup,pair_count,own_fitted_gamma")
    sp.add_argument("--gamma", type=float)
    sp.set_defaults(func=cmd_holder)

    sp = sub.add_parser("convergence", parents=[common], help="sup errors over convergence.eps_list; CSV "
                        "columns eps,dx,sup_error,iterations,final_residual")
    sp.set_defaults(func=cmd_convergence)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return 2
    try:
        with sfft.set_workers(args.threads):
            return int(args.func(args))
    except TugDppError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
