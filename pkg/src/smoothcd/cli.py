"""Command-line front end: solve one problem, run a grid, check invariants,
or print the rate constants.

Exit codes: 0 success, 1 runtime failure, 2 usage/configuration error.
Config precedence for `solve`: command-line overrides > config file > defaults.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np
import scipy.sparse as sp

from . import checks, harness
from . import prox as proxops
from .core import ConfigurationError, NumericalFailure
from .harness import ProblemBundle, SMOOTHINGS
from .problems import QuadraticComposite, SaddleProblem


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smoothcd",
        description="Coordinate descent on smooth surrogates of nonsmooth convex objectives.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser(
        "solve",
        help="run one solver on one problem and write its trace CSV",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p_solve.add_argument("--config", required=True, help="JSON run configuration")
    p_solve.add_argument("--gamma", type=float, default=None, help="smoothing parameter override")
    p_solve.add_argument("--alpha", type=float, default=None, help="sampler exponent override")
    p_solve.add_argument("--seed", type=int, default=None, help="RNG seed override")
    p_solve.add_argument("--tol", type=float, default=None, help="gradient tolerance override")
    p_solve.add_argument("--epochs", type=int, default=None, help="epoch budget override")
    p_solve.add_argument("--out", default=None, help="trace CSV path override")

    p_bench = sub.add_parser(
        "bench",
        help="run a smoothing-by-solver experiment grid",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p_bench.add_argument("--spec", required=True, help="experiment spec (JSON or TOML)")
    p_bench.add_argument("--out", default=None, help="result directory override")
    p_bench.add_argument("--workers", type=int, default=None, help="worker pool size")

    p_check = sub.add_parser(
        "check",
        help="run the invariant suites",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p_check.add_argument(
        "--suite",
        action="append",
        default=None,
        help="suite to run (repeatable); default: all of prox, smoothing, solvers, bregman",
    )
    p_check.add_argument("--seed", type=int, default=0, help="suite RNG seed")

    p_const = sub.add_parser(
        "constants",
        help="print restart periods, growth constants, contraction factors",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    csub = p_const.add_subparsers(dest="table", required=True)

    c_rp = csub.add_parser("restart-period", formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    c_rp.add_argument("--blocks", type=int, required=True, help="block count N")
    c_rp.add_argument("--qbar", type=float, required=True)
    c_rp.add_argument("--kappa-bar", type=float, required=True)
    c_rp.add_argument("--alpha-restart", type=float, required=True)
    c_rp.add_argument("--delta0", type=float, default=None, help="F(x0) - F*, needed if qbar < 2")

    c_gr = csub.add_parser("growth", formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    c_gr.add_argument("--family", choices=["me", "fb", "ns"], required=True)
    c_gr.add_argument("--q", type=float, required=True)
    c_gr.add_argument("--kappa", type=float, required=True)
    c_gr.add_argument("--gamma", type=float, default=None)
    c_gr.add_argument("--lipschitz", type=float, default=None, help="L of grad f (fb)")
    c_gr.add_argument("--lmax", type=float, default=None, help="max block constant")
    c_gr.add_argument("--radius", type=float, default=None, help="level-set radius R")

    c_c1 = csub.add_parser("c1", formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    c_c1.add_argument("--kappa-bar", type=float, required=True)
    c_c1.add_argument("--qbar", type=float, required=True)
    c_c1.add_argument("--blocks", type=int, required=True)
    c_c1.add_argument("--delta0", type=float, default=None)

    c_db = csub.add_parser("doubling", formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    c_db.add_argument("--k0", type=int, required=True)
    c_db.add_argument("--count", type=int, required=True)

    return parser


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


def _saddle_view_of(quad: QuadraticComposite) -> SaddleProblem | None:
    """Derive the saddle representation the ns smoothing needs from psi."""
    psi = quad.psi
    n = quad.n
    if isinstance(psi, proxops.L2NormProx) and psi.lam > 0:
        return SaddleProblem.smoothed_norm(
            psi.lam, n, f_A=quad.A, f_b=quad.b, f_offset=quad.offset
        )
    if isinstance(psi, proxops.GroupNormProx) and psi._singleton and psi.lam > 0:
        return SaddleProblem.l1_residual(
            sp.identity(n, format="csc") * psi.lam,
            np.zeros(n),
            f_A=quad.A,
            f_b=quad.b,
            f_offset=quad.offset,
        )
    if isinstance(psi, proxops.TV1DProx) and psi.lam > 0:
        D = sp.diags([np.ones(n - 1), -np.ones(n - 1)], [0, 1], shape=(n - 1, n)).tocsc()
        return SaddleProblem.l1_residual(
            D * psi.lam, np.zeros(n - 1), f_A=quad.A, f_b=quad.b, f_offset=quad.offset
        )
    return None


def _load_bundle(problem_doc, x0=None) -> ProblemBundle:
    if isinstance(problem_doc, str):
        quad = QuadraticComposite.load(problem_doc)
    elif isinstance(problem_doc, dict) and "kind" in problem_doc:
        return harness.generate_problem(problem_doc)
    elif isinstance(problem_doc, dict) and "A" in problem_doc:
        quad = QuadraticComposite.from_json(problem_doc)
    else:
        raise ValueError(
            "problem must be a path, a generator spec with 'kind', or an inline problem document"
        )
    start = np.asarray(x0, dtype=float) if x0 is not None else np.zeros(quad.n)
    return ProblemBundle(
        "file", quad, _saddle_view_of(quad), start, getattr(quad.psi, "lam", 0.0), 0
    )


def cmd_solve(args) -> int:
    with open(args.config) as fh:
        cfg = json.load(fh)
    if "problem" not in cfg:
        raise ValueError("config needs a 'problem' entry")
    bundle = _load_bundle(cfg["problem"], x0=cfg.get("x0"))
    smoothing = cfg.get("smoothing", "fb")
    if smoothing not in SMOOTHINGS:
        raise ValueError(f"unknown smoothing {smoothing!r}; valid: {SMOOTHINGS}")
    gamma = args.gamma if args.gamma is not None else cfg.get("gamma")
    solver_doc = {
        "solver": cfg.get("solver", "cd"),
        "alpha": args.alpha if args.alpha is not None else cfg.get("alpha", 0.0),
        "epochs": args.epochs if args.epochs is not None else cfg.get("epochs", 1000),
        "tol": args.tol if args.tol is not None else cfg.get("tol", 1e-1),
        "sigma_1ma": cfg.get("sigma_1ma", 0.0),
        "trace_every": cfg.get("trace_every", 1),
        "restart": cfg.get("restart", {}),
    }
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    out = args.out if args.out is not None else cfg.get("out", "trace.csv")
    surrogate = harness.build_surrogate(smoothing, bundle, gamma)
    row = _run_from_bundle(bundle, surrogate, solver_doc, seed, out)
    print(
        f"smoothing={smoothing} solver={row['solver']} seed={seed} "
        f"epochs={row['epochs']:g} converged={row['converged']}"
    )
    print(f"F_gamma      = {row['f_gamma']:.12g}")
    print(f"F(map_B(x))  = {row['f_orig_at_B']:.12g}")
    print(f"grad norm    = {row['grad_norm']:.6g}")
    print(f"trace        -> {out}")
    return 0


def _run_from_bundle(bundle, surrogate, solver_doc, seed, trace_path):
    from .solvers import DoublingRestart, FixedRestart, accd_run, cd_run, restart_run

    cfg = harness._solver_config(solver_doc, seed)
    solver = solver_doc["solver"]
    if solver == "cd":
        res = cd_run(surrogate, bundle.x0, cfg)
    elif solver == "accd":
        res = accd_run(surrogate, bundle.x0, cfg)
    elif solver == "restart":
        rdoc = solver_doc.get("restart") or {}
        K0 = int(rdoc.get("K0", max(1, int(0.01 * np.e * bundle.quadratic.n))))
        mode = rdoc.get("mode", "doubling")
        if mode == "fixed":
            schedule = FixedRestart(K0)
        elif mode == "doubling":
            schedule = DoublingRestart(K0)
        else:
            raise ValueError(f"unknown restart mode {mode!r}; valid: fixed, doubling")
        res = restart_run(surrogate, bundle.x0, cfg, schedule)
    else:
        raise ValueError(f"unknown solver {solver!r}; valid: {harness.SOLVERS}")
    res.trace.save(trace_path)
    return {
        "solver": solver,
        "epochs": res.epochs,
        "converged": res.converged,
        "f_gamma": res.f_gamma,
        "f_orig_at_B": res.f_orig_at_B,
        "grad_norm": res.grad_norm,
    }


def cmd_bench(args) -> int:
    spec = harness.ExperimentSpec.from_file(args.spec)
    summary = harness.run_experiment(spec, out_dir=args.out, max_workers=args.workers)
    for key, stats in sorted(summary["groups"].items()):
        med = stats["median_epochs_to_tol"]
        med_s = "n/a" if med is None else f"{med:g}"
        print(
            f"{key}: median epochs to tol {med_s}, success rate {stats['success_rate']:.2f}"
        )
    n_err = sum(1 for r in summary["runs"] if r.get("error"))
    if n_err:
        print(f"{n_err} run(s) failed", file=sys.stderr)
        return 1
    print("all runs completed")
    return 0


def cmd_check(args) -> int:
    reports = checks.run_suites(args.suite, seed=args.seed)
    all_ok = True
    for rep in reports:
        print(rep.summary())
        for line in rep.lines:
            print(line)
        all_ok = all_ok and rep.passed
    return 0 if all_ok else 1


def cmd_constants(args) -> int:
    from . import rates, solvers

    if args.table == "restart-period":
        val = solvers.restart_period(
            args.blocks, args.qbar, args.kappa_bar, args.alpha_restart, delta0=args.delta0
        )
        print(f"restart_period K(alpha) = {val}")
    elif args.table == "growth":
        if args.family == "me":
            if args.gamma is None:
                raise ValueError("--gamma is required for the me family")
            val = rates.growth_constant_me(args.q, args.kappa, args.gamma, R=args.radius)
        elif args.family == "fb":
            if args.gamma is None or args.lipschitz is None or args.lmax is None:
                raise ValueError("--gamma, --lipschitz and --lmax are required for fb")
            val = rates.growth_constant_fb(
                args.q, args.kappa, args.gamma, args.lipschitz, args.lmax, R=args.radius
            )
        else:
            if args.lmax is None:
                raise ValueError("--lmax is required for ns")
            val = rates.growth_constant_ns(args.q, args.kappa, args.lmax, R=args.radius)
        print(f"kappa_hat ({args.family}, q={args.q:g}) = {val!r}")
    elif args.table == "c1":
        val = rates.contraction_C1(args.kappa_bar, args.qbar, args.blocks, Delta0=args.delta0)
        print(f"C1 = {val!r}")
    elif args.table == "doubling":
        seq = solvers.doubling_schedule(args.k0, args.count)
        print("doubling schedule:", " ".join(str(v) for v in seq))
    return 0


_USAGE_ERRORS = (
    ValueError,
    KeyError,
    ConfigurationError,
    FileNotFoundError,
    json.JSONDecodeError,
)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits: 0 for --help, 2 for usage errors
        return int(exc.code or 0)
    try:
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "bench":
            return cmd_bench(args)
        if args.command == "check":
            return cmd_check(args)
        return cmd_constants(args)
    except _USAGE_ERRORS as exc:
        print(f"smoothcd: error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"smoothcd: numerical failure: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"smoothcd: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
