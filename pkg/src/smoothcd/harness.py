"""Problem generators, reference solutions, and the benchmark grid runner.

Every random draw comes from the package generator seeded by the problem
seed, in a fixed documented order, so a (spec, seed) pair determines every
output byte apart from wall-time columns.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import prox as proxops
from .bregman import QuarticProblem
from .problems import QuadraticComposite, SaddleProblem
from .rng import Pcg32
from .smoothing import (
    DouglasRachfordSurrogate,
    ForwardBackwardSurrogate,
    MoreauSurrogate,
    NesterovSurrogate,
)
from .solvers import (
    DoublingRestart,
    FixedRestart,
    SolverConfig,
    accd_run,
    cd_run,
    restart_run,
)

SMOOTHINGS = ("moreau", "fb", "dr", "ns")
SOLVERS = ("cd", "accd", "restart")


@dataclass
class ProblemBundle:
    """One generated instance in both representations the smoothings need."""

    kind: str
    quadratic: QuadraticComposite
    saddle: SaddleProblem | None
    x0: np.ndarray
    lam: float
    seed: int
    meta: dict = field(default_factory=dict)

    def objective(self, x):
        return self.quadratic.objective(x)


def _sparse_normal(rng: Pcg32, m: int, n: int, density: float) -> np.ndarray:
    """Dense array with N(0,1) entries kept with probability `density`.

    Draw order: m*n uniforms (mask), then m*n normals (values).
    """
    mask = rng.uniforms(m * n) < density
    vals = rng.normals(m * n)
    return (vals * mask).reshape(m, n)


def gen_quadratic_l2(n, m, lam, seed, density=0.1) -> ProblemBundle:
    """(1/2)||Bx - c||^2 + lam ||x||, B m-by-n sparse standard normal.

    Draw order: B (mask then values), c, x0.
    """
    rng = Pcg32(seed)
    B = _sparse_normal(rng, m, n, density)
    c = rng.normals(m)
    x0 = rng.normals(n)
    psi = proxops.L2NormProx(lam) if lam > 0 else proxops.ZeroProx()
    quad = QuadraticComposite.from_least_squares(B, c, psi)
    saddle = None
    if lam > 0:
        saddle = SaddleProblem.smoothed_norm(
            lam, n, f_A=quad.A, f_b=quad.b, f_offset=quad.offset
        )
    return ProblemBundle("quadratic_l2", quad, saddle, x0, lam, seed, {"B": B, "c": c})


def gen_quadratic_l1(n, m, lam, seed, identity=False, density=0.1) -> ProblemBundle:
    """(1/2)||Bx - c||^2 + lam ||x||_1; identity=True gives B = I (m ignored),
    whose minimizer is the soft threshold of c.  Draw order: B?, c, x0."""
    rng = Pcg32(seed)
    if identity:
        B = np.eye(n)
        m = n
    else:
        B = _sparse_normal(rng, m, n, density)
    c = rng.normals(m)
    x0 = rng.normals(n)
    psi = proxops.GroupNormProx.l1(lam, n) if lam > 0 else proxops.ZeroProx()
    quad = QuadraticComposite.from_least_squares(B, c, psi)
    saddle = None
    if lam > 0:
        saddle = SaddleProblem.l1_residual(
            sp.identity(n, format="csc") * lam,
            np.zeros(n),
            f_A=quad.A,
            f_b=quad.b,
            f_offset=quad.offset,
        )
    return ProblemBundle(
        "quadratic_l1", quad, saddle, x0, lam, seed, {"B": B, "c": c, "identity": identity}
    )


def gen_quadratic_tv(n, lam, seed, rotations=None) -> ProblemBundle:
    """(1/2)||Bx - c||^2 + lam * TV(x) with B = Q^T C Q, Q a product of
    random Givens rotations and C = diag(100, uniform(n/2-1), zeros(n/2)).

    For odd n the zero part keeps n//2 entries and the uniform part the
    remaining n - 1 - n//2.  Draw order: rotations (pair + angle each),
    spectrum uniforms, c, x0.
    """
    rng = Pcg32(seed)
    rotations = rotations if rotations is not None else 5 * n
    Q = np.eye(n)
    for _ in range(rotations):
        i = rng.randint(n)
        j = rng.randint(n - 1)
        if j >= i:
            j += 1
        theta = rng.uniform(0.0, 2.0 * math.pi)
        ci, si = math.cos(theta), math.sin(theta)
        qi = Q[i].copy()
        qj = Q[j].copy()
        Q[i] = ci * qi + si * qj
        Q[j] = -si * qi + ci * qj
    n_zero = n // 2
    n_rand = n - 1 - n_zero
    spectrum = np.concatenate(([100.0], rng.uniforms(n_rand), np.zeros(n_zero)))
    B = Q.T @ (spectrum[:, None] * Q)
    A = Q.T @ ((spectrum**2)[:, None] * Q)
    A = 0.5 * (A + A.T)
    c = rng.normals(n)
    x0 = rng.normals(n)
    psi = proxops.TV1DProx(lam) if lam > 0 else proxops.ZeroProx()
    quad = QuadraticComposite(
        A,
        -(B @ c),
        psi,
        lipschitz_L=100.0**2 * (1 + 1e-12),
        offset=0.5 * float(c @ c),
    )
    saddle = None
    if lam > 0:
        D = sp.diags([np.ones(n - 1), -np.ones(n - 1)], [0, 1], shape=(n - 1, n)).tocsc()
        saddle = SaddleProblem.l1_residual(
            D * lam, np.zeros(n - 1), f_A=quad.A, f_b=quad.b, f_offset=quad.offset
        )
    return ProblemBundle("quadratic_tv", quad, saddle, x0, lam, seed, {"B": B, "c": c, "Q": Q})


def gen_quartic(n, seed, scale=0.2, strong=1.0, m_e=None, m_a=None):
    """Random quartic objective for the relative-smooth solver; returns
    (problem, x0).  Draw order: E, A, b, f factor, f_b, x0."""
    rng = Pcg32(seed)
    m_e = m_e or n
    m_a = m_a or n
    E = scale * rng.normals(m_e * n).reshape(m_e, n)
    A = scale * rng.normals(m_a * n).reshape(m_a, n)
    b = 0.5 * rng.normals(m_a)
    M = rng.normals(n * n).reshape(n, n)
    f_A = M.T @ M / n + strong * np.eye(n)
    f_b = rng.normals(n)
    x0 = rng.normals(n)
    return QuarticProblem(E, A, b, f_A=f_A, f_b=f_b), x0


# ---------------------------------------------------------------------------
# reference solutions and small numeric helpers
# ---------------------------------------------------------------------------


@dataclass
class ReferenceSolution:
    x: np.ndarray
    value: float
    exact: bool
    converged: bool


def reference_solve(bundle, grad_tol=1e-10, max_epochs=40000, seed=0) -> ReferenceSolution:
    """High-accuracy (x*, F*) for a bundle.

    Identity-quadratic + l1 instances are solved in closed form (soft
    threshold); anything else by a long restart-accelerated run on the
    Forward-Backward surrogate with a small gamma, reporting F(map_B(x)).
    """
    quad = bundle.quadratic if isinstance(bundle, ProblemBundle) else bundle
    psi = quad.psi
    if (
        isinstance(psi, proxops.GroupNormProx)
        and psi._singleton
        and quad.is_identity()
    ):
        c = -quad.b
        x = np.sign(c) * np.maximum(np.abs(c) - psi.lam, 0.0)
        return ReferenceSolution(x, quad.objective(x), exact=True, converged=True)
    gamma = 0.1 / max(quad.lipschitz_L, 1e-12)
    s = ForwardBackwardSurrogate(quad, gamma)
    n = quad.n
    x0 = bundle.x0 if isinstance(bundle, ProblemBundle) else np.zeros(n)
    cfg = SolverConfig(max_epochs=max_epochs, grad_tol=grad_tol, seed=seed, trace_every=25)
    res = restart_run(s, x0, cfg, DoublingRestart(K0=max(1, 2 * quad.partition.N)))
    x = s.map_B(s.make_state(res.x))
    return ReferenceSolution(x, quad.objective(x), exact=False, converged=res.converged)


def finite_diff_grad(f, x, h=1e-6) -> np.ndarray:
    """Central finite differences per coordinate."""
    x = np.asarray(x, dtype=float)
    g = np.empty(x.size)
    for j in range(x.size):
        xp = x.copy()
        xp[j] += h
        xm = x.copy()
        xm[j] -= h
        g[j] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def linear_fit(xs, ys):
    """Least-squares line fit; returns (slope, intercept, r_squared)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


# ---------------------------------------------------------------------------
# surrogate construction from run configuration
# ---------------------------------------------------------------------------


def resolve_gamma(kind, gamma_spec, bundle) -> float:
    """Smoothing parameter from a number, an {"rule": ...} dict, or defaults.

    Defaults: moreau 1.0; fb/dr 0.5/L; ns eps/(2 D_bar) with eps = 0.1.
    """
    if kind == "ns" and bundle.saddle is None:
        raise ValueError("this instance has no saddle view (lam = 0); ns unavailable")
    if isinstance(gamma_spec, dict):
        if gamma_spec.get("rule") != "eps_over_2D":
            raise ValueError(f"unknown gamma rule {gamma_spec!r}")
        if kind != "ns":
            raise ValueError("the eps_over_2D rule applies to the ns smoothing only")
        eps = float(gamma_spec["eps"])
        return eps / (2.0 * bundle.saddle.D_bar)
    if gamma_spec is not None:
        return float(gamma_spec)
    if kind == "moreau":
        return 1.0
    if kind in ("fb", "dr"):
        return 0.5 / bundle.quadratic.lipschitz_L
    if kind == "ns":
        return 0.1 / (2.0 * bundle.saddle.D_bar)
    raise ValueError(f"unknown smoothing {kind!r}; valid: {SMOOTHINGS}")


def build_surrogate(kind, bundle: ProblemBundle, gamma=None):
    """Surrogate of the bundle's objective for one of the four smoothings."""
    if kind not in SMOOTHINGS:
        raise ValueError(f"unknown smoothing {kind!r}; valid: {SMOOTHINGS}")
    g = resolve_gamma(kind, gamma, bundle)
    quad = bundle.quadratic
    if kind == "moreau":
        oracle = proxops.CompositeProx(
            quad.A.toarray(), quad.b, quad.psi, lipschitz=quad.lipschitz_L, offset=quad.offset
        )
        return MoreauSurrogate(oracle, g, partition=quad.partition)
    if kind == "fb":
        return ForwardBackwardSurrogate(quad, g)
    if kind == "dr":
        return DouglasRachfordSurrogate(quad, g)
    if bundle.saddle is None:
        raise ValueError("this instance has no saddle view (lam = 0); ns unavailable")
    return NesterovSurrogate(bundle.saddle, g)


# ---------------------------------------------------------------------------
# experiment grid
# ---------------------------------------------------------------------------

_GENERATORS = {
    "quadratic_l2": gen_quadratic_l2,
    "quadratic_l1": gen_quadratic_l1,
    "quadratic_tv": gen_quadratic_tv,
}


def generate_problem(doc: dict) -> ProblemBundle:
    """Build a bundle from a problem descriptor {"kind", "n", ...}."""
    doc = dict(doc)
    kind = doc.pop("kind")
    if kind not in _GENERATORS:
        raise ValueError(f"unknown problem kind {kind!r}; valid: {sorted(_GENERATORS)}")
    return _GENERATORS[kind](**doc)


@dataclass
class ExperimentSpec:
    """A smoothing-by-solver grid over one generated problem family."""

    problem: dict
    smoothings: list
    solvers: list
    repeats: int = 1
    out: str = "results"

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if int(self.problem.get("n", 1)) < 1:
            raise ValueError("problem dimension must be >= 1")
        if not self.smoothings or not self.solvers:
            raise ValueError("need at least one smoothing and one solver")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentSpec":
        return cls(
            problem=doc["problem"],
            smoothings=doc["smoothings"],
            solvers=doc["solvers"],
            repeats=int(doc.get("repeats", 1)),
            out=doc.get("out", "results"),
        )

    @classmethod
    def from_file(cls, path) -> "ExperimentSpec":
        path = Path(path)
        if path.suffix == ".toml":
            try:
                import tomllib as toml
            except ImportError:
                import tomli as toml
            with open(path, "rb") as fh:
                return cls.from_dict(toml.load(fh))
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _solver_config(doc: dict, seed: int) -> SolverConfig:
    return SolverConfig(
        alpha=float(doc.get("alpha", 0.0)),
        max_epochs=int(doc.get("epochs", 1000)),
        grad_tol=float(doc.get("tol", 1e-1)),
        seed=seed,
        trace_every=int(doc.get("trace_every", 1)),
        sigma_1ma=float(doc.get("sigma_1ma", 0.0)),
    )


def run_single(problem_doc, smoothing_doc, solver_doc, seed, trace_path=None) -> dict:
    """Generate, smooth, solve; returns the summary row for one run."""
    bundle = generate_problem(problem_doc)
    if isinstance(smoothing_doc, str):
        smoothing_doc = {"smoothing": smoothing_doc}
    kind = smoothing_doc["smoothing"]
    surrogate = build_surrogate(kind, bundle, smoothing_doc.get("gamma"))
    solver = solver_doc.get("solver", "cd")
    cfg = _solver_config(solver_doc, seed)
    if solver == "cd":
        res = cd_run(surrogate, bundle.x0, cfg)
    elif solver == "accd":
        res = accd_run(surrogate, bundle.x0, cfg)
    elif solver == "restart":
        rdoc = solver_doc.get("restart", {})
        K0 = int(rdoc.get("K0", max(1, int(0.01 * math.e * bundle.quadratic.n))))
        mode = rdoc.get("mode", "doubling")
        if mode == "fixed":
            schedule = FixedRestart(K0)
        elif mode == "doubling":
            schedule = DoublingRestart(K0)
        else:
            raise ValueError(f"unknown restart mode {mode!r}; valid: fixed, doubling")
        res = restart_run(surrogate, bundle.x0, cfg, schedule)
    else:
        raise ValueError(f"unknown solver {solver!r}; valid: {SOLVERS}")
    if trace_path is not None:
        res.trace.save(trace_path)
    return {
        "smoothing": kind,
        "solver": solver,
        "alpha": cfg.alpha,
        "seed": seed,
        "converged": bool(res.converged),
        "epochs": res.epochs,
        "epochs_to_tol": res.epochs if res.converged else None,
        "iterations": res.iterations,
        "f_gamma": res.f_gamma,
        "f_orig_at_B": res.f_orig_at_B,
        "grad_norm": res.grad_norm,
        "time_s": res.trace.records[-1].time_s,
        "inexact_prox": bool(res.inexact_prox),
        "error": None,
    }


def _execute_run(doc):
    try:
        return doc["id"], run_single(
            doc["problem"], doc["smoothing"], doc["solver"], doc["seed"], doc["trace_path"]
        )
    except Exception as exc:  # grid keeps going; the row records the failure
        return doc["id"], {
            "smoothing": doc["smoothing"]["smoothing"]
            if isinstance(doc["smoothing"], dict)
            else doc["smoothing"],
            "solver": doc["solver"].get("solver", "cd"),
            "seed": doc["seed"],
            "error": f"{type(exc).__name__}: {exc}",
        }


def max_workers_default() -> int:
    env = os.environ.get("SMOOTHCD_THREADS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def run_experiment(spec: ExperimentSpec, out_dir=None, max_workers=None) -> dict:
    """Execute the grid, write one trace CSV per run plus summary.json.

    Individual run failures are recorded in their rows and the grid
    continues.  Returns the summary document.
    """
    out = Path(out_dir if out_dir is not None else spec.out)
    traces = out / "traces"
    traces.mkdir(parents=True, exist_ok=True)
    runs = []
    rid = 0
    for sm in spec.smoothings:
        sm_doc = {"smoothing": sm} if isinstance(sm, str) else sm
        for sv in spec.solvers:
            base_seed = int(sv.get("seed", 0))
            for r in range(spec.repeats):
                seed = base_seed + r
                name = f"{spec.problem['kind']}_{sm_doc['smoothing']}_{sv.get('solver', 'cd')}_s{seed}.csv"
                runs.append(
                    {
                        "id": rid,
                        "problem": spec.problem,
                        "smoothing": sm_doc,
                        "solver": sv,
                        "seed": seed,
                        "trace_path": str(traces / name),
                    }
                )
                rid += 1
    workers = max_workers if max_workers is not None else max_workers_default()
    results = {}
    if workers > 1 and len(runs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for run_id, row in pool.map(_execute_run, runs):
                results[run_id] = row
    else:
        for doc in runs:
            run_id, row = _execute_run(doc)
            results[run_id] = row
    rows = [results[i] for i in range(rid)]
    groups = {}
    for row in rows:
        if row.get("error"):
            continue
        key = f"{row['smoothing']}+{row['solver']}"
        groups.setdefault(key, []).append(row)
    group_stats = {}
    for key, grp in sorted(groups.items()):
        done = [g["epochs_to_tol"] for g in grp if g["converged"]]
        group_stats[key] = {
            "median_epochs_to_tol": float(np.median(done)) if done else None,
            "median_time_s": float(np.median([g["time_s"] for g in grp])),
            "success_rate": sum(g["converged"] for g in grp) / len(grp),
        }
    summary = {
        "problem": spec.problem,
        "repeats": spec.repeats,
        "completed": all(not r.get("error") for r in rows),
        "runs": rows,
        "groups": group_stats,
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return summary
