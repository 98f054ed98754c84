"""Invariant suites behind the `check` CLI command.

Each suite replays the module's defining inequalities on fresh random
instances and reports the largest violation, normalized by that family's
tolerance (so any value above 1 is a failure).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import prox as px
from .bregman import PowerKernel, rrcd_run
from .core import sampler_draw
from .harness import build_surrogate, gen_quadratic_l1, gen_quartic
from .rng import Pcg32
from .smoothing import surrogate_check
from .solvers import SolverConfig, accd_step_params, doubling_schedule, restart_period


@dataclass
class SuiteReport:
    name: str
    max_violation: float = 0.0
    lines: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.max_violation <= 1.0

    def note(self, label, ratio):
        self.max_violation = max(self.max_violation, ratio)
        self.lines.append(f"  {label}: {'ok' if ratio <= 1.0 else 'FAIL'} ({ratio:.3g}x tol)")

    def summary(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return f"[{status}] {self.name} suite, max violation {self.max_violation:.3g}x tolerance"


def run_prox_suite(seed=0) -> SuiteReport:
    rep = SuiteReport("prox")
    rng = Pcg32(seed)
    n = 3
    oracles = [
        px.L2NormProx(0.7),
        px.GroupNormProx.l1(0.7, n),
        px.TV1DProx(0.5),
        px.PowerNormProx(2.0, 0.8),
        px.Ball2Prox(0.9),
        px.Ball1Prox(0.8),
        px.SimplexProx(),
        px.HyperplaneBoxProx(np.array([1.0, -0.5, 0.25]), 0.1, -1.0, 1.0),
        px.AffineSetProx(np.array([[1.0, 1.0, 0.0]]), np.array([0.5])),
    ]
    worst = 0.0
    for oracle in oracles:
        gamma = 0.5 + rng.random()
        for _ in range(100):
            x = 2 * rng.normals(n)
            y = 2 * rng.normals(n)
            d = oracle.prox(gamma, x) - oracle.prox(gamma, y)
            gap = float(d @ d) - float(d @ (x - y))
            worst = max(worst, gap / 1e-10)
    rep.note("firm nonexpansiveness", worst)

    worst = 0.0
    finite = [px.L2NormProx(0.7), px.GroupNormProx.l1(0.7, n), px.PowerNormProx(2.0, 0.8)]
    for oracle in finite:
        for _ in range(5):
            gamma = 0.5 + rng.random()
            x = 1.5 * rng.normals(n)
            ref = px.brute_force_prox(oracle.value, gamma, x)
            worst = max(worst, float(np.max(np.abs(oracle.prox(gamma, x) - ref))) / 1e-5)
    rep.note("brute-force agreement", worst)

    worst = 0.0
    for y in itertools.product([-1.0, 0.0, 1.0], repeat=4):
        got = px.prox_tv_1d(0.5, np.array(y))
        ref = px.prox_tv_1d_bruteforce(0.5, np.array(y))
        worst = max(worst, float(np.max(np.abs(got - ref))) / 1e-10)
    rep.note("tv sign-pattern oracle", worst)
    return rep


def run_smoothing_suite(seed=0, lipschitz_scale=None) -> SuiteReport:
    rep = SuiteReport("smoothing")
    bundle = gen_quadratic_l1(20, 10, 0.5, seed=seed + 100)
    for kind in ("moreau", "fb", "dr", "ns"):
        s = build_surrogate(kind, bundle)
        L = None if lipschitz_scale is None else lipschitz_scale * s.coord_lipschitz
        r = surrogate_check(
            s,
            s.original_value,
            Pcg32(seed + 7),
            trials=50,
            coord_lipschitz=L,
            cache_steps=300,
        )
        rep.note(kind, r.max_violation())
    return rep


def run_solvers_suite(seed=0) -> SuiteReport:
    from .smoothing import MoreauSurrogate
    from .solvers import cd_run

    rep = SuiteReport("solvers")
    bundle = gen_quadratic_l1(15, 8, 0.5, seed=seed + 200)
    s = build_surrogate("fb", bundle)
    rng = Pcg32(seed + 1)
    prof = s.lipschitz_profile(0.5)
    st = s.make_state(bundle.x0)
    prev = s.value_state(st)
    worst = 0.0
    for _ in range(300):
        i = sampler_draw(prof, rng)
        g = s.coord_grad(st, i)
        s.apply_step(st, i, -g / s.coord_lipschitz[i])
        cur = s.value_state(st)
        worst = max(worst, (cur - prev) / (1e-12 * (1 + abs(prev))))
        prev = cur
    rep.note("per-step descent", worst)

    a1, *_ = accd_step_params(0.0, 1.0, 1.0, 0.0)
    a2, *_ = accd_step_params(1.0, 1.0, 1.0, 0.0)
    ok = a1 == 1.0 and abs(a2 - (1 + np.sqrt(5)) / 2) < 1e-14
    rep.note("accelerated parameter recursion", 0.0 if ok else 2.0)

    ok = (
        restart_period(10, 2.0, 1.0, float(np.exp(-2))) == 55
        and restart_period(1, 2.0, 4.0, 1.0) == 1
        and restart_period(1, 1.0, 1.0, 1.0, delta0=4.0) == 4
        and doubling_schedule(5, 7) == [5, 10, 5, 20, 5, 10, 5]
    )
    rep.note("restart constants", 0.0 if ok else 2.0)

    # deterministic N=1 sublinear envelope, zero slack beyond 1e-10
    hub = MoreauSurrogate(px.L2NormProx(1.0), gamma=1.0, n=1)
    cfg = SolverConfig(max_epochs=500, grad_tol=1e-14, seed=0)
    res = cd_run(hub, [3.0], cfg)
    S = float(hub.coord_lipschitz[0] ** cfg.alpha)
    w = hub.coord_lipschitz[0] ** (1.0 - cfg.alpha)
    R2 = max(w * (x - 0.0) ** 2 for x in [3.0])  # distances shrink monotonically here
    worst = 0.0
    f_star = 0.0
    for rec in res.trace.records:
        bound = 2.0 * S * R2 / (rec.k + 4.0)
        worst = max(worst, (rec.f_gamma - f_star - bound) / 1e-10)
    rep.note("N=1 sublinear envelope", worst)
    return rep


def run_bregman_suite(seed=0) -> SuiteReport:
    rep = SuiteReport("bregman")
    rng = Pcg32(seed + 5)
    prob, x0 = gen_quartic(8, seed=seed + 300)
    kernel = PowerKernel(4.0)
    part = prob.partition
    worst = 0.0
    for _ in range(200):
        x = rng.normals(8)
        i = rng.randint(8)
        d = rng.normals(1)
        sl = part.slice(i)
        y = x.copy()
        y[sl] += d
        lhs = prob.value(y)
        rhs = (
            prob.value(x)
            + float(prob.coord_grad(x, i) @ d)
            + prob.rel_lipschitz[i] * kernel.coord_bregman(x, sl, d)
        )
        worst = max(worst, (lhs - rhs) / (1e-10 * (1 + abs(rhs))))
    rep.note("relative smoothness certificate", worst)

    worst = 0.0
    for _ in range(100):
        x = rng.normals(8)
        i = rng.randint(8)
        sl = part.slice(i)
        g = prob.coord_grad(x, i)
        d = kernel.solve_subproblem(x, sl, g, prob.rel_lipschitz[i])
        y = x.copy()
        y[sl] += d
        res = g + prob.rel_lipschitz[i] * (kernel.grad(y)[sl] - kernel.grad(x)[sl])
        worst = max(
            worst,
            float(np.linalg.norm(res)) / (1e-8 * (1 + float(np.linalg.norm(g)))),
        )
    rep.note("subproblem stationarity", worst)

    from .bregman import _positive_root_cubic

    t = _positive_root_cubic(1.0, 2.0, 1.0, -4.0)
    rep.note("sextic hand root", abs(np.sqrt(t) - 1.0) / 1e-12)

    res = rrcd_run(prob, kernel, x0, SolverConfig(max_epochs=50, grad_tol=1e-12, seed=1, trace_every=5))
    fv = res.trace.column("f_gamma")
    worst = float(np.max(np.diff(fv) / (1e-12 * (1 + np.abs(fv[:-1]))), initial=0.0))
    rep.note("rrcd descent", worst)
    return rep


SUITES = {
    "prox": run_prox_suite,
    "smoothing": run_smoothing_suite,
    "solvers": run_solvers_suite,
    "bregman": run_bregman_suite,
}


def run_suites(names=None, seed=0):
    names = list(SUITES) if not names else list(names)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ValueError(f"unknown suite(s) {unknown}; valid: {sorted(SUITES)}")
    return [SUITES[n](seed=seed) for n in names]
