"""Random coordinate descent on a smooth surrogate, plus acceleration and restarts.

All three drivers share the trace format (one row per `trace_every` epochs:
k, epoch, wall time, F_gamma, F at map_B, full surrogate gradient norm) and
the stopping rule ``||grad F_gamma(x)|| <= grad_tol`` checked only at trace
points, so between checks an iteration touches one block.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .core import ConfigurationError, NumericalFailure, sampler_draw_many
from .rng import Pcg32


@dataclass
class SolverConfig:
    """Run parameters shared by the coordinate descent drivers.

    alpha is the sampler exponent (the accelerated method samples with alpha
    and weights with beta = alpha/2); sigma_1ma is the strong convexity
    parameter of the surrogate w.r.t. the (1-alpha)-weighted norm.
    """

    alpha: float = 0.0
    max_epochs: int = 1000
    grad_tol: float = 1e-1
    seed: int = 0
    trace_every: int = 1
    sigma_1ma: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if self.trace_every < 1:
            raise ValueError("trace_every must be >= 1")
        if self.sigma_1ma < 0:
            raise ValueError("sigma_1ma must be nonnegative")


@dataclass
class TraceRecord:
    k: int
    epoch: float
    time_s: float
    f_gamma: float
    f_orig_at_B: float
    grad_norm: float


CSV_HEADER = "k,epoch,time_s,f_gamma,f_orig_at_B,grad_norm"


class Trace:
    """Per-checkpoint rows of a run; serializes to a fixed-header CSV."""

    def __init__(self):
        self.records: list[TraceRecord] = []

    def append(self, rec: TraceRecord):
        self.records.append(rec)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def csv_text(self) -> str:
        lines = [CSV_HEADER]
        for r in self.records:
            lines.append(
                f"{r.k},{r.epoch!r},{r.time_s!r},{r.f_gamma!r},{r.f_orig_at_B!r},{r.grad_norm!r}"
            )
        return "\n".join(lines) + "\n"

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.csv_text())

    def __len__(self):
        return len(self.records)


@dataclass
class SolveResult:
    x: np.ndarray
    f_gamma: float
    f_orig_at_B: float
    grad_norm: float
    iterations: int
    epochs: float
    converged: bool
    trace: Trace
    inexact_prox: bool = False
    rounds: list | None = None


class _Tracer:
    """Evaluates and appends checkpoints; raises on non-finite state."""

    def __init__(self, surrogate, trace: Trace, N: int):
        self.s = surrogate
        self.trace = trace
        self.N = N
        self.t0 = time.perf_counter()

    def checkpoint(self, st, k: int):
        s = self.s
        fg = s.value_state(st)
        g = s.full_grad(st)
        gn = float(np.linalg.norm(g))
        if not (np.isfinite(fg) and np.isfinite(gn)):
            raise NumericalFailure(
                f"non-finite surrogate state at iteration {k}",
                k=k,
                x=st.x.copy(),
                f_gamma=fg,
                grad_norm=gn,
            )
        fb = s.original_value(s.map_B(st))
        self.trace.append(
            TraceRecord(k, k / self.N, time.perf_counter() - self.t0, fg, fb, gn)
        )
        return fg, fb, gn


def _result(surrogate, st, tracer, k, converged, trace, rounds=None):
    last = trace.records[-1]
    return SolveResult(
        x=st.x.copy(),
        f_gamma=last.f_gamma,
        f_orig_at_B=last.f_orig_at_B,
        grad_norm=last.grad_norm,
        iterations=k,
        epochs=k / surrogate.partition.N,
        converged=converged,
        trace=trace,
        inexact_prox=surrogate.is_inexact,
        rounds=rounds,
    )


def cd_run(surrogate, x0, cfg: SolverConfig) -> SolveResult:
    """Algorithm: sample block i with probability L_i^alpha/S_alpha, step
    x += -U_i grad_i F_gamma(x) / L_i.  Per-step descent is exact."""
    rng = Pcg32(cfg.seed)
    part = surrogate.partition
    N = part.N
    L = surrogate.coord_lipschitz
    profile = surrogate.lipschitz_profile(cfg.alpha)
    st = surrogate.make_state(x0)
    trace = Trace()
    tracer = _Tracer(surrogate, trace, N)
    _, _, gn = tracer.checkpoint(st, 0)
    converged = gn <= cfg.grad_tol
    coord_grad = surrogate.coord_grad
    apply_step = surrogate.apply_step
    k = 0
    epoch = 0
    while not converged and epoch < cfg.max_epochs:
        span = min(cfg.trace_every, cfg.max_epochs - epoch)
        idxs = sampler_draw_many(profile, rng, span * N).tolist()
        for i in idxs:
            g = coord_grad(st, i)
            apply_step(st, i, g / (-L[i]))
        k += span * N
        epoch += span
        _, _, gn = tracer.checkpoint(st, k)
        converged = gn <= cfg.grad_tol
    return _result(surrogate, st, tracer, k, converged, trace)


def accd_step_params(A_k, B_k, S_beta, sigma=0.0):
    """One step of the accelerated parameter recursion.

    a_{k+1} is the positive root of a^2 S_beta^2 = (A_k + a)(B_k + sigma a),
    i.e. of (S_beta^2 - sigma) a^2 - (B_k + sigma A_k) a - A_k B_k = 0;
    returns (a_{k+1}, A_{k+1}, B_{k+1}, alpha_k, beta_k).
    """
    if A_k < 0 or B_k < 1 - 1e-12 or S_beta <= 0 or sigma < 0:
        raise ValueError("need A_k >= 0, B_k >= 1, S_beta > 0, sigma >= 0")
    qa = S_beta * S_beta - sigma
    if qa <= 0:
        raise ConfigurationError("sigma must be < S_beta^2 for the recursion to be solvable")
    qb = B_k + sigma * A_k
    a = (qb + math.sqrt(qb * qb + 4.0 * qa * A_k * B_k)) / (2.0 * qa)
    A_next = A_k + a
    B_next = B_k + sigma * a
    return a, A_next, B_next, a / A_next, sigma * a / B_next


def _accd_segment(surrogate, st_x, rng, cfg, max_steps, tracer=None, k_offset=0):
    """Run `max_steps` accelerated coordinate iterations in place on st_x.

    Fresh (A_k, B_k, nu) sequences per call, which is what the restart
    wrapper requires.  Returns (steps_done, converged_flag).
    """
    part = surrogate.partition
    N = part.N
    L = surrogate.coord_lipschitz
    alpha = cfg.alpha
    beta = alpha / 2.0
    sigma = cfg.sigma_1ma
    S_beta = float(np.sum(L**beta))
    profile = surrogate.lipschitz_profile(alpha)
    p_beta = L**beta / S_beta
    L_pow = L ** (1.0 - alpha)
    nu_scale_den = L_pow * p_beta

    st_v = st_x.copy()
    st_y = st_x.copy()
    A = 0.0
    B = 1.0
    steps = 0
    converged = False
    combine = surrogate.combine_state
    assign = surrogate.assign_state
    coord_grad = surrogate.coord_grad
    apply_step = surrogate.apply_step
    while steps < max_steps:
        span = min(cfg.trace_every * N, max_steps - steps)
        idxs = sampler_draw_many(profile, rng, span).tolist()
        for i in idxs:
            a, A, B, alpha_k, beta_k = accd_step_params(A, B, S_beta, sigma)
            den = 1.0 - alpha_k * beta_k
            combine(st_y, (1.0 - alpha_k) / den, st_x, alpha_k * (1.0 - beta_k) / den, st_v)
            h = -coord_grad(st_y, i)
            assign(st_x, st_y)
            apply_step(st_x, i, h / L[i])
            if beta_k != 0.0:
                combine(st_v, 1.0 - beta_k, st_v, beta_k, st_y)
            apply_step(st_v, i, (a / (B * nu_scale_den[i])) * h)
        steps += span
        if tracer is not None:
            _, _, gn = tracer.checkpoint(st_x, k_offset + steps)
            if gn <= cfg.grad_tol:
                converged = True
                break
    return steps, converged


def accd_run(surrogate, x0, cfg: SolverConfig) -> SolveResult:
    """Accelerated random coordinate descent (estimate-sequence variant).

    beta = alpha/2 enters both the parameter equation (through S_beta) and
    the nu-step weight p_beta; F_gamma along x_k is not monotone.
    """
    rng = Pcg32(cfg.seed)
    N = surrogate.partition.N
    st = surrogate.make_state(x0)
    trace = Trace()
    tracer = _Tracer(surrogate, trace, N)
    _, _, gn = tracer.checkpoint(st, 0)
    if gn <= cfg.grad_tol:
        return _result(surrogate, st, tracer, 0, True, trace)
    steps, converged = _accd_segment(
        surrogate, st, rng, cfg, cfg.max_epochs * N, tracer=tracer
    )
    return _result(surrogate, st, tracer, steps, converged, trace)


@dataclass(frozen=True)
class FixedRestart:
    """All restart periods equal to K."""

    K: int

    def period(self, r: int) -> int:
        return self.K


@dataclass(frozen=True)
class DoublingRestart:
    """2-adic schedule K_r = 2^{v(r+1)} K0 covering unknown growth constants."""

    K0: int

    def period(self, r: int) -> int:
        return doubling_schedule(self.K0, r + 1)[r]


def doubling_schedule(K0: int, count: int) -> list[int]:
    """K_r = 2^{v(r+1)} * K0 with v the 2-adic valuation of r+1.

    Satisfies both the K_{2^j - 1} = 2^j K0 condition and the multiplicity
    condition |{r < 2^J - 1 : K_r = 2^j K0}| = 2^{J-1-j}.
    """
    if K0 < 1:
        raise ValueError("K0 must be >= 1")
    out = []
    for r in range(count):
        m = r + 1
        v = 0
        while m % 2 == 0:
            m //= 2
            v += 1
        out.append(K0 << v)
    return out


def restart_period(N, q_bar, kappa_bar, alpha_restart, delta0=None) -> int:
    """Fixed restart period K(alpha) = ceil(sqrt(4 N^2 delta0^((2-q)/q) / (kappa^(2/q) alpha)))."""
    if kappa_bar <= 0:
        raise ValueError("kappa_bar must be positive")
    if not 1.0 <= q_bar <= 2.0:
        raise ValueError("q_bar must lie in [1, 2]")
    if not 0.0 < alpha_restart <= 1.0:
        raise ValueError("alpha_restart must lie in (0, 1]")
    expo = (2.0 - q_bar) / q_bar
    if expo == 0.0:
        dfac = 1.0
    else:
        if delta0 is None:
            raise ValueError("delta0 = F(x0) - F* is required when q_bar < 2")
        if delta0 < 0:
            raise ValueError("delta0 must be nonnegative")
        dfac = delta0**expo
    val = math.sqrt(4.0 * N * N * dfac / (kappa_bar ** (2.0 / q_bar) * alpha_restart))
    return int(math.ceil(val))


def restart_run(surrogate, x0, cfg: SolverConfig, schedule) -> SolveResult:
    """Restarted accelerated runs with a better-of-two keep rule per round.

    Each round runs the accelerated method for schedule.period(r) coordinate
    iterations from the current incumbent and keeps the candidate only if it
    does not increase F_gamma, so F_gamma along incumbents is monotone by
    construction.  Trace rows are written at round boundaries; `rounds`
    lists (round, k, F_gamma of the incumbent).
    """
    rng = Pcg32(cfg.seed)
    N = surrogate.partition.N
    st = surrogate.make_state(x0)
    trace = Trace()
    tracer = _Tracer(surrogate, trace, N)
    fg, _, gn = tracer.checkpoint(st, 0)
    rounds = [(0, 0, fg)]
    budget = cfg.max_epochs * N
    converged = gn <= cfg.grad_tol
    k = 0
    r = 0
    while not converged and k < budget:
        K = min(int(schedule.period(r)), budget - k)
        cand = st.copy()
        _accd_segment(surrogate, cand, rng, cfg, K)
        k += K
        if surrogate.value_state(cand) <= surrogate.value_state(st):
            surrogate.assign_state(st, cand)
        fg, _, gn = tracer.checkpoint(st, k)
        r += 1
        rounds.append((r, k, fg))
        converged = gn <= cfg.grad_tol
    return _result(surrogate, st, tracer, k, converged, trace, rounds=rounds)
