"""Smooth surrogates of nonsmooth convex objectives behind one contract.

Each surrogate F_gamma provides: value, per-block gradients, per-block
Lipschitz constants of the gradient, a pair of maps B and C with
``F(B(x)) - gamma * gap_D <= F_gamma(x) <= F(C(x))``, and a mutable run
state caching the matrix products a coordinate step must keep current.
All caches are linear in x, so states can also be combined linearly, which
is what the accelerated solver needs.

Notes on constants: the Douglas-Rachford per-block constant is
``||U_i^T (P + P^2) U_i|| / gamma`` with ``P = 2 (I + gamma A)^{-1} - I``;
the underlying curvature bound supports the tighter ``/(2 gamma)``, so the
shipped constant is conservative by a factor of at most two.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .core import BlockPartition, ConfigurationError, LipschitzProfile
from .problems import QuadraticComposite, SaddleProblem


def _power_iteration_norm(M, tol=1e-10, max_iter=20000):
    """Spectral norm of a small symmetric block by power iteration."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if n == 1:
        return abs(float(M[0, 0]))
    v = np.ones(n) + 1e-3 * np.arange(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = M @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        lam_new = abs(float(v @ (M @ v)))
        if abs(lam_new - lam) <= tol * max(1.0, lam_new):
            return lam_new
        lam = lam_new
    return lam


class SurrogateState:
    """x plus the surrogate's linear caches; scratch memo per version."""

    __slots__ = ("x", "aux", "version", "_memo", "_memo_version")

    def __init__(self, x, aux):
        self.x = x
        self.aux = aux
        self.version = 0
        self._memo = {}
        self._memo_version = 0

    def memo(self) -> dict:
        if self._memo_version != self.version:
            self._memo = {}
            self._memo_version = self.version
        return self._memo

    def copy(self) -> "SurrogateState":
        st = SurrogateState(self.x.copy(), {k: v.copy() for k, v in self.aux.items()})
        return st


class SmoothSurrogate:
    """Shared surface; subclasses fill in the envelope-specific parts."""

    gamma: float
    partition: BlockPartition
    coord_lipschitz: np.ndarray
    gap_D: float
    is_inexact = False

    @property
    def n(self) -> int:
        return self.partition.n

    def lipschitz_profile(self, alpha: float) -> LipschitzProfile:
        return LipschitzProfile(self.coord_lipschitz, alpha)

    # state management ------------------------------------------------------

    def make_state(self, x) -> SurrogateState:
        x = np.array(x, dtype=float, copy=True)
        if x.shape != (self.n,):
            raise ValueError(f"x has shape {x.shape}, expected ({self.n},)")
        return SurrogateState(x, self._init_aux(x))

    def assign_state(self, dst: SurrogateState, src: SurrogateState):
        dst.x[:] = src.x
        for k, v in src.aux.items():
            dst.aux[k][:] = v
        dst.version += 1

    def combine_state(self, dst, a, s1, b, s2):
        """dst <- a*s1 + b*s2 (componentwise on x and every cache)."""
        dst.x[:] = a * s1.x + b * s2.x
        for k in dst.aux:
            dst.aux[k][:] = a * s1.aux[k] + b * s2.aux[k]
        dst.version += 1

    def apply_step(self, st: SurrogateState, i: int, h):
        """x^(i) += h, updating caches incrementally."""
        sl = self.partition.slice(i)
        st.x[sl] += h
        self._step_aux(st, i, sl, h)
        st.version += 1

    # envelope-specific ------------------------------------------------------

    def _init_aux(self, x) -> dict:
        return {}

    def _step_aux(self, st, i, sl, h):
        pass

    def coord_grad(self, st, i) -> np.ndarray:
        raise NotImplementedError

    def full_grad(self, st) -> np.ndarray:
        raise NotImplementedError

    def value_state(self, st) -> float:
        raise NotImplementedError

    def map_B(self, st) -> np.ndarray:
        raise NotImplementedError

    def map_C(self, st) -> np.ndarray:
        raise NotImplementedError

    def original_value(self, v) -> float:
        """The unsmoothed objective F at an arbitrary point."""
        raise NotImplementedError

    # conveniences ------------------------------------------------------------

    def value(self, x) -> float:
        return self.value_state(self.make_state(x))

    def grad(self, x) -> np.ndarray:
        return self.full_grad(self.make_state(x))


class MoreauSurrogate(SmoothSurrogate):
    """Moreau envelope of F given through its prox oracle.

    value(x) = F(z) + ||z - x||^2/(2 gamma) with z = prox_{gamma F}(x);
    gradient (x - z)/gamma; every block constant is 1/gamma; B is the prox
    map, C the identity, gap 0.
    """

    def __init__(self, oracle, gamma, partition=None, n=None):
        if gamma <= 0:
            raise ConfigurationError("gamma must be positive")
        if partition is None:
            if n is None:
                raise ValueError("need a partition or a dimension")
            partition = BlockPartition.scalar(n)
        self.oracle = oracle
        self.gamma = float(gamma)
        self.partition = partition
        self.coord_lipschitz = np.full(partition.N, 1.0 / self.gamma)
        self.gap_D = 0.0
        self.is_inexact = bool(getattr(oracle, "is_inexact", False))
        self._warm = None

    def _prox_point(self, st):
        memo = st.memo()
        if "z" not in memo:
            if getattr(self.oracle, "supports_warm_start", False):
                z = self.oracle.prox(self.gamma, st.x, x0=self._warm)
            else:
                z = self.oracle.prox(self.gamma, st.x)
            memo["z"] = z
            self._warm = z
        return memo["z"]

    def coord_grad(self, st, i):
        sl = self.partition.slice(i)
        z = self._prox_point(st)
        return (st.x[sl] - z[sl]) / self.gamma

    def full_grad(self, st):
        return (st.x - self._prox_point(st)) / self.gamma

    def value_state(self, st):
        z = self._prox_point(st)
        d = z - st.x
        return self.oracle.value(z) + 0.5 * float(d @ d) / self.gamma

    def map_B(self, st):
        return self._prox_point(st).copy()

    def map_C(self, st):
        return st.x.copy()

    def original_value(self, v):
        return self.oracle.value(np.asarray(v, dtype=float))


class ForwardBackwardSurrogate(SmoothSurrogate):
    """Forward-Backward envelope of a quadratic composite, gamma*L in (0,1).

    value per the one-step upper model at z = prox_{gamma psi}(x - gamma
    grad f(x)); gradient gamma^{-1} (I - gamma A)(x - z); block constants
    ||I_{n_i} - gamma A_ii||/gamma; B(x) = z, C identity, gap 0.
    """

    def __init__(self, problem: QuadraticComposite, gamma):
        if gamma <= 0:
            raise ConfigurationError("gamma must be positive")
        if gamma * problem.lipschitz_L >= 1.0:
            raise ConfigurationError(
                f"gamma*L = {gamma * problem.lipschitz_L:.3g} >= 1; the envelope is "
                "only a convex surrogate for gamma*L in (0,1)"
            )
        self.problem = problem
        self.gamma = float(gamma)
        self.partition = problem.partition
        self.gap_D = 0.0
        part = self.partition
        if part.is_scalar:
            self.coord_lipschitz = np.abs(1.0 - gamma * problem.A.diagonal()) / gamma
        else:
            vals = np.empty(part.N)
            for i in range(part.N):
                sl = part.slice(i)
                blk = np.eye(sl.stop - sl.start) - gamma * problem.A.block(sl, sl)
                vals[i] = _power_iteration_norm(blk) * (1 + 1e-8) / gamma
            self.coord_lipschitz = vals

    def _init_aux(self, x):
        return {"Ax": self.problem.A.matvec(x)}

    def _step_aux(self, st, i, sl, h):
        self.problem.A.add_col_into(st.aux["Ax"], sl, h)

    def _forward(self, st):
        memo = st.memo()
        if "r" not in memo:
            g = st.aux["Ax"] + self.problem.b
            w = st.x - self.gamma * g
            z = self.problem.psi.prox(self.gamma, w)
            memo["w"], memo["z"], memo["r"] = w, z, st.x - z
        return memo

    def coord_grad(self, st, i):
        sl = self.partition.slice(i)
        r = self._forward(st)["r"]
        return r[sl] / self.gamma - self.problem.A.row_dot(sl, r)

    def full_grad(self, st):
        r = self._forward(st)["r"]
        return r / self.gamma - self.problem.A.matvec(r)

    def value_state(self, st):
        memo = self._forward(st)
        w, z = memo["w"], memo["z"]
        g = st.aux["Ax"] + self.problem.b
        f = 0.5 * float(st.x @ st.aux["Ax"]) + float(self.problem.b @ st.x) + self.problem.offset
        moreau_psi = self.problem.psi.value(z) + 0.5 * float(
            np.dot(z - w, z - w)
        ) / self.gamma
        return f - 0.5 * self.gamma * float(g @ g) + moreau_psi

    def map_B(self, st):
        return self._forward(st)["z"].copy()

    def map_C(self, st):
        return st.x.copy()

    def original_value(self, v):
        return self.problem.objective(np.asarray(v, dtype=float))


class DouglasRachfordSurrogate(SmoothSurrogate):
    """Douglas-Rachford envelope of a quadratic composite, gamma*L in (0,1).

    Built from the Moreau envelopes of both parts; H = (I + gamma A)^{-1}
    is factored once (a diagonal fast path is used when A is diagonal).
    B(x) = prox_{gamma psi}(2 prox_{gamma f}(x) - x), C = prox_{gamma f}.
    """

    def __init__(self, problem: QuadraticComposite, gamma):
        if gamma <= 0:
            raise ConfigurationError("gamma must be positive")
        if gamma * problem.lipschitz_L >= 1.0:
            raise ConfigurationError(
                f"gamma*L = {gamma * problem.lipschitz_L:.3g} >= 1; needs gamma*L in (0,1)"
            )
        self.problem = problem
        self.gamma = float(gamma)
        self.partition = problem.partition
        self.gap_D = 0.0
        A = problem.A
        diag = A.diagonal()
        if A.sparse:
            off = (abs(A.csc) - sp.diags(np.abs(diag))).max() if A.csc.nnz else 0.0
            is_diag = off <= 0.0
        else:
            is_diag = np.count_nonzero(A.dense - np.diag(diag)) == 0
        self._diagonal = bool(is_diag)
        if self._diagonal:
            self._h = 1.0 / (1.0 + gamma * diag)
            self._Hb = self._h * problem.b
            m_diag = 4.0 * self._h**2 - 2.0 * self._h
            self._H = None
        else:
            dense_A = A.toarray()
            cho = scipy.linalg.cho_factor(np.eye(problem.n) + gamma * dense_A)
            self._H = scipy.linalg.cho_solve(cho, np.eye(problem.n))
            self._H = 0.5 * (self._H + self._H.T)
            self._Hb = self._H @ problem.b
            m_diag = 4.0 * np.einsum("ij,ij->i", self._H, self._H) - 2.0 * np.diag(self._H)
        part = self.partition
        if part.is_scalar:
            self.coord_lipschitz = np.abs(m_diag) / gamma
        else:
            if self._diagonal:
                M = np.diag(m_diag)
            else:
                M = 4.0 * self._H @ self._H - 2.0 * self._H
            vals = np.empty(part.N)
            for i in range(part.N):
                sl = part.slice(i)
                vals[i] = _power_iteration_norm(M[sl, sl]) * (1 + 1e-8) / gamma
            self.coord_lipschitz = vals

    def _Hdot(self, v):
        return self._h * v if self._diagonal else self._H @ v

    def _init_aux(self, x):
        return {"Hx": self._Hdot(x)}

    def _step_aux(self, st, i, sl, h):
        if self._diagonal:
            st.aux["Hx"][sl] += self._h[sl] * h
        elif sl.stop - sl.start == 1:
            st.aux["Hx"] += self._H[:, sl.start] * (h[0] if np.ndim(h) else h)
        else:
            st.aux["Hx"] += self._H[:, sl] @ h

    def _parts(self, st):
        memo = st.memo()
        if "G" not in memo:
            u = st.aux["Hx"] - self.gamma * self._Hb  # prox_{gamma f}(x)
            s = 2.0 * u - st.x
            z = self.problem.psi.prox(self.gamma, s)
            memo["u"], memo["s"], memo["z"], memo["G"] = u, s, z, u - z
        return memo

    def coord_grad(self, st, i):
        sl = self.partition.slice(i)
        G = self._parts(st)["G"]
        if self._diagonal:
            hg = self._h[sl] * G[sl]
        else:
            hg = self._H[sl, :] @ G
        return (2.0 * hg - G[sl]) / self.gamma

    def full_grad(self, st):
        G = self._parts(st)["G"]
        return (2.0 * self._Hdot(G) - G) / self.gamma

    def value_state(self, st):
        memo = self._parts(st)
        u, s, z = memo["u"], memo["s"], memo["z"]
        f_u = (
            0.5 * float(u @ self.problem.A.matvec(u))
            + float(self.problem.b @ u)
            + self.problem.offset
        )
        f_env = f_u + 0.5 * float(np.dot(u - st.x, u - st.x)) / self.gamma
        grad_env = (st.x - u) / self.gamma
        psi_env = self.problem.psi.value(z) + 0.5 * float(np.dot(z - s, z - s)) / self.gamma
        return f_env - self.gamma * float(grad_env @ grad_env) + psi_env

    def map_B(self, st):
        return self._parts(st)["z"].copy()

    def map_C(self, st):
        return self._parts(st)["u"].copy()

    def original_value(self, v):
        return self.problem.objective(np.asarray(v, dtype=float))


class NesterovSurrogate(SmoothSurrogate):
    """Max-structure smoothing: F_gamma(x) = f(x) + max_u {<Ax,u> - phi(u) - gamma d(u)}.

    B and C are identities and gap_D = max_u d(u), so the surrogate sits
    within gamma*gap_D below F everywhere.  The dual maximizer u_gamma is
    closed-form for the three supported instances (see SaddleProblem).
    """

    def __init__(self, saddle: SaddleProblem, gamma):
        if gamma <= 0:
            raise ConfigurationError("gamma must be positive")
        self.saddle = saddle
        self.gamma = float(gamma)
        self.partition = saddle.partition
        self.gap_D = float(saddle.D_bar)
        self.coord_lipschitz = saddle.coord_lipschitz(self.gamma)

    def _init_aux(self, x):
        aux = {}
        if self.saddle.kind != "ball":
            aux["Ax"] = self.saddle.A.matvec(x)
        if self.saddle.f_A is not None:
            aux["Fx"] = self.saddle.f_A.matvec(x)
        return aux

    def _step_aux(self, st, i, sl, h):
        if self.saddle.kind != "ball":
            self.saddle.A.add_col_into(st.aux["Ax"], sl, h)
        if self.saddle.f_A is not None:
            self.saddle.f_A.add_col_into(st.aux["Fx"], sl, h)

    def _dual(self, st):
        memo = st.memo()
        if "u" not in memo:
            memo["u"] = self.saddle.u_gamma(
                self.gamma, Ax=st.aux.get("Ax"), x=st.x
            )
        return memo["u"]

    def _f_grad_block(self, st, sl):
        s = self.saddle
        if s.f_A is None:
            return s.f_b[sl].copy() if s.f_b is not None else 0.0
        g = st.aux["Fx"][sl]
        return g + s.f_b[sl] if s.f_b is not None else g.copy()

    def coord_grad(self, st, i):
        sl = self.partition.slice(i)
        u = self._dual(st)
        s = self.saddle
        if s.kind == "ball":
            term = s.scale * u[sl]
        else:
            term = s.A.col_dot(sl, u)
        return self._f_grad_block(st, sl) + term

    def full_grad(self, st):
        u = self._dual(st)
        s = self.saddle
        g = s.scale * u if s.kind == "ball" else s.A.rmatvec(u)
        if s.f_A is not None:
            g = g + st.aux["Fx"]
        if s.f_b is not None:
            g = g + s.f_b
        return g

    def value_state(self, st):
        s = self.saddle
        return s.f_value(st.x, Fx=st.aux.get("Fx")) + s.smoothed_term(
            self.gamma, Ax=st.aux.get("Ax"), x=st.x
        )

    def map_B(self, st):
        return st.x.copy()

    def map_C(self, st):
        return st.x.copy()

    def original_value(self, v):
        return self.saddle.original_value(np.asarray(v, dtype=float))


# ---------------------------------------------------------------------------
# contract checking
# ---------------------------------------------------------------------------


@dataclass
class SurrogateCheckReport:
    """Max violations of the surrogate contract's invariant families."""

    sandwich: float = 0.0
    gradient: float = 0.0
    lipschitz: float = 0.0
    cocoercivity: float = 0.0
    convexity: float = 0.0
    cache_drift: float = 0.0
    tolerances: dict = field(
        default_factory=lambda: {
            "sandwich": 1e-8,
            "gradient": 1e-5,
            "lipschitz": 1e-8,
            "cocoercivity": 1e-8,
            "convexity": 1e-10,
            "cache_drift": 1e-9,
        }
    )

    def failures(self):
        return [k for k, tol in self.tolerances.items() if getattr(self, k) > tol]

    @property
    def passed(self) -> bool:
        return not self.failures()

    def max_violation(self) -> float:
        return max(getattr(self, k) / tol for k, tol in self.tolerances.items())

    def summary(self) -> str:
        cols = ", ".join(f"{k}={getattr(self, k):.2e}" for k in self.tolerances)
        return f"{'pass' if self.passed else 'FAIL'} ({cols})"


def surrogate_check(
    surrogate,
    objective,
    rng,
    trials=100,
    x_scale=1.0,
    fd_step=1e-6,
    coord_lipschitz=None,
    cache_steps=1000,
) -> SurrogateCheckReport:
    """Empirically test the surrogate contract; reports, never raises.

    Families: the B/C sandwich, coordinate gradients against central finite
    differences, the published per-block Lipschitz constants, the matching
    cocoercivity inequality, convexity along random segments, and drift of
    the incrementally maintained caches after random coordinate steps.
    `coord_lipschitz` overrides the published constants (mutation testing).
    """
    n = surrogate.n
    part = surrogate.partition
    gamma = surrogate.gamma
    L = surrogate.coord_lipschitz if coord_lipschitz is None else np.asarray(coord_lipschitz)
    rep = SurrogateCheckReport()

    for _ in range(trials):
        x = x_scale * rng.normals(n)
        st = surrogate.make_state(x)
        fg = surrogate.value_state(st)
        scale = 1.0 + abs(fg)
        lower = objective(surrogate.map_B(st)) - gamma * surrogate.gap_D
        upper = objective(surrogate.map_C(st))
        rep.sandwich = max(rep.sandwich, (lower - fg) / scale, (fg - upper) / scale)

        i = rng.randint(part.N)
        sl = part.slice(i)
        g = np.atleast_1d(surrogate.coord_grad(st, i))
        fd = np.empty(sl.stop - sl.start)
        for k, j in enumerate(range(sl.start, sl.stop)):
            xp = x.copy()
            xp[j] += fd_step
            xm = x.copy()
            xm[j] -= fd_step
            fd[k] = (surrogate.value(xp) - surrogate.value(xm)) / (2 * fd_step)
        rep.gradient = max(
            rep.gradient, float(np.linalg.norm(fd - g)) / (1.0 + float(np.linalg.norm(g)))
        )

        h = rng.normals(sl.stop - sl.start)
        st2 = st.copy()
        surrogate.apply_step(st2, i, h)
        dg = np.atleast_1d(surrogate.coord_grad(st2, i)) - g
        ndg = float(np.linalg.norm(dg))
        nh = float(np.linalg.norm(h))
        rep.lipschitz = max(rep.lipschitz, (ndg - L[i] * nh) / (L[i] * nh))
        inner = float(dg @ h)
        rep.cocoercivity = max(
            rep.cocoercivity, (ndg * ndg / L[i] - inner) / (1.0 + abs(inner))
        )

        y = x_scale * rng.normals(n)
        t = rng.random()
        mid = surrogate.value(t * x + (1 - t) * y)
        chord = t * fg + (1 - t) * surrogate.value(y)
        rep.convexity = max(rep.convexity, (mid - chord) / (1.0 + abs(chord)))

    if cache_steps:
        st = surrogate.make_state(x_scale * rng.normals(n))
        for _ in range(cache_steps):
            i = rng.randint(part.N)
            surrogate.apply_step(st, i, rng.normals(part.sizes[i]))
        fresh = surrogate._init_aux(st.x)
        for k, v in fresh.items():
            drift = float(np.linalg.norm(st.aux[k] - v)) / (1.0 + float(np.linalg.norm(v)))
            rep.cache_drift = max(rep.cache_drift, drift)
    return rep
