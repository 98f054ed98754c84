"""Shared test fixtures: an exact-constant quadratic surrogate and problem builders."""

import numpy as np

from smoothcd import prox as px
from smoothcd.core import BlockPartition
from smoothcd.problems import QuadraticComposite
from smoothcd.smoothing import SmoothSurrogate


class QuadSurrogate(SmoothSurrogate):
    """F_gamma(x) = (1/2) sum_i q_i x_i^2 with tight per-coordinate constants.

    A minimal implementation of the surrogate contract, used where a test
    needs the published L_i to equal the true curvature exactly.
    """

    def __init__(self, q, gamma=1.0):
        self.q = np.asarray(q, dtype=float)
        self.gamma = float(gamma)
        self.partition = BlockPartition.scalar(self.q.size)
        self.coord_lipschitz = self.q.copy()
        self.gap_D = 0.0

    def coord_grad(self, st, i):
        sl = self.partition.slice(i)
        return self.q[sl] * st.x[sl]

    def full_grad(self, st):
        return self.q * st.x

    def value_state(self, st):
        return 0.5 * float(self.q @ (st.x * st.x))

    def map_B(self, st):
        return st.x.copy()

    def map_C(self, st):
        return st.x.copy()

    def original_value(self, v):
        v = np.asarray(v, dtype=float)
        return 0.5 * float(self.q @ (v * v))


def quad_l1_problem(n, seed_rng, lam=0.5, identity=False, m=None, density=0.4):
    """(1/2)||Bx - c||^2 + lam ||x||_1 with soft-threshold solution when B = I."""
    if identity:
        B = np.eye(n)
    else:
        m = m or max(2, n // 2)
        mask = seed_rng.uniforms(m * n).reshape(m, n) < density
        B = seed_rng.normals(m * n).reshape(m, n) * mask
    c = seed_rng.normals(B.shape[0])
    prob = QuadraticComposite.from_least_squares(B, c, px.GroupNormProx.l1(lam, n))
    x_star = f_star = None
    if identity:
        x_star = np.sign(c) * np.maximum(np.abs(c) - lam, 0.0)
        f_star = prob.objective(x_star)
    return prob, c, x_star, f_star
