"""Problem records shared by the smoothing surrogates and solvers.

Two forms are supported: the composite quadratic
``F(x) = (1/2) x^T A x + b^T x + psi(x)`` and the max-structured saddle form
``F(x) = f(x) + max_{u in Q} {<Ax, u> - phi(u)}`` over a compact dual domain.
"""

from __future__ import annotations

import json

import numpy as np
import scipy.sparse as sp

from .core import BlockPartition
from . import prox as proxops


def _sym_spectral_norm(A) -> float:
    """Largest eigenvalue magnitude of a symmetric matrix (psd: largest eig)."""
    if sp.issparse(A):
        if A.shape[0] <= 1500:
            return float(np.abs(np.linalg.eigvalsh(A.toarray())).max())
        v = np.full(A.shape[0], 1.0 / np.sqrt(A.shape[0]))
        lam = 0.0
        for _ in range(500):
            w = A @ v
            nw = np.linalg.norm(w)
            if nw == 0.0:
                return 0.0
            v_new = w / nw
            lam_new = float(v_new @ (A @ v_new))
            if abs(lam_new - lam) <= 1e-12 * max(1.0, abs(lam_new)):
                lam = lam_new
                break
            lam, v = lam_new, v_new
        return abs(lam) * (1 + 1e-8)
    return float(np.abs(np.linalg.eigvalsh(np.asarray(A, dtype=float))).max())


class MatOps:
    """Uniform column/row access over a dense or CSC-sparse matrix.

    Precomputes per-column and per-row index/data arrays for sparse input so
    coordinate updates cost O(nnz of the block), as the solvers assume.
    """

    def __init__(self, A):
        self.sparse = sp.issparse(A)
        if self.sparse:
            self.csc = A.tocsc()
            csr = self.csc.tocsr()
            self.shape = self.csc.shape
            self._cols = []
            for j in range(self.shape[1]):
                lo, hi = self.csc.indptr[j], self.csc.indptr[j + 1]
                self._cols.append((self.csc.indices[lo:hi], self.csc.data[lo:hi]))
            self._rows = []
            for i in range(self.shape[0]):
                lo, hi = csr.indptr[i], csr.indptr[i + 1]
                self._rows.append((csr.indices[lo:hi], csr.data[lo:hi]))
        else:
            self.dense = np.asarray(A, dtype=float)
            self.shape = self.dense.shape

    def matvec(self, x):
        return (self.csc @ x) if self.sparse else (self.dense @ x)

    def rmatvec(self, y):
        return (self.csc.T @ y) if self.sparse else (self.dense.T @ y)

    def add_col_into(self, out, sl, h):
        """out += A[:, sl] @ h in place (h scalar allowed for width-1 slices)."""
        if not self.sparse:
            if sl.stop - sl.start == 1:
                out += self.dense[:, sl.start] * (h[0] if np.ndim(h) else h)
            else:
                out += self.dense[:, sl] @ h
            return
        if sl.stop - sl.start == 1:
            idx, dat = self._cols[sl.start]
            out[idx] += dat * (h[0] if np.ndim(h) else h)
        else:
            for k, j in enumerate(range(sl.start, sl.stop)):
                idx, dat = self._cols[j]
                out[idx] += dat * (h[k] if np.ndim(h) else h)

    def row_dot(self, sl, v):
        """A[sl, :] @ v as an (sl width,) array."""
        if not self.sparse:
            return self.dense[sl, :] @ v
        out = np.empty(sl.stop - sl.start)
        for k, i in enumerate(range(sl.start, sl.stop)):
            idx, dat = self._rows[i]
            out[k] = float(dat @ v[idx])
        return out

    def col_dot(self, sl, v):
        """A[:, sl]^T @ v as an (sl width,) array."""
        if not self.sparse:
            return self.dense[:, sl].T @ v
        out = np.empty(sl.stop - sl.start)
        for k, j in enumerate(range(sl.start, sl.stop)):
            idx, dat = self._cols[j]
            out[k] = float(dat @ v[idx])
        return out

    def diagonal(self):
        return self.csc.diagonal() if self.sparse else np.diag(self.dense).copy()

    def block(self, sl_r, sl_c):
        if self.sparse:
            return self.csc[sl_r, sl_c].toarray()
        return self.dense[sl_r, sl_c]

    def toarray(self):
        return self.csc.toarray() if self.sparse else self.dense

    def col_sq_norms(self):
        if self.sparse:
            return np.asarray(self.csc.multiply(self.csc).sum(axis=0)).ravel()
        return (self.dense**2).sum(axis=0)


class QuadraticComposite:
    """F(x) = (1/2) x^T A x + b^T x + psi(x) with A symmetric psd.

    `lipschitz_L` is an upper bound on ||A||; computed exactly when omitted.
    """

    def __init__(self, A, b, psi, lipschitz_L=None, partition=None, offset=0.0):
        self.b = np.asarray(b, dtype=float)
        n = self.b.size
        if A.shape != (n, n):
            raise ValueError(f"A must be {n}x{n}, got {A.shape}")
        self._check_symmetric(A)
        self.A = MatOps(A)
        self.psi = psi if psi is not None else proxops.ZeroProx()
        if lipschitz_L is None:
            lipschitz_L = _sym_spectral_norm(A) * (1 + 1e-12)
        if lipschitz_L < 0:
            raise ValueError("lipschitz_L must be nonnegative")
        self.lipschitz_L = float(lipschitz_L)
        self.n = n
        self.offset = float(offset)
        self.partition = partition if partition is not None else BlockPartition.scalar(n)
        if self.partition.n != n:
            raise ValueError("partition dimension mismatch")

    @staticmethod
    def _check_symmetric(A):
        if sp.issparse(A):
            d = abs(A - A.T)
            gap = 0.0 if d.nnz == 0 else float(d.max())
            scale = float(abs(A).max()) if A.nnz else 0.0
        else:
            A = np.asarray(A, dtype=float)
            gap = float(np.abs(A - A.T).max()) if A.size else 0.0
            scale = float(np.abs(A).max()) if A.size else 0.0
        if gap > 1e-12 * max(1.0, scale):
            raise ValueError("A must be symmetric (1e-12 relative)")

    @classmethod
    def from_least_squares(cls, B, c, psi, partition=None):
        """(1/2)||Bx - c||^2 + psi(x), dropping the constant (1/2)||c||^2."""
        B = np.asarray(B, dtype=float) if not sp.issparse(B) else B
        c = np.asarray(c, dtype=float)
        if sp.issparse(B):
            A = (B.T @ B).tocsc()
            b = -B.T @ c
        else:
            A = B.T @ B
            b = -B.T @ c
        return cls(A, b, psi, partition=partition, offset=0.5 * float(c @ c))

    def f_value(self, x):
        return 0.5 * float(x @ self.A.matvec(x)) + float(self.b @ x) + self.offset

    def f_grad(self, x):
        return self.A.matvec(x) + self.b

    def objective(self, x):
        return self.f_value(x) + self.psi.value(x)

    def is_identity(self, tol=0.0):
        A = self.A.toarray()
        return np.allclose(A, np.eye(self.n), atol=tol, rtol=0)

    # -- JSON ------------------------------------------------------------

    def to_json(self) -> dict:
        if self.A.sparse:
            csc = self.A.csc
            A_doc = {
                "format": "csc",
                "shape": list(csc.shape),
                "data": csc.data.tolist(),
                "indices": csc.indices.tolist(),
                "indptr": csc.indptr.tolist(),
            }
        else:
            A_doc = {"format": "dense", "data": self.A.dense.tolist()}
        return {
            "A": A_doc,
            "b": self.b.tolist(),
            "psi": self.psi.to_json(),
            "blocks": list(self.partition.sizes),
            "lipschitz_L": self.lipschitz_L,
            "offset": self.offset,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "QuadraticComposite":
        A_doc = doc["A"]
        if A_doc["format"] == "dense":
            A = np.asarray(A_doc["data"], dtype=float)
        elif A_doc["format"] == "csc":
            A = sp.csc_matrix(
                (A_doc["data"], A_doc["indices"], A_doc["indptr"]),
                shape=tuple(A_doc["shape"]),
            )
        else:
            raise ValueError(f"unknown matrix format {A_doc['format']!r}")
        b = np.asarray(doc["b"], dtype=float)
        psi = proxops.oracle_from_json(doc.get("psi"), n=b.size)
        partition = BlockPartition(doc["blocks"]) if doc.get("blocks") else None
        return cls(
            A,
            b,
            psi,
            lipschitz_L=doc.get("lipschitz_L"),
            partition=partition,
            offset=doc.get("offset", 0.0),
        )

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))


class SaddleProblem:
    """F(x) = f(x) + max_{u in Q} {<Ax, u> - phi(u)} over a compact Q.

    Three instances, each with a closed-form smoothed maximizer u_gamma
    (strong convexity parameter of the prox-function d fixed at sigma = 1):

    - ``linf``: Q the simplex in R^{2m}, d entropic; smooths ||Ax - b||_inf.
    - ``l1``:   Q = [-1,1]^m, d row-weighted quadratic; smooths ||Ax - b||_1.
    - ``ball``: Q the unit Euclidean ball, d = ||u||^2 / 2; smooths scale*||x||.
    """

    def __init__(self, kind, n, f_A=None, f_b=None, partition=None, **data):
        if kind not in ("linf", "l1", "ball"):
            raise ValueError("kind must be one of linf/l1/ball")
        self.kind = kind
        self.n = int(n)
        self.partition = partition if partition is not None else BlockPartition.scalar(n)
        self.f_A = MatOps(f_A) if f_A is not None and not isinstance(f_A, MatOps) else f_A
        self.f_b = np.asarray(f_b, dtype=float) if f_b is not None else None
        self.f_offset = float(data.pop("f_offset", 0.0))
        self.__dict__.update(data)

    # constructors ---------------------------------------------------------

    @classmethod
    def linf_residual(cls, A_tilde, b_tilde, f_A=None, f_b=None, partition=None, f_offset=0.0):
        """F = f + ||A_tilde x - b_tilde||_inf via the simplex/entropy pair."""
        dense = not sp.issparse(A_tilde)
        if dense:
            A_tilde = np.asarray(A_tilde, dtype=float)
            stacked = np.vstack([A_tilde, -A_tilde])
        else:
            stacked = sp.vstack([A_tilde, -A_tilde]).tocsc()
        b_tilde = np.asarray(b_tilde, dtype=float)
        m2 = stacked.shape[0]
        return cls(
            "linf",
            stacked.shape[1],
            f_A=f_A,
            f_b=f_b,
            partition=partition,
            f_offset=f_offset,
            A=MatOps(stacked),
            phi=np.concatenate([b_tilde, -b_tilde]),
            D_bar=float(np.log(m2)),
        )

    @classmethod
    def l1_residual(cls, A, b, f_A=None, f_b=None, partition=None, f_offset=0.0):
        """F = f + ||A x - b||_1 via the box dual with row-weighted d."""
        ops = MatOps(A)
        if ops.sparse:
            w = np.sqrt(np.asarray(ops.csc.multiply(ops.csc).sum(axis=1)).ravel())
        else:
            w = np.sqrt((ops.dense**2).sum(axis=1))
        if not np.all(w > 0):
            raise ValueError("l1 smoothing needs nonzero rows of A")
        return cls(
            "l1",
            ops.shape[1],
            f_A=f_A,
            f_b=f_b,
            partition=partition,
            f_offset=f_offset,
            A=ops,
            phi=np.asarray(b, dtype=float),
            w=w,
            D_bar=0.5 * float(w.sum()),
        )

    @classmethod
    def smoothed_norm(cls, scale, n, f_A=None, f_b=None, partition=None, f_offset=0.0):
        """F = f + scale * ||x|| via the unit-ball dual with d = ||u||^2/2."""
        if scale <= 0:
            raise ValueError("scale must be positive")
        return cls(
            "ball",
            n,
            f_A=f_A,
            f_b=f_b,
            partition=partition,
            f_offset=f_offset,
            scale=float(scale),
            D_bar=0.5,
        )

    @property
    def dual_domain(self) -> str:
        return {"linf": "simplex", "l1": "box", "ball": "ball"}[self.kind]

    # smooth part ----------------------------------------------------------

    def f_value(self, x, Fx=None):
        if self.f_A is None:
            return self.f_offset if self.f_b is None else self.f_offset + float(self.f_b @ x)
        if Fx is None:
            Fx = self.f_A.matvec(x)
        v = 0.5 * float(x @ Fx) + self.f_offset
        if self.f_b is not None:
            v += float(self.f_b @ x)
        return v

    def coord_lipschitz_f(self) -> np.ndarray:
        part = self.partition
        if self.f_A is None:
            return np.zeros(part.N)
        if part.is_scalar:
            return np.abs(self.f_A.diagonal())
        out = np.empty(part.N)
        for i in range(part.N):
            sl = part.slice(i)
            out[i] = float(np.abs(np.linalg.eigvalsh(self.f_A.block(sl, sl))).max())
        return out

    # smoothed max term ------------------------------------------------------

    def u_gamma(self, gamma, Ax=None, x=None):
        """The unique maximizer of the gamma-perturbed dual problem."""
        if self.kind == "ball":
            s = self.scale * float(np.linalg.norm(x))
            if s <= gamma:
                return (self.scale / gamma) * x
            return (self.scale / s) * x
        c = Ax - self.phi
        if self.kind == "linf":
            z = c / gamma
            z -= z.max()
            e = np.exp(z)
            return e / e.sum()
        return np.clip(c / (gamma * self.w), -1.0, 1.0)

    def smoothed_term(self, gamma, Ax=None, x=None) -> float:
        if self.kind == "ball":
            s = self.scale * float(np.linalg.norm(x))
            return s * s / (2.0 * gamma) if s <= gamma else s - gamma / 2.0
        c = Ax - self.phi
        if self.kind == "linf":
            m2 = c.size
            zmax = c.max() / gamma
            return gamma * (zmax + np.log(np.exp(c / gamma - zmax).sum()) - np.log(m2))
        t = np.abs(c) / self.w
        return float(
            np.where(t <= gamma, self.w * t * t / (2.0 * gamma), self.w * (t - gamma / 2.0)).sum()
        )

    def exact_term(self, Ax=None, x=None) -> float:
        if self.kind == "ball":
            return self.scale * float(np.linalg.norm(x))
        c = Ax - self.phi
        if self.kind == "linf":
            return float(c.max())
        return float(np.abs(c).sum())

    def original_value(self, x) -> float:
        Ax = self.A.matvec(x) if self.kind != "ball" else None
        return self.f_value(x) + self.exact_term(Ax=Ax, x=x)

    # coordinate Lipschitz constants of the smoothed term ---------------------

    def dual_col_norms(self) -> np.ndarray:
        """Per block i, the dual norm of the column block A U_i."""
        part = self.partition
        out = np.empty(part.N)
        if self.kind == "ball":
            out[:] = self.scale
            return out
        dense = self.A.toarray()
        if self.kind == "linf":
            # dual norm is l_inf: operator norm from l2 into l_inf
            if part.is_scalar:
                return np.abs(dense).max(axis=0)
            for i in range(part.N):
                M = dense[:, part.slice(i)]
                out[i] = np.sqrt((M * M).sum(axis=1).max())
            return out
        scaled = dense / self.w[:, None]
        if part.is_scalar:
            return np.sqrt((dense * scaled).sum(axis=0))
        for i in range(part.N):
            M = dense[:, part.slice(i)] / np.sqrt(self.w)[:, None]
            out[i] = np.linalg.svd(M, compute_uv=False)[0]
        return out

    def coord_lipschitz(self, gamma) -> np.ndarray:
        return self.coord_lipschitz_f() + self.dual_col_norms() ** 2 / gamma
