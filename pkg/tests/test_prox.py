import itertools

import numpy as np
import pytest

from smoothcd import prox as px
from smoothcd.core import InfeasibleError
from smoothcd.rng import Pcg32


def _random_vec(rng, n, scale=2.0):
    return scale * rng.normals(n)


class TestEuclideanNorm:
    def test_threshold_formula(self):
        np.testing.assert_allclose(
            px.prox_euclidean_norm(1.0, [3.0, 4.0]), [2.4, 3.2], rtol=1e-15
        )

    def test_inside_threshold(self):
        np.testing.assert_array_equal(px.prox_euclidean_norm(1.0, [0.3, 0.4]), [0.0, 0.0])

    def test_identity_limit(self):
        x = np.array([1.0, -2.0])
        np.testing.assert_allclose(px.prox_euclidean_norm(1e-14, x), x, rtol=1e-12)


class TestGroupNorm:
    def test_single_group_reduction(self):
        x = np.array([3.0, 4.0, -1.0])
        np.testing.assert_allclose(
            px.prox_group_norm(0.7, x, [[0, 1, 2]]), px.prox_euclidean_norm(0.7, x)
        )

    def test_per_group(self):
        x = np.array([3.0, 4.0, 0.1, 0.0])
        out = px.prox_group_norm(1.0, x, [[0, 1], [2, 3]])
        np.testing.assert_allclose(out, [2.4, 3.2, 0.0, 0.0], rtol=1e-15)

    def test_zero_threshold(self):
        x = np.array([1.0, 2.0, 3.0])
        np.testing.assert_array_equal(px.prox_group_norm(0.0, x, [[0], [1], [2]]), x)

    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            px.prox_group_norm(1.0, np.zeros(3), [[0, 1], [1, 2]])
        with pytest.raises(ValueError):
            px.prox_group_norm(1.0, np.zeros(3), [[0, 1]])


class TestBall2:
    def test_rescale_formula(self):
        np.testing.assert_allclose(px.project_l2_ball(1.0, [3.0, 4.0]), [0.6, 0.8], rtol=1e-15)

    def test_interior(self):
        x = np.array([0.1, 0.2])
        np.testing.assert_array_equal(px.project_l2_ball(1.0, x), x)

    def test_zero(self):
        np.testing.assert_array_equal(px.project_l2_ball(2.0, np.zeros(3)), np.zeros(3))

    def test_bad_radius(self):
        with pytest.raises(ValueError):
            px.project_l2_ball(0.0, [1.0])


class TestBall1:
    def test_kkt_threshold(self):
        out = px.project_l1_ball(0.5, 0.0, [0.5, 0.5])
        np.testing.assert_allclose(out, [0.25, 0.25], rtol=1e-12)

    def test_single_axis(self):
        out = px.project_l1_ball(0.5, 0.0, [2.0, 0.0])
        np.testing.assert_allclose(out, [0.5, 0.0], atol=1e-12)

    def test_feasible_untouched(self):
        x = np.array([0.1, -0.2, 0.05])
        np.testing.assert_array_equal(px.project_l1_ball(1.0, 0.0, x), x)

    def test_against_slsqp(self):
        rng = Pcg32(21)
        for _ in range(25):
            n = 1 + rng.randint(3)
            x = _random_vec(rng, n)
            c = 0.3 * rng.normals(n)
            r = 0.2 + rng.random()
            got = px.project_l1_ball(r, c, x)
            cons = [
                {
                    "type": "ineq",
                    "fun": (lambda s: lambda u: r - float(s @ (u - c)))(np.array(s)),
                }
                for s in itertools.product([-1.0, 1.0], repeat=n)
            ]
            ref = px.brute_force_prox(
                lambda u: 0.0 if np.abs(u - c).sum() <= r + 1e-12 else np.inf,
                1.0,
                x,
                constraints=cons,
            )
            np.testing.assert_allclose(got, ref, atol=2e-6)
            assert np.abs(got - c).sum() <= r * (1 + 1e-10)


class TestSimplex:
    def test_vertex_fixed(self):
        np.testing.assert_array_equal(px.project_simplex(np.array([1.0, 0.0])), [1.0, 0.0])

    def test_symmetric(self):
        np.testing.assert_allclose(px.project_simplex(np.array([0.6, 0.6])), [0.5, 0.5], rtol=1e-14)

    def test_far_point(self):
        np.testing.assert_allclose(px.project_simplex(np.array([2.0, 0.0])), [1.0, 0.0], atol=1e-14)

    def test_random_against_sort_reference(self):
        rng = Pcg32(5)
        for _ in range(50):
            n = 2 + rng.randint(6)
            x = _random_vec(rng, n)
            got = px.project_simplex(x)
            # sort-based reference threshold
            s = np.sort(x)[::-1]
            css = np.cumsum(s) - 1.0
            k = np.nonzero(s - css / np.arange(1, n + 1) > 0)[0][-1]
            theta = css[k] / (k + 1.0)
            np.testing.assert_allclose(got, np.maximum(x - theta, 0.0), atol=1e-12)
            assert got.sum() == pytest.approx(1.0, abs=1e-10)


class TestHyperplaneBox:
    def test_already_feasible(self):
        out = px.project_hyperplane_box([1.0, 1.0], 1.0, 0.0, 1.0, [1.0, 0.0])
        np.testing.assert_allclose(out, [1.0, 0.0], atol=1e-11)

    def test_center(self):
        out = px.project_hyperplane_box([1.0, 1.0], 1.0, 0.0, 1.0, [1.0, 1.0])
        np.testing.assert_allclose(out, [0.5, 0.5], atol=1e-11)

    def test_corner(self):
        out = px.project_hyperplane_box([1.0, 1.0], 1.0, 0.0, 1.0, [2.0, -1.0])
        np.testing.assert_allclose(out, [1.0, 0.0], atol=1e-11)

    def test_infeasible(self):
        with pytest.raises(InfeasibleError):
            px.project_hyperplane_box([1.0, 1.0], 5.0, 0.0, 1.0, [0.0, 0.0])

    def test_against_slsqp(self):
        rng = Pcg32(8)
        a = np.array([1.0, -2.0, 0.5])
        for _ in range(20):
            x = _random_vec(rng, 3)
            out = px.project_hyperplane_box(a, 0.3, -1.0, 1.0, x)
            cons = [{"type": "eq", "fun": lambda u: float(a @ u) - 0.3}]
            ref = px.brute_force_prox(
                lambda u: 0.0,
                1.0,
                x,
                constraints=cons,
                bounds=[(-1.0, 1.0)] * 3,
            )
            np.testing.assert_allclose(out, ref, atol=5e-6)


class TestAffine:
    def test_line(self):
        out = px.project_affine(np.array([[1.0, 1.0]]), np.array([1.0]), [1.0, 1.0])
        np.testing.assert_allclose(out, [0.5, 0.5], rtol=1e-14)

    def test_fixed_point(self):
        A = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, -1.0]])
        x = np.array([1.0, 1.0, 1.0])
        b = A @ x
        np.testing.assert_allclose(px.project_affine(A, b, x), x, atol=1e-12)

    def test_residual_and_orthogonality(self):
        rng = Pcg32(31)
        for _ in range(10):
            A = rng.normals(10).reshape(2, 5)
            b = rng.normals(2)
            x = rng.normals(5)
            out = px.project_affine(A, b, x)
            assert np.linalg.norm(A @ out - b) <= 1e-10
            # displacement lies in range(A^T): orthogonal to null(A)
            _, _, vt = np.linalg.svd(A)
            null_basis = vt[2:]
            assert np.linalg.norm(null_basis @ (out - x)) <= 1e-10

    def test_rank_deficient(self):
        A = np.array([[1.0, 0.0], [1.0, 0.0]])
        with pytest.raises(np.linalg.LinAlgError):
            px.project_affine(A, np.array([1.0, 1.0]), np.array([0.0, 0.0]))


class TestTV1D:
    def test_two_point(self):
        np.testing.assert_allclose(px.prox_tv_1d(0.5, [1.0, -1.0]), [0.5, -0.5], rtol=1e-14)

    def test_zero_weight(self):
        y = np.array([3.0, 1.0, 2.0])
        np.testing.assert_array_equal(px.prox_tv_1d(0.0, y), y)

    def test_constant_input(self):
        y = np.full(5, 2.5)
        np.testing.assert_array_equal(px.prox_tv_1d(1.0, y), y)

    @pytest.mark.parametrize("lam", [0.1, 0.5, 2.0])
    def test_exhaustive_grid_matches_oracle(self, lam):
        for y in itertools.product([-1.0, 0.0, 1.0], repeat=4):
            y = np.array(y)
            got = px.prox_tv_1d(lam, y)
            ref = px.prox_tv_1d_bruteforce(lam, y)
            np.testing.assert_allclose(got, ref, atol=1e-10)

    def test_random_against_oracle(self):
        rng = Pcg32(77)
        for _ in range(120):
            n = 2 + rng.randint(5)
            y = _random_vec(rng, n)
            lam = 0.05 + 2.0 * rng.random()
            got = px.prox_tv_1d(lam, y)
            ref = px.prox_tv_1d_bruteforce(lam, y)
            np.testing.assert_allclose(got, ref, atol=1e-9)

    def test_jump_subgradient_certificate(self):
        # dual variables recovered from the output must stay in [-lam, lam],
        # and be at the exact bound across every jump of u
        rng = Pcg32(15)
        lam = 0.7
        for _ in range(20):
            y = _random_vec(rng, 40)
            u = px.prox_tv_1d(lam, y)
            t = np.concatenate(([0.0], np.cumsum(u - y)))  # t_i, i = 0..n
            assert np.all(np.abs(t[1:-1]) <= lam + 1e-9)
            assert abs(t[0]) <= 1e-12 and abs(t[-1]) <= 1e-9
            jumps = np.diff(u)
            for i, j in enumerate(jumps):
                if abs(j) > 1e-9:
                    assert t[i + 1] == pytest.approx(lam * np.sign(j), abs=1e-9)


class TestPowerNorm:
    def test_r0_closed_form(self):
        x = np.array([2.0, 0.0])
        np.testing.assert_allclose(px.prox_power_norm(0.5, 0.0, x), x / 2.0, rtol=1e-13)

    def test_zero_input(self):
        np.testing.assert_array_equal(px.prox_power_norm(1.0, 3.0, np.zeros(2)), np.zeros(2))

    def test_r2_scalar_root(self):
        out = px.prox_power_norm(0.25, 2.0, np.array([1.0]))
        t = out[0]
        assert abs(t**3 + t - 1.0) <= 1e-12
        assert t == pytest.approx(0.6823278038280193, abs=1e-9)


def _oracle_zoo(rng, n):
    lam = 0.2 + rng.random()
    r = 0.3 + rng.random()
    a = rng.normals(n)
    zoo = [
        (px.L2NormProx(lam), None, None),
        (px.GroupNormProx.l1(lam, n), None, None),
        (px.TV1DProx(lam), None, None),
        (px.PowerNormProx(2.0, lam), None, None),
        (px.Ball2Prox(r), [{"type": "ineq", "fun": lambda u, r=r: r * r - float(u @ u)}], None),
        (
            px.Ball1Prox(r),
            [
                {"type": "ineq", "fun": (lambda s: lambda u: r - float(np.array(s) @ u))(s)}
                for s in itertools.product([-1.0, 1.0], repeat=n)
            ],
            None,
        ),
        (px.SimplexProx(), [{"type": "eq", "fun": lambda u: float(u.sum()) - 1.0}], [(0.0, None)] * n),
        (
            px.HyperplaneBoxProx(a, 0.1, -1.0, 1.0),
            [{"type": "eq", "fun": lambda u, a=a: float(a @ u) - 0.1}],
            [(-1.0, 1.0)] * n,
        ),
    ]
    return zoo


class TestOracleProperties:
    def test_firm_nonexpansiveness(self):
        rng = Pcg32(42)
        n = 4
        oracles = [o for o, _, _ in _oracle_zoo(rng, n)] + [
            px.ZeroProx(),
            px.AffineSetProx(rng.normals(2 * n).reshape(2, n), rng.normals(2)),
        ]
        for oracle in oracles:
            gamma = 0.5 + rng.random()
            for _ in range(100):
                x = _random_vec(rng, n)
                y = _random_vec(rng, n)
                pxv = oracle.prox(gamma, x)
                pyv = oracle.prox(gamma, y)
                d = pxv - pyv
                lhs = float(d @ d)
                rhs = float(d @ (x - y))
                assert lhs <= rhs + 1e-10

    def test_agreement_with_brute_force(self):
        rng = Pcg32(99)
        per_oracle = 50
        for n in (2, 3):
            hb = None
            for oracle, cons, bounds in _oracle_zoo(rng, n):
                for _ in range(per_oracle // 10):
                    gamma = 0.4 + rng.random()
                    x = _random_vec(rng, n, scale=1.5)
                    got = oracle.prox(gamma, x)
                    ref = px.brute_force_prox(
                        oracle.value, gamma, x, constraints=cons, bounds=bounds
                    )
                    np.testing.assert_allclose(got, ref, atol=1e-5)

    def test_spec_brute_force_examples(self):
        # soft threshold of |x| at x=2, gamma=1 -> 1
        got = px.brute_force_prox(lambda u: abs(float(u[0])), 1.0, np.array([2.0]))
        np.testing.assert_allclose(got, [1.0], atol=1e-6)
        # psi = 0 -> identity
        x = np.array([0.3, -1.2])
        np.testing.assert_allclose(px.brute_force_prox(lambda u: 0.0, 1.0, x), x, atol=1e-6)
        # ball indicator matches project_l2_ball
        ball = px.Ball2Prox(1.0)
        got = px.brute_force_prox(
            ball.value,
            1.0,
            np.array([3.0, 4.0]),
            constraints=[{"type": "ineq", "fun": lambda u: 1.0 - float(u @ u)}],
        )
        np.testing.assert_allclose(got, [0.6, 0.8], atol=1e-6)
        with pytest.raises(ValueError):
            px.brute_force_prox(lambda u: 0.0, 1.0, np.zeros(4))

    def test_optimality_residual(self):
        # 0 in d_psi(u*) + (u* - x)/gamma for piecewise-linear/smooth psi
        rng = Pcg32(7)
        n = 3
        for _ in range(30):
            gamma = 0.5 + rng.random()
            x = _random_vec(rng, n)
            lam = 0.4 + rng.random()
            # l1: subgradient is sign on supports, [-1,1] at zeros
            u = px.GroupNormProx.l1(lam, n).prox(gamma, x)
            g = (x - u) / gamma  # must lie in lam * d||u||_1
            for j in range(n):
                if abs(u[j]) > 1e-12:
                    assert g[j] == pytest.approx(lam * np.sign(u[j]), abs=1e-8)
                else:
                    assert abs(g[j]) <= lam + 1e-8
            # power norm (smooth away from 0): gradient residual
            pw = px.PowerNormProx(2.0, lam)
            u = pw.prox(gamma, x)
            if np.linalg.norm(u) > 1e-10:
                grad = lam * 4.0 * np.linalg.norm(u) ** 2 * u + (u - x) / gamma
                assert np.linalg.norm(grad) <= 1e-8 * (1 + np.linalg.norm(x) / gamma)


class TestOracleJson:
    def test_round_trip(self):
        oracles = [
            px.L2NormProx(0.5),
            px.GroupNormProx(1.0, [[0, 1], [2]], 3),
            px.Ball2Prox(2.0),
            px.Ball1Prox(1.0, np.array([0.1, -0.2, 0.3])),
            px.SimplexProx(),
            px.TV1DProx(0.3),
            px.PowerNormProx(2.0, 1.5),
            px.ZeroProx(),
        ]
        rng = Pcg32(1)
        for o in oracles:
            doc = o.to_json()
            o2 = px.oracle_from_json(doc)
            x = rng.normals(3)
            np.testing.assert_allclose(o.prox(0.7, x), o2.prox(0.7, x), rtol=1e-14)

    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="l2norm"):
            px.oracle_from_json({"kind": "nonsense", "params": {}})


class TestCompositeProx:
    def _random_quad(self, rng, n):
        M = rng.normals(n * n).reshape(n, n)
        A = M.T @ M / n
        b = rng.normals(n)
        return A, b

    def test_exact_path_stationarity(self):
        rng = Pcg32(13)
        n = 6
        A, b = self._random_quad(rng, n)
        lam = 0.8
        cp = px.CompositeProx(A, b, px.L2NormProx(lam))
        assert not cp.is_inexact
        for _ in range(20):
            gamma = 0.5 + rng.random()
            x = _random_vec(rng, n)
            z = cp.prox(gamma, x)
            if np.linalg.norm(z) > 1e-10:
                res = A @ z + b + lam * z / np.linalg.norm(z) + (z - x) / gamma
                assert np.linalg.norm(res) <= 1e-9 * (1 + np.linalg.norm(x))
            else:
                # 0 optimal iff ||b - x/gamma|| <= lam
                assert np.linalg.norm(b - x / gamma) <= lam * (1 + 1e-9)

    def test_apg_matches_exact_path(self):
        rng = Pcg32(14)
        n = 5
        A, b = self._random_quad(rng, n)
        lam = 0.6
        exact = px.CompositeProx(A, b, px.L2NormProx(lam))

        class _NormLike(px.ProxOracle):
            # same function, but a class the exact path does not recognize
            kind = "opaque"

            def value(self, x):
                return lam * float(np.linalg.norm(x))

            def prox(self, gamma, x):
                return px.prox_euclidean_norm(gamma * lam, x)

        apg = px.CompositeProx(A, b, _NormLike())
        assert apg.is_inexact
        for _ in range(5):
            gamma = 0.3 + rng.random()
            x = _random_vec(rng, n)
            np.testing.assert_allclose(
                apg.prox(gamma, x), exact.prox(gamma, x), atol=1e-7
            )

    def test_ball_path(self):
        rng = Pcg32(16)
        n = 4
        A, b = self._random_quad(rng, n)
        cp = px.CompositeProx(A, b, px.Ball2Prox(0.7))
        for _ in range(10):
            x = _random_vec(rng, n)
            z = cp.prox(1.0, x)
            assert np.linalg.norm(z) <= 0.7 * (1 + 1e-10)
            # KKT: A z + b + (z-x)/gamma + mu z = 0 with mu >= 0
            res = A @ z + b + (z - x)
            nz = np.linalg.norm(z)
            if nz < 0.7 * (1 - 1e-8):
                assert np.linalg.norm(res) <= 1e-9 * (1 + np.linalg.norm(x))
            else:
                mu = -float(res @ z) / float(z @ z)
                assert mu >= -1e-9
                assert np.linalg.norm(res + mu * z) <= 1e-8 * (1 + np.linalg.norm(x))
