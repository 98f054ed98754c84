import numpy as np
import pytest

from smoothcd import prox as px
from smoothcd.core import BlockPartition, ConfigurationError
from smoothcd.problems import QuadraticComposite, SaddleProblem
from smoothcd.rng import Pcg32
from smoothcd.smoothing import (
    DouglasRachfordSurrogate,
    ForwardBackwardSurrogate,
    MoreauSurrogate,
    NesterovSurrogate,
    surrogate_check,
)


def _quad_l1(n, seed, lam=0.5, identity=False, m=None):
    rng = Pcg32(seed)
    if identity:
        B = np.eye(n)
    else:
        m = m or max(2, n // 2)
        B = rng.normals(m * n).reshape(m, n) * (rng.uniforms(m * n).reshape(m, n) < 0.4)
    c = rng.normals(B.shape[0])
    prob = QuadraticComposite.from_least_squares(B, c, px.GroupNormProx.l1(lam, n))
    return prob, c


class TestMoreau:
    def test_huber_value_and_grad(self):
        s = MoreauSurrogate(px.L2NormProx(1.0), gamma=1.0, n=1)
        st = s.make_state([2.0])
        assert s.value_state(st) == pytest.approx(1.5, abs=1e-12)
        assert s.coord_grad(st, 0)[0] == pytest.approx(1.0, abs=1e-12)
        assert s.coord_lipschitz[0] == pytest.approx(1.0)

    def test_zero_function(self):
        s = MoreauSurrogate(px.ZeroProx(), gamma=0.7, n=3)
        x = np.array([1.0, -2.0, 0.5])
        st = s.make_state(x)
        assert s.value_state(st) == 0.0
        np.testing.assert_allclose(s.full_grad(st), 0.0, atol=1e-15)

    def test_grad_zero_at_minimizer(self):
        s = MoreauSurrogate(px.L2NormProx(1.0), gamma=1.0, n=2)
        st = s.make_state(np.zeros(2))
        np.testing.assert_allclose(s.full_grad(st), 0.0, atol=1e-15)

    def test_maps_and_gap(self):
        s = MoreauSurrogate(px.L2NormProx(0.5), gamma=2.0, n=2)
        st = s.make_state([3.0, 4.0])
        np.testing.assert_allclose(s.map_C(st), [3.0, 4.0])
        np.testing.assert_allclose(s.map_B(st), px.prox_euclidean_norm(1.0, [3.0, 4.0]))
        assert s.gap_D == 0.0


class TestForwardBackward:
    def test_hand_value(self):
        prob = QuadraticComposite(np.array([[1.0]]), np.array([0.0]), px.ZeroProx())
        s = ForwardBackwardSurrogate(prob, gamma=0.5)
        st = s.make_state([2.0])
        assert s.value_state(st) == pytest.approx(1.0, abs=1e-12)
        assert s.coord_grad(st, 0)[0] == pytest.approx(1.0, abs=1e-12)

    def test_zero_smooth_part_equals_moreau(self):
        rng = Pcg32(4)
        n = 6
        psi = px.GroupNormProx.l1(0.8, n)
        prob = QuadraticComposite(np.zeros((n, n)), np.zeros(n), psi, lipschitz_L=0.0)
        fb = ForwardBackwardSurrogate(prob, gamma=0.9)
        me = MoreauSurrogate(psi, gamma=0.9, n=n)
        for _ in range(10):
            x = rng.normals(n)
            assert fb.value(x) == pytest.approx(me.value(x), rel=1e-12, abs=1e-12)

    def test_scalar_lipschitz_formula(self):
        prob = QuadraticComposite(np.diag([2.0, 1.0]), np.zeros(2), px.ZeroProx())
        s = ForwardBackwardSurrogate(prob, gamma=0.25)
        np.testing.assert_allclose(s.coord_lipschitz, [2.0, 3.0], rtol=1e-14)

    def test_gamma_l_guard(self):
        prob = QuadraticComposite(np.array([[2.0]]), np.array([0.0]), px.ZeroProx())
        with pytest.raises(ConfigurationError):
            ForwardBackwardSurrogate(prob, gamma=0.5)

    def test_minimizer_value_coincides(self):
        prob, c = _quad_l1(8, seed=11, lam=0.6, identity=True)
        x_star = np.sign(c) * np.maximum(np.abs(c) - 0.6, 0.0)
        f_star = prob.objective(x_star)
        s = ForwardBackwardSurrogate(prob, gamma=0.5 / prob.lipschitz_L)
        assert s.value(x_star) == pytest.approx(f_star, abs=1e-8)
        assert np.linalg.norm(s.grad(x_star)) <= 1e-8


class TestDouglasRachford:
    def test_hand_value(self):
        prob = QuadraticComposite(np.array([[1.0]]), np.array([0.0]), px.ZeroProx())
        s = DouglasRachfordSurrogate(prob, gamma=0.5)
        st = s.make_state([3.0])
        assert s.value_state(st) == pytest.approx(1.0, abs=1e-12)
        assert s.coord_grad(st, 0)[0] == pytest.approx(2.0 / 3.0, abs=1e-12)

    def test_grad_zero_at_envelope_minimizer(self):
        prob = QuadraticComposite(np.array([[1.0]]), np.array([0.0]), px.ZeroProx())
        s = DouglasRachfordSurrogate(prob, gamma=0.5)
        st = s.make_state([0.0])
        assert abs(s.coord_grad(st, 0)[0]) <= 1e-14

    def test_sandwich_hand_maps(self):
        rng = Pcg32(6)
        prob, _ = _quad_l1(6, seed=5, lam=0.4)
        gamma = 0.5 / prob.lipschitz_L
        s = DouglasRachfordSurrogate(prob, gamma)
        for _ in range(20):
            x = rng.normals(6)
            st = s.make_state(x)
            fg = s.value_state(st)
            assert prob.objective(s.map_B(st)) <= fg + 1e-9 * (1 + abs(fg))
            assert fg <= prob.objective(s.map_C(st)) + 1e-9 * (1 + abs(fg))

    def test_minimizer_value_through_prox_f(self):
        prob, c = _quad_l1(7, seed=12, lam=0.5, identity=True)
        lam = 0.5
        x_star = np.sign(c) * np.maximum(np.abs(c) - lam, 0.0)
        f_star = prob.objective(x_star)
        gamma = 0.4 / prob.lipschitz_L
        s = DouglasRachfordSurrogate(prob, gamma)
        # envelope minimizer maps to x* through prox_{gamma f}
        y_star = x_star + gamma * prob.f_grad(x_star)
        assert np.linalg.norm(s.grad(y_star)) <= 1e-8
        assert s.value(y_star) == pytest.approx(f_star, abs=1e-8)

    def test_diagonal_fast_path_matches_dense(self):
        rng = Pcg32(9)
        d = np.array([2.0, 0.5, 1.0, 0.0])
        psi = px.GroupNormProx.l1(0.3, 4)
        prob_diag = QuadraticComposite(np.diag(d), rng.normals(4), psi)
        s_diag = DouglasRachfordSurrogate(prob_diag, gamma=0.3)
        assert s_diag._diagonal
        # same matrix with an explicit off-diagonal zero entry of dense storage
        A_dense = np.diag(d) + 1e-30 * (np.ones((4, 4)) - np.eye(4))
        prob_dense = QuadraticComposite(A_dense, prob_diag.b, psi)
        s_dense = DouglasRachfordSurrogate(prob_dense, gamma=0.3)
        assert not s_dense._diagonal
        np.testing.assert_allclose(s_diag.coord_lipschitz, s_dense.coord_lipschitz, rtol=1e-8)
        for _ in range(5):
            x = rng.normals(4)
            assert s_diag.value(x) == pytest.approx(s_dense.value(x), rel=1e-10)
            np.testing.assert_allclose(s_diag.grad(x), s_dense.grad(x), atol=1e-10)


class TestNesterov:
    def test_norm_instance_values(self):
        sad = SaddleProblem.smoothed_norm(1.0, 2)
        s = NesterovSurrogate(sad, gamma=1.0)
        x = np.array([2.0, 0.0])
        assert s.value(x) == pytest.approx(1.5, abs=1e-13)
        x = np.array([0.3, 0.4])
        assert s.value(x) == pytest.approx(0.125, abs=1e-13)
        assert s.gap_D == 0.5

    def test_linf_zero_residual(self):
        A = np.array([[1.0, 2.0], [0.0, 1.0]])
        x = np.array([0.5, -0.25])
        b = A @ x
        sad = SaddleProblem.linf_residual(A, b)
        s = NesterovSurrogate(sad, gamma=0.37)
        assert s.value(x) == pytest.approx(0.0, abs=1e-13)

    def test_l1_huber_row(self):
        gamma = 0.8
        sad = SaddleProblem.l1_residual(np.array([[1.0]]), np.array([0.0]))
        s = NesterovSurrogate(sad, gamma=gamma)
        assert s.value(np.array([2.0 * gamma])) == pytest.approx(1.5 * gamma, abs=1e-13)

    def test_gap_inequality(self):
        rng = Pcg32(3)
        n = 5
        A = rng.normals(3 * n).reshape(3, n)
        b = rng.normals(3)
        f_A = np.eye(n) * 0.5
        for sad in (
            SaddleProblem.linf_residual(A, b, f_A=f_A, f_b=np.zeros(n)),
            SaddleProblem.l1_residual(A, b, f_A=f_A, f_b=np.zeros(n)),
            SaddleProblem.smoothed_norm(0.7, n, f_A=f_A, f_b=np.zeros(n)),
        ):
            s = NesterovSurrogate(sad, gamma=0.2)
            for _ in range(30):
                x = 2 * rng.normals(n)
                gap = sad.original_value(x) - s.value(x)
                assert -1e-10 <= gap <= 0.2 * sad.D_bar * (1 + 1e-10)


def _check_ok(surrogate, objective, seed, **kw):
    rep = surrogate_check(surrogate, objective, Pcg32(seed), **kw)
    assert rep.passed, rep.summary()
    return rep


class TestContract:
    def test_moreau_on_abs(self):
        s = MoreauSurrogate(px.L2NormProx(1.0), gamma=1.0, n=1)
        _check_ok(s, s.original_value, seed=100, trials=60, cache_steps=50)

    def test_fb_random_psd(self):
        prob, _ = _quad_l1(20, seed=21, lam=0.7)
        s = ForwardBackwardSurrogate(prob, gamma=0.5 / prob.lipschitz_L)
        _check_ok(s, prob.objective, seed=101, trials=60)

    def test_dr_random_psd(self):
        prob, _ = _quad_l1(15, seed=22, lam=0.7)
        s = DouglasRachfordSurrogate(prob, gamma=0.5 / prob.lipschitz_L)
        _check_ok(s, prob.objective, seed=102, trials=60)

    def test_ns_instances(self):
        rng = Pcg32(23)
        n = 8
        B = rng.normals(4 * n).reshape(4, n)
        f_A = B.T @ B / 4
        f_b = rng.normals(n)
        A = rng.normals(3 * n).reshape(3, n)
        b = rng.normals(3)
        for sad in (
            SaddleProblem.l1_residual(A, b, f_A=f_A, f_b=f_b),
            SaddleProblem.smoothed_norm(1.0, n, f_A=f_A, f_b=f_b),
        ):
            s = NesterovSurrogate(sad, gamma=0.15)
            _check_ok(s, sad.original_value, seed=103, trials=60)

    def test_ns_linf_contract(self):
        rng = Pcg32(29)
        n = 6
        A = rng.normals(2 * n).reshape(2, n)
        b = rng.normals(2)
        sad = SaddleProblem.linf_residual(A, b, f_A=np.eye(n), f_b=np.zeros(n))
        s = NesterovSurrogate(sad, gamma=0.25)
        _check_ok(s, sad.original_value, seed=104, trials=60)

    def test_mutated_lipschitz_fails(self):
        # Moreau constants 1/gamma are tight inside the soft-threshold region,
        # so halving them must trip the Lipschitz family
        s = MoreauSurrogate(px.GroupNormProx.l1(3.0, 4), gamma=1.0, n=4)
        rep = surrogate_check(
            s,
            s.original_value,
            Pcg32(105),
            trials=80,
            coord_lipschitz=0.5 * s.coord_lipschitz,
            cache_steps=0,
        )
        assert "lipschitz" in rep.failures() and "cocoercivity" in rep.failures()
        # and the unmutated constants pass
        assert surrogate_check(s, s.original_value, Pcg32(105), trials=80).passed

    def test_blockwise_partition(self):
        rng = Pcg32(27)
        n = 12
        part = BlockPartition.uniform(n, 3)
        B = rng.normals(6 * n).reshape(6, n)
        prob = QuadraticComposite(
            B.T @ B / 6, rng.normals(n), px.L2NormProx(0.4), partition=part
        )
        for s in (
            ForwardBackwardSurrogate(prob, gamma=0.5 / prob.lipschitz_L),
            DouglasRachfordSurrogate(prob, gamma=0.5 / prob.lipschitz_L),
        ):
            _check_ok(s, prob.objective, seed=106, trials=50)

    def test_state_linear_combination(self):
        prob, _ = _quad_l1(9, seed=31, lam=0.3)
        s = ForwardBackwardSurrogate(prob, gamma=0.4 / prob.lipschitz_L)
        rng = Pcg32(32)
        s1 = s.make_state(rng.normals(9))
        s2 = s.make_state(rng.normals(9))
        dst = s.make_state(np.zeros(9))
        s.combine_state(dst, 0.3, s1, -1.2, s2)
        fresh = s._init_aux(dst.x)
        for k, v in fresh.items():
            np.testing.assert_allclose(dst.aux[k], v, atol=1e-12)
