import pytest

from smoothcd.rates import (
    contraction_C1,
    growth_constant_fb,
    growth_constant_me,
    growth_constant_ns,
)


class TestMoreauGrowth:
    def test_q2_hand_value(self):
        assert growth_constant_me(2.0, 1.0, 1.0) == pytest.approx(0.5, abs=0)

    def test_q1_hand_value(self):
        assert growth_constant_me(1.0, 1.0, 1.0, R=2.0) == pytest.approx(1.0 / 9.0, rel=1e-15)

    def test_requires_R_below_q2(self):
        with pytest.raises(ValueError):
            growth_constant_me(1.5, 1.0, 1.0)

    def test_q_range(self):
        with pytest.raises(ValueError):
            growth_constant_me(2.5, 1.0, 1.0)


class TestFbGrowth:
    def test_q2_hand_value(self):
        assert growth_constant_fb(2.0, 1.0, 0.5, 1.0, 1.0) == pytest.approx(0.5, abs=0)

    def test_gamma_l_guard(self):
        with pytest.raises(ValueError):
            growth_constant_fb(2.0, 1.0, 1.0, 1.0, 1.0)

    def test_q1_branch_positive(self):
        v = growth_constant_fb(1.0, 2.0, 0.3, 1.0, 4.0, R=1.5)
        assert 0 < v < 2.0


class TestNsGrowth:
    def test_level_set_value(self):
        assert growth_constant_ns(2.0, 1.0, 1.0) == pytest.approx(0.25, abs=0)

    def test_bounded_set_value(self):
        assert growth_constant_ns(1.0, 1.0, 1.0, R=2.0) == pytest.approx(0.5, abs=0)


class TestContraction:
    def test_q2_reduction(self):
        assert contraction_C1(1.0, 2.0, 2) == pytest.approx(0.75, abs=0)

    def test_range(self):
        c = contraction_C1(0.5, 1.5, 10, Delta0=4.0)
        assert 0.0 < c < 1.0

    def test_delta0_required(self):
        with pytest.raises(ValueError):
            contraction_C1(0.5, 1.5, 10)
