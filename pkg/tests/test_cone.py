import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from extinguish.cone import ConeParams, cone_contains, g_apply, lp_check, rotate, sample_cone
from extinguish.errors import DomainError

ms = st.floats(0.01, 0.99)
comps = st.floats(-10, 10, allow_nan=False)


class TestConeContains:
    def test_imaginary_axis(self):
        assert cone_contains(0.5, 1j)

    def test_real_positive_rejected(self):
        assert not cone_contains(0.25, 1)

    def test_boundary_with_negative_real_part_admitted(self):
        # 2 * 0.5 * 3 == 0.75 * 4 exactly
        assert cone_contains(0.25, -4 + 3j)

    def test_boundary_with_positive_real_part_rejected(self):
        assert not cone_contains(0.25, 4 + 3j)

    @pytest.mark.parametrize("m", [0.0, 1.0, -0.5, 1.5, float("nan")])
    def test_bad_m(self, m):
        with pytest.raises(DomainError):
            cone_contains(m, 1j)

    def test_non_finite_a(self):
        with pytest.raises(DomainError):
            cone_contains(0.5, complex(float("inf"), 1))

    @given(ms, comps, comps, st.floats(1e-3, 1e3))
    def test_scale_invariance(self, m, re, im, t):
        a = complex(re, im)
        edge = abs(2 * math.sqrt(m) * a.imag - (1 - m) * abs(a.real))
        if edge < 1e-9 * (abs(a) + 1):
            return  # rounding can flip points sitting on the boundary
        assert cone_contains(m, a) == cone_contains(m, t * a)

    def test_params_reject_outside(self):
        with pytest.raises(DomainError, match="cone"):
            ConeParams(0.5, 1.0)


class TestRotate:
    def test_negative_real_part_case(self):
        rot = rotate(ConeParams(0.5, -1 + 1j))
        assert rot.b == pytest.approx(cmath.exp(-1j * math.pi / 4), abs=1e-15)
        assert ConeParams(0.5, -1 + 1j).a * rot.b == pytest.approx(1j * math.sqrt(2), abs=1e-14)

    def test_imaginary_a(self):
        rot = rotate(ConeParams(0.25, 1j))
        assert rot.theta_b == pytest.approx((math.pi / 2 - math.atan(0.75)) / 2, abs=1e-15)
        assert rot.theta_b == pytest.approx(0.46365, abs=1e-5)
        lhs = 2 * 0.5 * math.sin(math.pi / 2 - rot.theta_b)
        rhs = 0.75 * math.cos(math.pi / 2 - rot.theta_b)
        assert lhs == pytest.approx(0.8944, abs=1e-4)
        assert rhs == pytest.approx(0.3354, abs=1e-4)
        assert lhs > rhs

    def test_rejects_outside(self):
        with pytest.raises(DomainError):
            rotate(ConeParams(0.5, -3 + 0j))

    def test_random_invariants(self):
        m, a = sample_cone(np.random.default_rng(5), 5000)
        for mi, ai in zip(m, a):
            rot = rotate(ConeParams(mi, ai))
            ab = ai * rot.b
            assert abs(abs(rot.b) - 1) < 1e-14
            assert rot.b.real > 0 and rot.b.imag < 0
            assert 0 < rot.theta_b < math.pi / 2
            assert 2 * math.sqrt(mi) * ab.imag > (1 - mi) * ab.real >= -1e-12 * abs(ab)


class TestG:
    def test_values(self):
        assert g_apply(0.5, 4) == pytest.approx(2)
        assert g_apply(0.5, 0) == 0
        assert g_apply(0.5, -9j) == pytest.approx(-3j)

    def test_array_zero_exact(self):
        out = g_apply(0.3, np.array([0, 1e-300, 2j]))
        assert out[0] == 0
        assert np.all(np.isfinite(out))

    @given(ms, comps, comps)
    def test_modulus(self, m, re, im):
        z = complex(re, im)
        assert abs(g_apply(m, z)) == pytest.approx(abs(z) ** m, rel=1e-13, abs=1e-300)

    @given(ms, comps, comps, comps, comps)
    def test_holder_c3(self, m, a, b, c, d):
        z1, z2 = complex(a, b), complex(c, d)
        assert abs(g_apply(m, z1) - g_apply(m, z2)) <= 3 * abs(z1 - z2) ** m + 1e-12


class TestLPCheck:
    def test_examples(self):
        assert lp_check(0.5, 1, 0) == pytest.approx((0.0, 0.5))
        assert lp_check(0.5, 2 + 1j, 2 + 1j) == (0.0, 0.0)
        lhs, rhs = lp_check(0.5, 2, 1j)
        # w = (sqrt2 - i)(2 + i) = (2 sqrt2 + 1) + (sqrt2 - 2) i
        assert lhs == pytest.approx(2 * math.sqrt(0.5) * (2 - math.sqrt(2)), rel=1e-14)
        assert rhs == pytest.approx(0.5 * (2 * math.sqrt(2) + 1), rel=1e-14)
        assert lhs == pytest.approx(0.8284, abs=1e-4)
        assert rhs == pytest.approx(1.9142, abs=1e-4)

    @given(ms, comps, comps, comps, comps)
    def test_inequality(self, m, a, b, c, d):
        lhs, rhs = lp_check(m, complex(a, b), complex(c, d))
        assert lhs <= rhs + 1e-12 * max(1, rhs)

    def test_vectorized(self):
        rng = np.random.default_rng(0)
        z1 = rng.normal(size=100) + 1j * rng.normal(size=100)
        lhs, rhs = lp_check(0.4, z1, 0.0)
        assert lhs.shape == (100,)
        assert np.all(lhs <= rhs + 1e-12)


def test_sample_cone_all_admissible():
    m, a = sample_cone(np.random.default_rng(1), 20000)
    assert all(cone_contains(mi, ai) for mi, ai in zip(m, a))
    assert np.all((0.01 <= m) & (m <= 0.99))
