import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from extinguish.domain import (
    Field,
    band_limited_random,
    gaussian,
    gradient_norm,
    h2_split_norm,
    inner,
    laplacian,
    lp_norm,
    make_grid,
    read_field,
    sobolev_norm,
    tail_mass,
    write_field,
)
from extinguish.errors import DomainError, MemoryBudgetError


def plane(grid, k):
    return Field(grid, np.exp(1j * k * grid.coords))


class TestGrid:
    def test_wavenumbers_2pi(self):
        g = make_grid(1, 8, 2 * math.pi)
        assert np.allclose(g.wavenumbers, [0, 1, 2, 3, -4, -3, -2, -1])

    def test_2d(self):
        g = make_grid(2, 4, 1.0)
        assert g.size == 16 and g.shape == (4, 4)
        assert np.allclose(g.wavenumbers, 2 * math.pi * np.array([0, 1, -2, -1]))

    @pytest.mark.parametrize("args", [(1, 5, 1.0), (1, 2, 1.0), (0, 8, 1.0), (6, 4, 1.0),
                                      (1, 8, 0.0), (1, 8, -1.0), (1, 8, float("inf"))])
    def test_rejects(self, args):
        with pytest.raises(DomainError):
            make_grid(*args)

    def test_budget(self):
        with pytest.raises(MemoryBudgetError):
            make_grid(3, 64, 1.0, budget=1000)

    def test_spacing(self):
        g = make_grid(3, 32, 7.0)
        assert g.spacing * g.n == 7.0


class TestField:
    def test_non_finite_rejected(self):
        g = make_grid(1, 8, 1.0)
        with pytest.raises(DomainError):
            Field(g, np.full(8, np.nan))

    def test_wrong_length(self):
        with pytest.raises(DomainError):
            Field(make_grid(1, 8, 1.0), np.zeros(7))

    def test_grid_mismatch(self):
        u = Field.zeros(make_grid(1, 8, 1.0))
        v = Field.zeros(make_grid(1, 8, 2.0))
        with pytest.raises(DomainError):
            inner(u, v)


class TestLaplacian:
    def test_plane_wave(self):
        g = make_grid(1, 32, 2 * math.pi)
        u = plane(g, 1)
        assert np.allclose(laplacian(u).values, -u.values, atol=1e-13)

    def test_constant(self):
        g = make_grid(2, 8, 3.0)
        assert np.allclose(laplacian(Field(g, np.full(g.shape, 2.5))).values, 0, atol=1e-13)

    def test_gaussian(self):
        g = make_grid(1, 512, 40.0)
        x = g.coords
        lap = laplacian(gaussian(g)).values
        assert np.max(np.abs(lap - (x ** 2 - 1) * np.exp(-x ** 2 / 2))) < 1e-10

    def test_self_adjoint(self):
        g = make_grid(2, 16, 5.0)
        u = band_limited_random(g, 1, 6, 1.0)
        v = band_limited_random(g, 2, 6, 1.0)
        lhs, rhs = inner(laplacian(u), v), inner(u, laplacian(v))
        assert abs(lhs - rhs) <= 1e-11 * abs(lhs)

    def test_integration_by_parts(self):
        g = make_grid(1, 64, 10.0)
        u = band_limited_random(g, 3, 20, 2.0)
        lhs = inner(laplacian(u), u).real
        assert lhs == pytest.approx(-gradient_norm(u) ** 2, rel=1e-11)


class TestNorms:
    @pytest.mark.parametrize("p", [0.6, 1, 1.5, 2, 3])
    def test_constant(self, p):
        g = make_grid(2, 8, 3.0)
        u = Field(g, np.full(g.shape, -2.0))
        assert lp_norm(u, p) == pytest.approx(2.0 * 9.0 ** (1 / p), rel=1e-13)

    def test_zero(self):
        g = make_grid(1, 8, 3.0)
        assert lp_norm(Field.zeros(g), 2) == 0
        assert all(sobolev_norm(Field.zeros(g), ell) == 0 for ell in (0, 1, 2))

    def test_gaussian_l2(self):
        g = make_grid(1, 512, 40.0)
        assert lp_norm(gaussian(g), 2) == pytest.approx(math.pi ** 0.25, rel=1e-12)

    def test_sobolev_0_is_l2(self):
        g = make_grid(3, 8, 4.0)
        u = band_limited_random(g, 9, 3, 1.7)
        assert sobolev_norm(u, 0) == pytest.approx(lp_norm(u, 2), rel=1e-13)

    def test_single_mode_h1(self):
        L = 6.0
        g = make_grid(1, 16, L)
        k = 2 * math.pi * 3 / L
        assert sobolev_norm(plane(g, k), 1) ** 2 == pytest.approx((1 + k * k) * L, rel=1e-12)

    def test_h2_split(self):
        g = make_grid(1, 16, 2 * math.pi)
        u = plane(g, 2)
        assert h2_split_norm(u) ** 2 == pytest.approx((1 + 16) * 2 * math.pi, rel=1e-12)

    def test_bad_ell(self):
        with pytest.raises(DomainError):
            sobolev_norm(Field.zeros(make_grid(1, 8, 1.0)), 3)

    def test_inner_examples(self):
        g = make_grid(1, 16, 2 * math.pi)
        one = Field(g, np.ones(16))
        assert inner(one, one) == pytest.approx(2 * math.pi)
        assert abs(inner(plane(g, 1), plane(g, 2))) < 1e-13
        u = band_limited_random(g, 4, 5, 1.3)
        assert inner(u, u).imag == pytest.approx(0, abs=1e-15)
        assert inner(u, u).real == pytest.approx(lp_norm(u, 2) ** 2, rel=1e-13)

    @given(st.integers(0, 2 ** 31), st.integers(0, 2 ** 31))
    def test_parseval(self, s1, s2):
        g = make_grid(2, 8, 3.0)
        u, v = band_limited_random(g, s1, 3, 1.0), band_limited_random(g, s2, 3, 1.0)
        spectral = np.vdot(g.fft(v.values), g.fft(u.values)) * g.cell_volume / g.size
        assert abs(inner(u, v) - spectral) <= 1e-12 * max(1.0, abs(spectral))

    @given(st.integers(0, 2 ** 31), st.floats(0.05, 0.95))
    def test_interpolation(self, seed, m):
        g = make_grid(1, 64, 10.0)
        u = band_limited_random(g, seed, 10, 1.0)
        # 1/(m+1) = alpha/(2m) + (1-alpha)/2
        alpha = (1 / (m + 1) - 0.5) / (1 / (2 * m) - 0.5)
        rhs = lp_norm(u, 2 * m) ** alpha * lp_norm(u, 2) ** (1 - alpha)
        assert lp_norm(u, m + 1) <= rhs * (1 + 1e-12)


class TestRandomField:
    def test_constant_mode(self):
        g = make_grid(2, 8, 3.0)
        u = band_limited_random(g, 7, 0, 2.0)
        assert np.allclose(u.values, u.values.flat[0])
        assert lp_norm(u, 2) == pytest.approx(2.0)

    def test_deterministic(self):
        g = make_grid(2, 16, 3.0)
        a, b = band_limited_random(g, 7, 3, 1.0), band_limited_random(g, 7, 3, 1.0)
        assert a.values.tobytes() == b.values.tobytes()

    def test_nyquist(self):
        with pytest.raises(DomainError):
            band_limited_random(make_grid(1, 8, 1.0), 1, 4, 1.0)

    def test_band_limit(self):
        g = make_grid(1, 32, 1.0)
        u = band_limited_random(g, 1, 3, 1.0)
        spectrum = np.abs(np.fft.fft(u.values))
        assert np.all(spectrum[4:29] < 1e-12)


def test_tail_mass():
    g = make_grid(1, 512, 40.0)
    assert tail_mass(gaussian(g)) < 1e-100
    assert tail_mass(Field.zeros(g)) == 0
    flat = Field(g, np.ones(g.shape))
    assert tail_mass(flat) == pytest.approx(0.1, abs=2 / 512)


def test_field_roundtrip(tmp_path):
    g = make_grid(3, 8, 2.5)
    u = band_limited_random(g, 11, 3, 1.0)
    path = tmp_path / "u.bin"
    write_field(path, u)
    raw = path.read_bytes()
    assert len(raw) == 24 + 16 * g.size
    assert np.frombuffer(raw[:16], "<i8").tolist() == [3, 8]
    assert np.frombuffer(raw[16:24], "<f8")[0] == 2.5
    v = read_field(path)
    assert v.grid.same_as(g)
    assert v.values.tobytes() == u.values.tobytes()
