import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from extinguish.cone import ConeParams
from extinguish.diagnostics import detect_extinction, mass_balance_residual
from extinguish.domain import Field, band_limited_random, gaussian, lp_norm, make_grid
from extinguish.errors import DivergenceError, DomainError
from extinguish.evolve import (
    EvolveConfig,
    SourceTerm,
    evolve,
    linear_flow_exact,
    nonlinear_flow_exact,
    source_eval,
    step_backward_euler,
    step_strang,
)
from oracles import pointwise_ode_rk4

P = ConeParams(0.5, 1j)


def one(value=1.0, n=4):
    g = make_grid(1, n, 1.0)
    return Field(g, np.full(g.shape, value, dtype=complex))


class TestNonlinearFlow:
    def test_extinction_at_two(self):
        assert not np.any(nonlinear_flow_exact(P, one(), 2.0).values)

    def test_quarter(self):
        out = nonlinear_flow_exact(P, one(), 1.0).values[0]
        assert out == pytest.approx(0.25, abs=1e-15)
        assert out == pytest.approx(pointwise_ode_rk4(1.0, 0.5, 1j, 1.0), abs=1e-10)

    def test_phase(self):
        params = ConeParams(0.5, 1 + 1j)
        out = nonlinear_flow_exact(params, one(), 1.0).values[0]
        assert out == pytest.approx(0.25 * np.exp(1j * math.log(4)), abs=1e-15)
        assert out == pytest.approx(pointwise_ode_rk4(1.0, 0.5, 1 + 1j, 1.0), abs=1e-10)

    @given(st.floats(0.1, 0.9), st.floats(-1, 1), st.floats(0.05, 3), st.floats(0.01, 2))
    def test_against_rk4(self, m, re, r0, t):
        a = complex(re, 1.0)
        if not 2 * math.sqrt(m) > (1 - m) * abs(re):
            return
        params = ConeParams(m, a)
        z0 = r0 * np.exp(0.3j)
        t_ext = r0 ** (1 - m) / ((1 - m) * a.imag)
        if abs(t - t_ext) < 0.05 * t_ext:
            return  # RK4 loses accuracy at the non-smooth extinction point
        exact = nonlinear_flow_exact(params, one(z0), t).values[0]
        ref = pointwise_ode_rk4(z0, m, a, min(t, t_ext), steps=4000) if t < t_ext else 0
        assert exact == pytest.approx(ref, abs=1e-8)

    def test_composition(self):
        u = one(0.7 + 0.2j)
        params = ConeParams(0.5, -0.3 + 1j)
        twice = nonlinear_flow_exact(params, nonlinear_flow_exact(params, u, 0.2), 0.3)
        assert np.allclose(twice.values, nonlinear_flow_exact(params, u, 0.5).values, atol=1e-15)


class TestLinearFlow:
    def test_plane_wave(self):
        g = make_grid(1, 16, 2 * math.pi)
        u = Field(g, np.exp(1j * g.coords))
        assert np.allclose(linear_flow_exact(u, math.pi).values, -u.values, atol=1e-14)

    def test_constant(self):
        u = one(3.0, 8)
        assert np.allclose(linear_flow_exact(u, 1.7).values, 3.0)

    @given(st.integers(0, 2 ** 31), st.floats(0, 100))
    def test_unitary(self, seed, dt):
        g = make_grid(2, 16, 5.0)
        u = band_limited_random(g, seed, 7, 1.0)
        assert lp_norm(linear_flow_exact(u, dt), 2) == pytest.approx(1.0, rel=1e-13)


class TestSource:
    def test_vanishing_profile(self):
        g = make_grid(1, 64, 10.0)
        src = SourceTerm("vanishing_profile", gaussian(g, 3.0), 1.0, 1e-2, 6.0)
        assert not np.any(source_eval(src, 1.0, g).values)
        assert not np.any(source_eval(src, 1.5, g).values)
        assert lp_norm(source_eval(src, 0.0, g), 2) == pytest.approx(0.1, rel=1e-13)
        assert lp_norm(source_eval(src, 0.5, g), 2) ** 2 == pytest.approx(1e-2 * 0.5 ** 6, rel=1e-12)

    def test_envelopes(self):
        g = make_grid(1, 8, 1.0)
        shape = Field(g, np.ones(8))
        assert SourceTerm("separable", shape, 2.0, envelope="box").amplitude(1.9) == 1.0
        assert SourceTerm("separable", shape, 2.0, envelope="linear").amplitude(0.5) == 0.75
        assert SourceTerm("separable", shape, 2.0, envelope="sine").amplitude(1.0) == pytest.approx(1.0)
        assert SourceTerm("separable", shape, 2.0).amplitude(2.0) == 0.0

    def test_negative_time(self):
        with pytest.raises(DomainError):
            source_eval(SourceTerm(), -1.0, make_grid(1, 8, 1.0))

    @pytest.mark.parametrize("kw", [dict(kind="x"), dict(kind="separable"),
                                    dict(kind="vanishing_profile", T0=1.0, eps_star=0.0)])
    def test_validation(self, kw):
        g = make_grid(1, 8, 1.0)
        if kw.get("kind") == "vanishing_profile":
            kw = dict(kw, spatial=Field(g, np.ones(8)), source_exponent=6.0)
        with pytest.raises(DomainError):
            SourceTerm(**kw)


class TestSteps:
    def test_zero_stays_zero(self):
        g = make_grid(1, 32, 10.0)
        z = Field.zeros(g)
        assert not np.any(step_backward_euler(z, 0.1, None, P).values)
        assert not np.any(step_strang(z, 0.0, 0.1, SourceTerm(), P).values)

    @given(st.integers(0, 2 ** 31), st.floats(1e-3, 0.2))
    def test_be_dissipative(self, seed, dt):
        g = make_grid(1, 64, 20.0)
        u = band_limited_random(g, seed, 12, 2.0)
        nxt = step_backward_euler(u, dt, None, ConeParams(0.5, -0.5 + 1j))
        assert lp_norm(nxt, 2) <= lp_norm(u, 2) * (1 + 1e-12)

    def test_be_first_order(self):
        g = make_grid(1, 128, 40.0)
        u0 = gaussian(g)

        def final(dt):
            return evolve(EvolveConfig(P, u0, dt, 0.4, scheme="backward_euler",
                                       snapshot_times=(0.4,))).snapshots[-1][1]
        ref = evolve(EvolveConfig(P, u0, 1e-4, 0.4, snapshot_times=(0.4,))).snapshots[-1][1]
        e1, e2 = lp_norm(final(0.02) - ref, 2), lp_norm(final(0.01) - ref, 2)
        assert 1.6 < e1 / e2 < 2.4

    def test_strang_second_order(self):
        g = make_grid(1, 128, 40.0)
        u0 = gaussian(g)

        def final(dt):
            return evolve(EvolveConfig(P, u0, dt, 0.4, snapshot_times=(0.4,))).snapshots[-1][1]
        ref = final(1e-4)
        e1, e2 = lp_norm(final(0.02) - ref, 2), lp_norm(final(0.01) - ref, 2)
        assert 3.2 < e1 / e2 < 4.8

    def test_bad_dt(self):
        with pytest.raises(DomainError):
            step_strang(one(), 0.0, 0.0, SourceTerm(), P)


class TestZeroDispersion:
    def test_strang_exact(self):
        u0 = one(1.0, 8)
        res = evolve(EvolveConfig(P, u0, 0.01, 3.0, dispersion=False, stop_on_extinction=False))
        s = res.series
        r = np.maximum(1 - 0.5 * s.times, 0) ** 2
        assert np.max(np.abs(np.sqrt(s.mass) - r)) < 1e-10
        assert abs(detect_extinction(s, 1e-12) - 2.0) <= 0.01

    def test_backward_euler_close(self):
        u0 = one(1.0, 8)
        res = evolve(EvolveConfig(P, u0, 0.001, 3.0, scheme="backward_euler", dispersion=False))
        s = res.series
        r = np.maximum(1 - 0.5 * s.times, 0) ** 2
        # first-order scheme: amplitude error O(dt), extinction delayed by O(sqrt(dt))
        assert np.max(np.abs(np.sqrt(s.mass) - r)) < 5e-3
        assert abs(detect_extinction(s, 1e-12) - 2.0) < 0.1


class TestEvolve:
    def test_zero_data(self):
        g = make_grid(1, 32, 10.0)
        res = evolve(EvolveConfig(P, Field.zeros(g), 0.01, 0.1, stop_on_extinction=False))
        assert not np.any(res.series.mass)

    @pytest.mark.parametrize("scheme,dt", [("strang", 1e-3), ("backward_euler", 1e-2)])
    def test_mass_decreasing_to_extinction(self, scheme, dt):
        g = make_grid(1, 512, 40.0)
        res = evolve(EvolveConfig(P, gaussian(g), dt, 10.0, scheme=scheme, cadence=max(1, int(0.01 / dt))))
        s = res.series
        live = s.mass > 1e-12 * s.mass[0]
        assert np.all(np.diff(s.mass[live]) < 0)
        assert detect_extinction(s, 1e-12) is not None
        assert s.times[-1] < 10.0  # stopped early

    def test_deterministic(self):
        g = make_grid(2, 32, 20.0)
        cfg = EvolveConfig(ConeParams(0.5, -0.5 + 1j), band_limited_random(g, 3, 5, 4.0), 1e-2, 0.5)
        a, b = evolve(cfg).series, evolve(cfg).series
        assert all(x.tobytes() == y.tobytes() for x, y in zip(a.columns(), b.columns()))

    def test_rejects_nonfinite_data(self):
        g = make_grid(1, 32, 10.0)
        u0 = gaussian(g)
        u0.values[3] = np.nan
        with pytest.raises(DomainError):
            EvolveConfig(P, u0, 0.01, 0.5)

    def test_norm_guard(self, monkeypatch):
        import sys

        ev = sys.modules["extinguish.evolve"]
        monkeypatch.setattr(ev, "DIVERGENCE_FACTOR", 1e-3)
        g = make_grid(1, 32, 10.0)
        src = SourceTerm("separable", gaussian(g, 10.0), 1.0)
        monkeypatch.setattr(ev, "_source_l1_norm", lambda *a: 0.0)
        with pytest.raises(DivergenceError):
            evolve(EvolveConfig(P, gaussian(g), 0.01, 0.5, source=src))

    def test_snapshots(self):
        g = make_grid(1, 64, 20.0)
        res = evolve(EvolveConfig(P, gaussian(g), 0.01, 0.3, snapshot_times=(0.0, 0.1, 0.25)))
        assert [round(t, 10) for t, _ in res.snapshots] == [0.0, 0.1, 0.25]

    @pytest.mark.parametrize("kw", [dict(dt=0), dict(t_end=-1), dict(scheme="rk4"), dict(cadence=0)])
    def test_config_validation(self, kw):
        g = make_grid(1, 8, 1.0)
        args = dict(params=P, u0=Field.zeros(g), dt=0.1, t_end=1.0)
        args.update(kw)
        with pytest.raises(DomainError):
            EvolveConfig(**args)

    def test_gradient_and_rate(self):
        g = make_grid(1, 256, 40.0)
        res = evolve(EvolveConfig(ConeParams(0.5, 1 + 2j), gaussian(g), 1e-3, 2.0, track_steps=True))
        assert res.max_grad_rise <= 1e-8
        assert res.max_rate > 0


class TestMassBalance:
    @pytest.mark.parametrize("scheme,dts,factor", [("backward_euler", (0.02, 0.01), 2.0),
                                                   ("strang", (0.02, 0.01), 4.0)])
    def test_order(self, scheme, dts, factor):
        g = make_grid(1, 256, 40.0)
        params = ConeParams(0.5, -0.5 + 1j)
        worst = []
        for dt in dts:
            res = evolve(EvolveConfig(params, gaussian(g), dt, 0.5, scheme=scheme))
            worst.append(np.abs(mass_balance_residual(res.series, params)).max())
        assert worst[0] / worst[1] == pytest.approx(factor, rel=0.2)

    def test_forced_strang_converges(self):
        g = make_grid(1, 256, 40.0)
        params = ConeParams(0.5, -0.5 + 1j)
        src = SourceTerm("separable", gaussian(g, 0.5, 2.0), 1.0, envelope="sine")
        worst = []
        for dt in (0.02, 0.01):
            res = evolve(EvolveConfig(params, gaussian(g), dt, 0.5, source=src))
            worst.append(np.abs(mass_balance_residual(res.series, params)).max())
        assert worst[1] < 0.6 * worst[0]
