"""Seeded property suites, one per module.

Each property reports ``passed``, a worst-case figure and, on failure, a
counterexample.  Failures are data in the report, never exceptions.
"""
from __future__ import annotations

import math
import time

import numpy as np

from ..cone import ConeParams, cone_contains, g_apply, lp_check, rotate, sample_cone
from ..diagnostics import comparator_trajectory, delta_exponent, detect_extinction, gn_ratio, ode_comparator_bound
from ..domain import Field, band_limited_random, gaussian, h2_split_norm, lp_norm, make_grid
from ..evolve import EvolveConfig, evolve, linear_flow_exact, step_backward_euler
from ..resolvent import (
    ResolventProblem,
    SolveOptions,
    apriori_ratio,
    laplacian_sign,
    monotonicity_integral,
    solve_resolvent,
)

__all__ = ["SUITES", "verify_suite", "admissible_coefficients"]

SUITES = ("cone", "resolvent", "evolve", "diagnostics")

LAMBDAS = (1e-3, 1e-2, 1e-1)
B0S = (0.5, 1.0, 2.0)


def admissible_coefficients(m: float, count: int = 10) -> list:
    """``count`` cone-admissible ``a`` spread over the admissible arc, moduli 0.5..2."""
    phi = math.atan((1 - m) / (2 * math.sqrt(m)))
    thetas = np.linspace(phi, math.pi - phi, count + 2)[1:-1]
    mods = np.geomspace(0.5, 2.0, count)
    out = [complex(r * np.exp(1j * th)) for r, th in zip(mods, thetas)]
    assert all(cone_contains(m, a) for a in out)
    return out


def _prop(passed: bool, worst: float, counterexample=None, **extra) -> dict:
    d = {"passed": bool(passed), "worst": float(worst)}
    if not passed and counterexample is not None:
        d["counterexample"] = counterexample
    d.update(extra)
    return d


def _chunks(total: int, size: int = 200_000):
    done = 0
    while done < total:
        k = min(size, total - done)
        yield k
        done += k


# --- cone -----------------------------------------------------------------

def lp_property(rng: np.random.Generator, trials: int) -> dict:
    """Pointwise sector inequality for g over random ``(m, z1, z2)``."""
    worst, bad = -math.inf, None
    for k in _chunks(trials):
        m = rng.uniform(0.01, 0.99, k)
        z1 = rng.uniform(-10, 10, k) + 1j * rng.uniform(-10, 10, k)
        z2 = rng.uniform(-10, 10, k) + 1j * rng.uniform(-10, 10, k)
        lhs, rhs = lp_check(m, z1, z2)
        excess = (lhs - rhs) / np.maximum(1.0, rhs)
        i = int(np.argmax(excess))
        if excess[i] > worst:
            worst = float(excess[i])
            bad = {"m": float(m[i]), "z1": [z1[i].real, z1[i].imag], "z2": [z2[i].real, z2[i].imag]}
    return _prop(worst <= 1e-12, worst, bad)


def holder_property(rng, trials: int) -> dict:
    ratio_max, mod_err = 0.0, 0.0
    for k in _chunks(trials):
        m = rng.uniform(0.01, 0.99, k)
        z1 = rng.uniform(-10, 10, k) + 1j * rng.uniform(-10, 10, k)
        z2 = rng.uniform(-10, 10, k) + 1j * rng.uniform(-10, 10, k)
        g1, g2 = g_apply(m, z1), g_apply(m, z2)
        mod_err = max(mod_err, float(np.max(np.abs(np.abs(g1) - np.abs(z1) ** m) / np.abs(z1) ** m)))
        gap = np.abs(z1 - z2)
        nz = gap > 0
        ratio_max = max(ratio_max, float(np.max(np.abs(g1 - g2)[nz] / gap[nz] ** m[nz])))
    return {"modulus": _prop(mod_err <= 1e-14, mod_err),
            "holder_C3": _prop(ratio_max <= 3.0, ratio_max, empirical_constant=ratio_max)}


def rotation_property(rng, trials: int) -> dict:
    m, a = sample_cone(rng, trials)
    worst = {"unit": 0.0, "re_pos": math.inf, "im_neg": -math.inf, "strict": math.inf}
    bad = None
    for mi, ai in zip(m, a):
        rot = rotate(ConeParams(mi, ai))
        b = rot.b
        ab = ai * b
        unit = abs(abs(b) - 1.0)
        margin = 2 * math.sqrt(mi) * ab.imag - (1 - mi) * ab.real
        scale = max(1.0, abs(ab))
        worst["unit"] = max(worst["unit"], unit)
        worst["re_pos"] = min(worst["re_pos"], b.real)
        worst["im_neg"] = max(worst["im_neg"], b.imag)
        worst["strict"] = min(worst["strict"], margin / scale)
        ok = unit <= 1e-12 and b.real > 0 and b.imag < 0 and margin > 0 and ab.real >= -1e-12 * scale
        if not ok and bad is None:
            bad = {"m": float(mi), "a": [ai.real, ai.imag]}
    passed = bad is None
    return _prop(passed, worst["unit"], bad, min_strict_margin=worst["strict"],
                 min_re_b=worst["re_pos"], max_im_b=worst["im_neg"])


def scaling_property(rng, trials: int) -> dict:
    k = min(trials, 100_000)
    m = rng.uniform(0.01, 0.99, k)
    a = rng.uniform(-5, 5, k) + 1j * rng.uniform(-1, 5, k)
    t = 10.0 ** rng.uniform(-3, 3, k)
    mismatch = 0
    bad = None
    for mi, ai, ti in zip(m, a, t):
        if cone_contains(mi, ai) != cone_contains(mi, ti * ai):
            # rounding at the exact boundary can flip; count but tolerate none off-boundary
            edge = abs(2 * math.sqrt(mi) * ai.imag - (1 - mi) * abs(ai.real))
            if edge > 1e-12 * abs(ai):
                mismatch += 1
                bad = bad or {"m": float(mi), "a": [ai.real, ai.imag], "t": float(ti)}
    return _prop(mismatch == 0, mismatch, bad)


def monotonicity_property(rng, pairs: int, n: int = 128, m: float = 0.5) -> dict:
    """``Re(-i a <g(u)-g(v), u-v>) >= -1e-10 scale`` on random field pairs."""
    grid = make_grid(1, n, 20.0)
    coeffs = admissible_coefficients(m)
    worst, bad = math.inf, None
    for i in range(pairs):
        seed = int(rng.integers(2 ** 31))
        u = band_limited_random(grid, seed, 16, float(rng.uniform(0.1, 5)))
        v = band_limited_random(grid, seed + 1, 16, float(rng.uniform(0.1, 5)))
        for a in coeffs:
            params = ConeParams(m, a)
            val = monotonicity_integral(params, u, v)
            gu = Field(grid, g_apply(m, u.values) - g_apply(m, v.values))
            scale = abs(a) * lp_norm(gu, 2) * lp_norm(u - v, 2) or 1.0
            if val / scale < worst:
                worst = val / scale
            if val < -1e-10 * scale and bad is None:
                bad = {"pair": i, "seed": seed, "a": [a.real, a.imag], "value": val}
    return _prop(bad is None, worst, bad)


def cone_suite(seed: int, trials: int) -> dict:
    rng = np.random.default_rng(seed)
    out = {"lp_inequality": lp_property(rng, trials)}
    out.update(holder_property(rng, min(trials, 10 ** 6)))
    out["rotation"] = rotation_property(rng, min(trials, 10 ** 5))
    out["scaling"] = scaling_property(rng, trials)
    out["monotonicity"] = monotonicity_property(rng, max(1, min(trials, 1000)))
    return out


# --- resolvent ------------------------------------------------------------

def contraction_property(seed: int, pairs: int, n: int = 64, m: float = 0.5) -> dict:
    """Worst ``||u - v|| / (||F - G|| / b0)`` over random pairs and the lambda/b0 grid."""
    rng = np.random.default_rng(seed)
    grid = make_grid(1, n, 20.0)
    coeffs = admissible_coefficients(m, 5)
    opts = SolveOptions(tol=1e-12)
    worst, bad, solves = 0.0, None, 0
    apriori = 0.0
    lap_worst = math.inf
    for i in range(pairs):
        a = coeffs[i % len(coeffs)]
        params = ConeParams(m, a)
        F = band_limited_random(grid, int(rng.integers(2 ** 31)), 8, float(rng.uniform(0.1, 3)))
        G = band_limited_random(grid, int(rng.integers(2 ** 31)), 8, float(rng.uniform(0.1, 3)))
        for lam in LAMBDAS:
            for b0 in B0S:
                u = solve_resolvent(ResolventProblem(lam, b0, params, F), opts).u
                v = solve_resolvent(ResolventProblem(lam, b0, params, G), opts).u
                solves += 2
                ratio = lp_norm(u - v, 2) / (lp_norm(F - G, 2) / b0)
                if ratio > worst:
                    worst = ratio
                    if ratio > 1 + 1e-8:
                        bad = {"pair": i, "lam": lam, "b0": b0, "a": [a.real, a.imag]}
                apriori = max(apriori, apriori_ratio(params, u, F))
                scale = h2_split_norm(u) * lp_norm(u, 2 * m) ** m
                lap_worst = min(lap_worst, laplacian_sign(params, u) / (scale or 1.0))
    return {
        "contraction": _prop(worst <= 1 + 1e-8, worst, bad, solves=solves),
        "apriori_constant": {"passed": True, "worst": apriori, "empirical_M": apriori},
        "laplacian_sign": _prop(lap_worst >= -1e-8, lap_worst),
    }


def resolvent_suite(seed: int, trials: int) -> dict:
    return contraction_property(seed, max(1, trials))


# --- evolve ---------------------------------------------------------------

def evolve_suite(seed: int, trials: int) -> dict:
    rng = np.random.default_rng(seed)
    grid = make_grid(1, 128, 20.0)
    out = {}
    # unitarity of the free flow
    worst = 0.0
    for _ in range(max(1, min(trials, 50))):
        u = band_limited_random(grid, int(rng.integers(2 ** 31)), 30, 1.0)
        dt = float(rng.uniform(0, 10))
        worst = max(worst, abs(lp_norm(linear_flow_exact(u, dt), 2) - 1.0))
    out["linear_unitary"] = _prop(worst <= 1e-13, worst)
    # dissipativity of one implicit step with f = 0
    worst = -math.inf
    for i in range(max(1, min(trials, 10))):
        a = admissible_coefficients(0.5)[i % 10]
        params = ConeParams(0.5, a)
        u = band_limited_random(grid, int(rng.integers(2 ** 31)), 10, float(rng.uniform(0.5, 2)))
        nxt = step_backward_euler(u, 0.01, None, params)
        worst = max(worst, lp_norm(nxt, 2) - lp_norm(u, 2))
    out["be_dissipative"] = _prop(worst <= 1e-12, worst)
    # zero-dispersion oracle: unit data, a = i, m = 1/2 extinguishes at t = 2
    small = make_grid(1, 8, 1.0)
    u0 = Field(small, np.ones(small.shape))
    params = ConeParams(0.5, 1j)
    res = evolve(EvolveConfig(params, u0, 0.01, 3.0, dispersion=False))
    zero = detect_extinction(res.series, 1e-12)
    zero = math.inf if zero is None else zero
    out["zero_dispersion"] = _prop(abs(zero - 2.0) <= 0.01 + 1e-12, abs(zero - 2.0))
    # gradient non-increase on an unforced run
    g2 = make_grid(1, 256, 40.0)
    res = evolve(EvolveConfig(ConeParams(0.5, 1 + 2j), gaussian(g2), 1e-3, 2.0, cadence=10,
                              track_steps=True))
    out["gradient_nonincreasing"] = _prop(res.max_grad_rise <= 1e-8, res.max_grad_rise)
    return out


# --- diagnostics ----------------------------------------------------------

def _rk4_extinction(y0, C, delta, frac=0.02, floor=1e-300):
    """Integrate ``y' = -C y^delta`` with RK4 down to ``y = floor * y0``.

    The step is a fixed fraction of the local time scale ``y^(1-delta) / C``,
    so the solver keeps pace with the non-Lipschitz approach to zero.  The
    time left below the floor is under ``floor^(1-delta)`` and is ignored.
    """
    f = lambda y: -C * max(y, 0.0) ** delta
    t, y = 0.0, y0
    while y > floor * y0:
        h = frac * y ** (1 - delta) / C
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        t, y = t + h, y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return t


def _rk4_value(y0, C, delta, t_end, h=1e-3):
    f = lambda y: -C * y ** delta
    y = y0
    for _ in range(int(round(t_end / h))):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def diagnostics_suite(seed: int, trials: int) -> dict:
    rng = np.random.default_rng(seed)
    out = {}
    worst = 0.0
    for _ in range(max(1, min(trials, 20))):
        y0, C, delta = rng.uniform(0.5, 2), rng.uniform(0.5, 3), rng.uniform(0.55, 0.9)
        ref = _rk4_extinction(y0, C, delta)
        worst = max(worst, abs(ode_comparator_bound(y0, C, delta) - ref) / ref)
    out["comparator_vs_rk4"] = _prop(worst <= 1e-8, worst)
    worst = 0.0
    for delta in (1.0, 1.25, 1.5, 2.0):
        y0, C = rng.uniform(0.5, 2), rng.uniform(0.5, 3)
        ref = _rk4_value(y0, C, delta, 10.0)
        worst = max(worst, abs(comparator_trajectory(y0, C, delta, 10.0) - ref) / ref)
    out["comparator_trajectory_vs_rk4"] = _prop(worst <= 1e-8, worst)
    # exponent classification
    ok = True
    for N in range(1, 6):
        for ell in (1, 2):
            for m in (0.1, 0.5, 0.9):
                d = delta_exponent(N, ell, m).delta
                inside = 0.5 < d < 1
                if inside != ((N == 1 and ell == 1) or (N <= 3 and ell == 2)):
                    ok = False
    out["delta_classification"] = _prop(ok, 0.0)
    # scale invariance and ensemble maximum of the GN ratio
    grid = make_grid(1, 128, 20.0)
    worst, best = 0.0, 0.0
    for _ in range(max(1, min(trials, 1000))):
        u = band_limited_random(grid, int(rng.integers(2 ** 31)), 12, 1.0)
        r = gn_ratio(u, 1, 0.5)
        c = float(rng.uniform(0.01, 100))
        worst = max(worst, abs(gn_ratio(u * c, 1, 0.5) - r) / r)
        best = max(best, r)
    out["gn_scale_invariance"] = _prop(worst <= 1e-12, worst)
    out["gn_ensemble"] = _prop(math.isfinite(best), best, empirical_constant=best)
    return out


_RUNNERS = {
    "cone": cone_suite,
    "resolvent": resolvent_suite,
    "evolve": evolve_suite,
    "diagnostics": diagnostics_suite,
}


def verify_suite(name: str, seed: int = 1, trials: int = 100) -> dict:
    """Run one suite (or ``all``); returns a JSON-ready report."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    names = SUITES if name == "all" else (name,)
    if any(n not in _RUNNERS for n in names):
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}")
    report = {"seed": seed, "trials": trials, "suites": {}}
    for n in names:
        t0 = time.perf_counter()
        props = _RUNNERS[n](seed, trials)
        report["suites"][n] = {"properties": props, "seconds": time.perf_counter() - t0,
                               "passed": all(p["passed"] for p in props.values())}
    report["passed"] = all(s["passed"] for s in report["suites"].values())
    return report
