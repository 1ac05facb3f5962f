"""Time integration of  i u_t + Lap u + a g(u) = f,  u(0) = u0.

Two schemes:

* ``backward_euler`` -- each step is one resolvent solve with ``lam = dt``,
  ``b0 = 1`` and ``F = -i u^n - dt f^{n+1}``; unconditionally dissipative.
* ``strang`` -- half nonlinear flow, full free flow, source kick, half
  nonlinear flow.  Both sub-flows are solved in closed form.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .cone import ConeParams
from .diagnostics import DiagnosticsSeries, SeriesBuilder
from .domain import Field, PeriodicGrid
from .errors import ConvergenceError, DivergenceError, DomainError
from .resolvent import ResolventProblem, SolveOptions, solve_resolvent

log = logging.getLogger(__name__)

__all__ = [
    "SourceTerm",
    "EvolveConfig",
    "EvolveResult",
    "nonlinear_flow_exact",
    "linear_flow_exact",
    "step_backward_euler",
    "step_strang",
    "source_eval",
    "evolve",
]

ENVELOPES = ("box", "linear", "sine")
FLUSH_BELOW = 1e-300
MAX_HALVINGS = 8
DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True, eq=False)
class SourceTerm:
    """Forcing ``f(t, x)``.

    kind ``zero``: no forcing.  kind ``separable``: ``envelope(t) * spatial(x)``
    with the envelope supported on ``[0, T0]`` (``box`` = 1, ``linear`` =
    ``1 - t/T0``, ``sine`` = ``sin(pi t / T0)^2``).  kind ``vanishing_profile``:
    ``spatial`` rescaled to L^2 norm ``sqrt(eps_star) (T0 - t)_+^(source_exponent/2)``.
    """

    kind: str = "zero"
    spatial: Field | None = None
    T0: float = 0.0
    eps_star: float = 0.0
    source_exponent: float = 0.0
    envelope: str = "box"

    def __post_init__(self):
        if self.kind not in ("zero", "separable", "vanishing_profile"):
            raise DomainError(f"unknown source kind {self.kind!r}")
        if self.kind == "zero":
            return
        if self.spatial is None:
            raise DomainError(f"source kind {self.kind!r} needs a spatial field")
        if not self.T0 > 0 or not math.isfinite(self.T0):
            raise DomainError("source T0 must be positive and finite")
        if self.kind == "separable" and self.envelope not in ENVELOPES:
            raise DomainError(f"envelope must be one of {ENVELOPES}, got {self.envelope!r}")
        if self.kind == "vanishing_profile":
            if not self.eps_star > 0 or not self.source_exponent > 0:
                raise DomainError("vanishing profile needs eps_star > 0 and source_exponent > 0")
            if not np.any(self.spatial.values):
                raise DomainError("vanishing profile needs a nonzero spatial shape")

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def amplitude(self, t: float) -> float:
        """Scalar factor multiplying the spatial shape at time ``t``."""
        if self.kind == "zero" or t >= self.T0 or t < 0:
            return 0.0
        if self.kind == "vanishing_profile":
            from .domain import lp_norm

            return math.sqrt(self.eps_star) * (self.T0 - t) ** (0.5 * self.source_exponent) \
                / lp_norm(self.spatial, 2)
        s = t / self.T0
        if self.envelope == "box":
            return 1.0
        if self.envelope == "linear":
            return 1.0 - s
        return math.sin(math.pi * s) ** 2

    def values_at(self, t: float) -> np.ndarray | None:
        amp = self.amplitude(t)
        if amp == 0.0:
            return None
        return amp * self.spatial.values


def source_eval(source: SourceTerm, t: float, grid: PeriodicGrid) -> Field:
    if t < 0:
        raise DomainError("source evaluated at negative time")
    vals = source.values_at(t)
    if vals is None:
        return Field.zeros(grid)
    return Field(grid, vals)


def _nl_flow(u: np.ndarray, m: float, a: complex, dt: float) -> np.ndarray:
    """Exact pointwise flow of ``i u_t + a g(u) = 0`` over ``dt``.

    With ``u = r e^{i theta}``: ``r' = -Im(a) r^m`` and ``theta' = Re(a) r^(m-1)``, so
    ``r(t)^(1-m) = r0^(1-m) - (1-m) Im(a) t`` and
    ``theta = theta0 + (Re(a)/Im(a)) log(r0/r)``.
    """
    r0 = np.abs(u)
    live = r0 > FLUSH_BELOW
    out = np.zeros_like(u)
    if not np.any(live):
        return out
    r0l = r0[live]
    s = r0l ** (1.0 - m) - (1.0 - m) * a.imag * dt
    alive = s > 0
    ratio = np.zeros_like(r0l)
    ratio[alive] = s[alive] ** (1.0 / (1.0 - m)) / r0l[alive]
    factor = ratio.astype(complex)
    if a.real != 0.0:
        factor[alive] *= np.exp(-1j * (a.real / a.imag) * np.log(ratio[alive]))
    out[live] = u[live] * factor
    return out


def nonlinear_flow_exact(params: ConeParams, u: Field, dt: float) -> Field:
    if dt < 0:
        raise DomainError("dt must be non-negative")
    return Field(u.grid, _nl_flow(u.values, params.m, params.a, dt))


def linear_flow_exact(u: Field, dt: float) -> Field:
    """Free Schrödinger flow: multiply by ``exp(-i |k|^2 dt)`` in Fourier space."""
    g = u.grid
    return Field(g, g.ifft(np.exp(-1j * g.k2 * dt) * g.fft(u.values)))


def _pointwise_implicit(v: np.ndarray, m: float, a: complex, dt: float) -> np.ndarray:
    """Solve ``u - i a dt g(u) = v`` pointwise (backward Euler without dispersion).

    ``|u| = r`` is the unique root of ``|r + c r^m| = |v|`` with ``c = -i a dt``;
    the left side is increasing because ``Re(c) = dt Im(a) > 0``.
    """
    c = -1j * a * dt
    target = np.abs(v)
    lo = np.zeros_like(target)
    hi = target.copy()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = np.abs(mid + c * mid ** m)
        big = val > target
        hi = np.where(big, mid, hi)
        lo = np.where(big, lo, mid)
        if np.all(hi - lo <= 1e-16 * np.maximum(hi, 1e-300)):
            break
    r = 0.5 * (lo + hi)
    out = np.zeros_like(v)
    nz = r > 0
    out[nz] = v[nz] / (1.0 + c * r[nz] ** (m - 1.0))
    return out


def step_backward_euler(u_n: Field, dt: float, f_next: Field | None, params: ConeParams,
                        opts: SolveOptions | None = None, dispersion: bool = True) -> Field:
    """One implicit step ``(I + dt A) u^{n+1} = u^n - i dt f^{n+1}``."""
    if not dt > 0:
        raise DomainError("dt must be positive")
    grid = u_n.grid
    rhs = u_n.values if f_next is None else u_n.values - 1j * dt * f_next.values
    if not dispersion:
        return Field(grid, _pointwise_implicit(rhs, params.m, params.a, dt))
    problem = ResolventProblem(dt, 1.0, params, Field(grid, -1j * rhs))
    return solve_resolvent(problem, opts, initial=u_n).u


def step_strang(u_n: Field, t_n: float, dt: float, source: SourceTerm, params: ConeParams,
                dispersion: bool = True) -> Field:
    if not dt > 0:
        raise DomainError("dt must be positive")
    grid = u_n.grid
    mult = np.exp(-1j * grid.k2 * dt) if dispersion else None
    return Field(grid, _strang(u_n.values, t_n, dt, source, params, grid, mult))


def _strang(u, t, dt, source, params, grid, mult):
    m, a = params.m, params.a
    u = _nl_flow(u, m, a, 0.5 * dt)
    if mult is not None:
        u = grid.ifft(mult * grid.fft(u))
    f = source.values_at(t + 0.5 * dt)
    if f is not None:
        u = u - 1j * dt * f
    return _nl_flow(u, m, a, 0.5 * dt)


@dataclass(frozen=True, eq=False)
class EvolveConfig:
    params: ConeParams
    u0: Field
    dt: float
    t_end: float
    scheme: str = "strang"
    source: SourceTerm = field(default_factory=SourceTerm)
    solve: SolveOptions = field(default_factory=SolveOptions)
    cadence: int = 1
    extinction_threshold: float = 1e-12
    extinction_records: int = 3
    stop_on_extinction: bool = True
    snapshot_times: tuple = ()
    dispersion: bool = True  # test hook: False switches the Laplacian off
    track_steps: bool = False

    def __post_init__(self):
        problems = []
        if not self.dt > 0:
            problems.append("dt must be positive")
        if not self.t_end > 0:
            problems.append("t_end must be positive")
        if self.scheme not in ("backward_euler", "strang"):
            problems.append(f"unknown scheme {self.scheme!r}")
        if self.cadence < 1:
            problems.append("cadence must be >= 1")
        if not np.all(np.isfinite(self.u0.values)):
            problems.append("initial data contains non-finite values")
        if not self.extinction_threshold > 0:
            problems.append("extinction threshold must be positive")
        if self.source.spatial is not None and not self.source.spatial.grid.same_as(self.u0.grid):
            problems.append("source and initial datum live on different grids")
        if problems:
            raise DomainError("; ".join(problems))

    @property
    def grid(self) -> PeriodicGrid:
        return self.u0.grid

    @property
    def n_steps(self) -> int:
        return int(math.ceil(self.t_end / self.dt - 1e-9))


class EvolveResult(NamedTuple):
    series: DiagnosticsSeries
    snapshots: list
    steps: int
    # largest ||u^{n+1} - u^n|| / dt and largest one-step rise of ||grad u||
    # (only filled when ``track_steps`` is set)
    max_rate: float
    max_grad_rise: float


def _source_l1_norm(source: SourceTerm, t_end: float, grid) -> float:
    if source.is_zero:
        return 0.0
    from .domain import lp_norm

    ts = np.linspace(0.0, min(t_end, source.T0), 257)
    vals = [abs(source.amplitude(t)) for t in ts]
    return float(np.trapezoid(vals, ts) * lp_norm(source.spatial, 2))


def evolve(config: EvolveConfig) -> EvolveResult:
    """Advance from 0 to ``t_end`` (or until extinction), recording diagnostics."""
    grid = config.grid
    params = config.params
    dt = config.dt
    n_steps = config.n_steps
    builder = SeriesBuilder(grid, params)
    u = config.u0.values.copy()
    mult = np.exp(-1j * grid.k2 * dt) if config.dispersion else None

    ref = math.sqrt(max(0.0, float(np.sum(np.abs(u) ** 2)) * grid.cell_volume))
    ref += _source_l1_norm(config.source, config.t_end, grid)
    snaps = sorted(float(s) for s in config.snapshot_times)
    snapshots = []
    max_rate = 0.0
    max_grad_rise = 0.0

    def take_snapshots(t):
        while snaps and snaps[0] <= t + 1e-12 * max(1.0, t):
            snaps.pop(0)
            snapshots.append((t, Field(grid, u.copy())))

    builder.record(0.0, u, config.source)
    take_snapshots(0.0)
    below = 0
    peak = builder.mass[-1]
    grad_prev = builder.gradient_norm(u) if config.track_steps else 0.0
    step = 0
    for step in range(1, n_steps + 1):
        t_prev = (step - 1) * dt
        if config.scheme == "strang":
            new = _strang(u, t_prev, dt, config.source, params, grid, mult)
        else:
            new = _be_advance(u, t_prev, dt, config, 0)
        new[np.abs(new) < FLUSH_BELOW] = 0.0
        if not np.all(np.isfinite(new)):
            raise DivergenceError(f"non-finite values at t = {step * dt:.6g}")
        if config.track_steps:
            rate = math.sqrt(float(np.sum(np.abs(new - u) ** 2)) * grid.cell_volume) / dt
            max_rate = max(max_rate, rate)
            grad = builder.gradient_norm(new)
            max_grad_rise = max(max_grad_rise, grad - grad_prev)
            grad_prev = grad
        u = new
        t = step * dt
        take_snapshots(t)
        if step % config.cadence == 0 or step == n_steps:
            builder.record(t, u, config.source)
            mass = builder.mass[-1]
            if ref > 0 and math.sqrt(mass) > DIVERGENCE_FACTOR * ref:
                raise DivergenceError(
                    f"L2 norm {math.sqrt(mass):.3e} exceeds {DIVERGENCE_FACTOR:g} x reference at t = {t:.6g}")
            peak = max(peak, mass)
            forced = not config.source.is_zero and t < config.source.T0
            if not forced and mass <= config.extinction_threshold * peak:
                below += 1
            else:
                below = 0
            if config.stop_on_extinction and below >= config.extinction_records:
                break
    return EvolveResult(builder.build(), snapshots, step, max_rate, max_grad_rise)


def _be_advance(u, t, dt, config, depth):
    grid = config.grid
    f = config.source.values_at(t + dt)
    rhs = u if f is None else u - 1j * dt * f
    if not config.dispersion:
        return _pointwise_implicit(rhs, config.params.m, config.params.a, dt)
    if not np.any(rhs):
        return np.zeros_like(u)
    problem = ResolventProblem(dt, 1.0, config.params, Field(grid, -1j * rhs))
    try:
        return solve_resolvent(problem, config.solve, initial=Field(grid, u)).u.values
    except ConvergenceError:
        if depth >= MAX_HALVINGS:
            raise
        log.info("resolvent failed at t=%.6g, halving dt to %.3g", t, dt / 2)
        half = _be_advance(u, t, 0.5 * dt, config, depth + 1)
        return _be_advance(half, t + 0.5 * dt, 0.5 * dt, config, depth + 1)
