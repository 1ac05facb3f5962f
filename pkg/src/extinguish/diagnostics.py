"""Time series of norms, extinction detection, comparator bounds and decay fits.

The mass ``y(t) = ||u(t)||_2^2`` obeys

    y'/2 + Im(a) ||u||_{m+1}^{m+1} = Im <f, u>,

and a Gagliardo-Nirenberg bound turns this into ``y' + C y^delta <= 0``.
``delta < 1`` forces extinction, ``delta = 1`` exponential decay and
``delta > 1`` algebraic decay.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .cone import ConeParams
from .domain import Field, PeriodicGrid, lp_norm, sobolev_norm
from .errors import DomainError, InsufficientDataError

__all__ = [
    "COLUMNS",
    "DiagnosticsSeries",
    "SeriesBuilder",
    "ExtinctionReport",
    "ExtinctionFit",
    "DecayFit",
    "delta_exponent",
    "interpolation_theta",
    "ode_comparator_bound",
    "comparator_trajectory",
    "fit_extinction_constant",
    "detect_extinction",
    "fit_decay",
    "mass_balance_residual",
    "effective_delta",
    "gn_ratio",
    "predicted_power_exponent",
]

COLUMNS = ("t", "mass", "lmp1", "h1", "h2", "source_work", "tail_mass")


@dataclass(frozen=True, eq=False)
class DiagnosticsSeries:
    times: np.ndarray
    mass: np.ndarray
    lmp1: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    source_work: np.ndarray
    tail_mass: np.ndarray

    def __post_init__(self):
        for name in COLUMNS[1:] + ("times",):
            key = "times" if name == "t" else name
            object.__setattr__(self, key, np.asarray(getattr(self, key), dtype=float))
        n = len(self.times)
        if any(len(getattr(self, c)) != n for c in COLUMNS[1:]):
            raise DomainError("series columns differ in length")
        if n > 1 and np.any(np.diff(self.times) <= 0):
            raise DomainError("series times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def columns(self):
        return [self.times, self.mass, self.lmp1, self.h1, self.h2, self.source_work, self.tail_mass]

    def window(self, t0: float, t1: float = math.inf) -> "DiagnosticsSeries":
        keep = (self.times >= t0) & (self.times <= t1)
        return DiagnosticsSeries(*[c[keep] for c in self.columns()])


class SeriesBuilder:
    """Accumulates one record per call; used by the time stepper."""

    def __init__(self, grid: PeriodicGrid, params: ConeParams, tail_fraction: float = 0.1):
        self.grid = grid
        self.params = params
        self.rows = {c: [] for c in COLUMNS}
        edge = np.abs(grid.coords) >= (1.0 - tail_fraction) * 0.5 * grid.box_length
        mask = np.zeros(grid.shape, dtype=bool)
        for ax in range(grid.dims):
            mask |= grid.axis_view(edge, ax)
        self._tail = mask

    @property
    def mass(self):
        return self.rows["mass"]

    def gradient_norm(self, u: np.ndarray) -> float:
        g = self.grid
        uh = g.fft(u)
        return math.sqrt(float(np.sum(g.k2 * np.abs(uh) ** 2)) * g.cell_volume / g.size)

    def record(self, t: float, u: np.ndarray, source=None) -> None:
        g = self.grid
        vol = g.cell_volume
        dens = np.abs(u) ** 2
        mass = float(dens.sum()) * vol
        lmp1 = float(np.sum(np.abs(u) ** (self.params.m + 1.0))) * vol
        uh2 = np.abs(g.fft(u)) ** 2
        w = 1.0 + g.k2
        h1 = math.sqrt(float(np.sum(w * uh2)) * vol / g.size)
        h2 = math.sqrt(float(np.sum(w * w * uh2)) * vol / g.size)
        work = 0.0
        if source is not None:
            f = source.values_at(t)
            if f is not None:
                work = float(np.imag(np.vdot(u, f))) * vol
        total = float(dens.sum())
        tail = float(dens[self._tail].sum()) / total if total > 0 else 0.0
        for key, val in zip(COLUMNS, (t, mass, lmp1, h1, h2, work, tail)):
            self.rows[key].append(val)

    def build(self) -> DiagnosticsSeries:
        r = self.rows
        return DiagnosticsSeries(r["t"], r["mass"], r["lmp1"], r["h1"], r["h2"],
                                 r["source_work"], r["tail_mass"])


@dataclass(frozen=True)
class ExtinctionReport:
    T_num: float | None
    delta: float
    C_emp: float
    T_star_bound: float
    satisfied: bool


class ExtinctionFit(NamedTuple):
    C_emp: float
    T_star_bound: float


class DecayFit(NamedTuple):
    rate_or_exponent: float
    r2: float
    scale: float = 1.0


class DeltaExponent(NamedTuple):
    delta: float
    source_exponent: float


def delta_exponent(N: int, ell: int, m: float) -> DeltaExponent:
    """``delta = ((2l+N) + m(2l-N)) / (4l)`` and ``(2 delta - 1)/(1 - delta)``.

    ``source_exponent`` is ``inf`` when ``delta >= 1`` (no vanishing profile).
    """
    if N < 1 or ell not in (1, 2) or not 0 < m < 1:
        raise DomainError(f"need N >= 1, ell in (1, 2), m in (0, 1); got {N}, {ell}, {m}")
    delta = ((2 * ell + N) + m * (2 * ell - N)) / (4 * ell)
    if delta >= 1:
        return DeltaExponent(delta, math.inf)
    return DeltaExponent(delta, (2 * delta - 1) / (1 - delta))


def interpolation_theta(N: int, ell: int, m: float) -> float:
    """Interpolation parameter recovered from ``delta = (m+1) / (2 theta)``."""
    return (m + 1) / (2 * delta_exponent(N, ell, m).delta)


def predicted_power_exponent(N: int, ell: int, m: float) -> float:
    """Algebraic decay exponent of ``||u||_2`` when ``N > 2 ell``."""
    if N <= 2 * ell:
        raise DomainError("algebraic decay needs N > 2 ell")
    return 2 * ell / ((1 - m) * (N - 2 * ell))


def ode_comparator_bound(y0: float, C: float, delta: float) -> float:
    """Zero crossing of the exact solution of ``y' = -C y^delta``.

    Finite only for ``delta < 1``: ``y0^(1-delta) / ((1-delta) C)``.
    """
    if not delta > 0:
        raise DomainError("delta must be positive")
    if y0 <= 0:
        return 0.0
    if not C > 0:
        raise DomainError("C must be positive")
    if delta >= 1:
        return math.inf
    return y0 ** (1 - delta) / ((1 - delta) * C)


def comparator_trajectory(y0: float, C: float, delta: float, t):
    """Exact solution of ``y' = -C y^delta``, ``y(0) = y0``, evaluated at ``t``.

    ``delta < 1``: ``(y0^(1-delta) - (1-delta) C t)_+^(1/(1-delta))``;
    ``delta = 1``: ``y0 exp(-C t)``;
    ``delta > 1``: ``y0 (1 + (delta-1) C y0^(delta-1) t)^(-1/(delta-1))``.
    """
    t = np.asarray(t, dtype=float)
    if delta < 1:
        base = np.maximum(y0 ** (1 - delta) - (1 - delta) * C * t, 0.0)
        out = base ** (1 / (1 - delta))
    elif delta == 1:
        out = y0 * np.exp(-C * t)
    else:
        out = y0 * (1 + (delta - 1) * C * y0 ** (delta - 1) * t) ** (-1 / (delta - 1))
    return float(out) if out.ndim == 0 else out


def fit_extinction_constant(series: DiagnosticsSeries, delta: float, params: ConeParams,
                            from_time: float = 0.0, threshold: float = 1e-12) -> ExtinctionFit:
    """Sharpest ``C`` with ``2 Im(a) lmp1 >= C mass^delta`` along the recorded trajectory.

    Only records at or after ``from_time`` with mass above ``threshold * mass(0)``
    enter.  The bound starts the comparator at the first such record.
    """
    ref = series.mass[0] if series.mass[0] > 0 else float(np.max(series.mass, initial=0.0))
    keep = (series.times >= from_time) & (series.mass > threshold * ref)
    if keep.sum() < 3:
        raise InsufficientDataError("need at least 3 records above threshold after from_time")
    y = series.mass[keep]
    t0 = float(series.times[keep][0])
    ratio = 2.0 * params.a.imag * series.lmp1[keep] / y ** delta
    c_emp = float(ratio.min())
    if c_emp <= 0:
        return ExtinctionFit(0.0, math.inf)
    return ExtinctionFit(c_emp, t0 + ode_comparator_bound(float(y[0]), c_emp, delta))


def detect_extinction(series: DiagnosticsSeries, rel_threshold: float,
                      reference: float | None = None) -> float | None:
    """Earliest record time after which mass stays ``<= rel_threshold * reference``.

    ``reference`` defaults to the initial mass (the peak mass if that is 0).
    """
    if not rel_threshold > 0:
        raise DomainError("threshold must be positive")
    mass = series.mass
    if len(mass) == 0:
        return None
    if reference is None:
        reference = mass[0] if mass[0] > 0 else float(mass.max())
    below = mass <= rel_threshold * reference
    if not below[-1]:
        return None
    idx = len(mass) - 1
    while idx > 0 and below[idx - 1]:
        idx -= 1
    return float(series.times[idx])


def _linfit(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), r2


def fit_decay(series: DiagnosticsSeries, kind: str, window: tuple | None = None,
              scale: float | None = None) -> DecayFit:
    """Least-squares decay fit of the mass over ``window``.

    ``exponential``: ``log y`` against ``t``; returns the decay rate.
    ``power``: ``log y`` against ``log(1 + scale (t - t0))``, ``t0`` the window
    start; returns the exponent.  Without ``scale`` the scale maximizing r^2
    is searched on a log grid.  Default window drops the first 10% of records.
    """
    if kind not in ("exponential", "power"):
        raise DomainError(f"kind must be exponential or power, got {kind!r}")
    t, y = series.times, series.mass
    if window is None:
        start = int(0.1 * len(t))
        keep = np.zeros(len(t), bool)
        keep[start:] = True
    else:
        keep = (t >= window[0]) & (t <= window[1])
    keep &= y > 0
    if keep.sum() < 5:
        raise InsufficientDataError("need at least 5 positive records in the window")
    t, logy = t[keep], np.log(y[keep])
    if kind == "exponential":
        slope, r2 = _linfit(t, logy)
        return DecayFit(-slope, r2)
    t0 = t[0]
    if scale is not None:
        slope, r2 = _linfit(np.log1p(scale * (t - t0)), logy)
        return DecayFit(-slope, r2, scale)

    def loss(logc):
        return 1.0 - _linfit(np.log1p(math.exp(logc) * (t - t0)), logy)[1]

    span = max(t[-1] - t0, 1e-300)
    lo, hi = math.log(1e-3 / span), math.log(1e6 / span)
    grid = np.linspace(lo, hi, 91)
    best = grid[int(np.argmin([loss(g) for g in grid]))]
    res = minimize_scalar(loss, bounds=(max(lo, best - 0.2), min(hi, best + 0.2)),
                          method="bounded", options={"xatol": 1e-10})
    c = math.exp(res.x)
    slope, r2 = _linfit(np.log1p(c * (t - t0)), logy)
    return DecayFit(-slope, r2, c)


def effective_delta(series: DiagnosticsSeries, window: tuple | None = None) -> DecayFit:
    """Slope of ``log(-y')`` against ``log y``: the exponent in ``y' = -C y^delta``.

    ``y'`` is the centred difference of the mass series; records with
    non-decreasing mass are skipped.  Returns ``(delta, r2)``.
    """
    t, y = series.times, series.mass
    if window is not None:
        keep = (t >= window[0]) & (t <= window[1])
        t, y = t[keep], y[keep]
    if len(t) < 3:
        raise InsufficientDataError("need at least 3 records")
    dy = np.gradient(y, t)
    ok = (dy < 0) & (y > 0)
    if ok.sum() < 3:
        raise InsufficientDataError("need at least 3 strictly decaying records")
    slope, r2 = _linfit(np.log(y[ok]), np.log(-dy[ok]))
    return DecayFit(slope, r2)


def mass_balance_residual(series: DiagnosticsSeries, params: ConeParams) -> np.ndarray:
    """Per-interval defect of the mass identity, as a rate.

    For each record interval of length ``dt``:
    ``[(y1 - y0)/2 + dt Im(a) (l0 + l1)/2 - dt (s0 + s1)/2] / dt``.
    """
    t = series.times
    if len(t) < 2:
        return np.zeros(0)
    dt = np.diff(t)
    dy = np.diff(series.mass)
    lavg = 0.5 * (series.lmp1[1:] + series.lmp1[:-1])
    savg = 0.5 * (series.source_work[1:] + series.source_work[:-1])
    return (0.5 * dy + dt * params.a.imag * lavg - dt * savg) / dt


def gn_ratio(u: Field, ell: int, m: float) -> float:
    """``||u||_2^p / (||u||_{H^l}^{N(1-m)/(2l)} ||u||_{m+1}^{m+1})`` with ``p = 2 delta``.

    Scale invariant; its supremum is the interpolation constant.
    """
    N = u.grid.dims
    l2 = lp_norm(u, 2)
    if not l2 > 1e-100:
        raise DomainError("gn_ratio is undefined for a (near-)zero field")
    hs = sobolev_norm(u, ell)
    lq = lp_norm(u, m + 1)
    # normalize first so that large exponents cannot under/overflow
    hs_n, lq_n = hs / l2, lq / l2
    num_exp = ((2 * ell + N) + m * (2 * ell - N)) / (2 * ell)
    den_a, den_b = N * (1 - m) / (2 * ell), m + 1
    assert abs(num_exp - den_a - den_b) < 1e-12
    den = hs_n ** den_a * lq_n ** den_b
    if not den > 0 or not math.isfinite(den):
        raise DomainError("gn_ratio denominator degenerate")
    return float(1.0 / den)
