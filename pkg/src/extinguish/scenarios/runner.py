"""Run a configured scenario, evaluate its check and write the artifacts.

Per run directory:

* ``series.csv``: columns t, mass, lmp1, h1, h2, source_work, tail_mass (``%.17g``)
* ``summary.json``: config_hash, t_extinction, t_star_bound, delta, c_emp,
  decay_rate, r2, flags and a few more documented in the README
* ``snapshot_NNN.bin``: fields at the requested snapshot times
* ``plot_series.py``: a small script that plots the CSV with matplotlib
"""
from __future__ import annotations

import io
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..cone import g_apply
from ..diagnostics import (
    COLUMNS,
    DiagnosticsSeries,
    delta_exponent,
    detect_extinction,
    effective_delta,
    fit_decay,
    fit_extinction_constant,
    mass_balance_residual,
    predicted_power_exponent,
)
from ..domain import Field, band_limited_random, laplacian, lp_norm, write_field
from ..errors import InsufficientDataError
from ..evolve import SourceTerm, evolve
from .config import RunConfig

log = logging.getLogger(__name__)

__all__ = ["RunSummary", "run_scenario", "run_sweep", "write_series_csv", "read_series_csv",
           "max_threads"]

POWER_TOLERANCE = 0.25
UT_SLACK = 1.10
TAIL_LIMIT = 1e-10


@dataclass
class RunSummary:
    scenario: str
    config_hash: str
    wall_clock: float
    check: str
    steps: int = 0
    t_extinction: float | None = None
    t_star_bound: float | None = None
    delta: float | None = None
    c_emp: float | None = None
    decay_rate: float | None = None
    r2: float | None = None
    predicted_exponent: float | None = None
    max_mass_residual: float | None = None
    max_tail_mass: float | None = None
    worst_contraction_ratio: float | None = None
    max_grad_rise: float | None = None
    max_rate: float | None = None
    rate_bound: float | None = None
    final_mass_ratio: float | None = None
    flags: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.flags.values())

    def to_json(self) -> str:
        d = asdict(self)
        d["passed"] = self.passed
        return json.dumps(_finite(d), indent=2, sort_keys=True)


def _finite(obj):
    # JSON has no infinity; write it as a string so the file stays standard
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    return obj


def max_threads() -> int:
    """Parallelism cap from ``EXTINGUISH_THREADS`` (default: CPU count)."""
    cpus = os.cpu_count() or 1
    try:
        cap = int(os.environ.get("EXTINGUISH_THREADS", "0"))
    except ValueError:
        cap = 0
    return max(1, min(cap, cpus)) if cap > 0 else cpus


def write_series_csv(path, series: DiagnosticsSeries) -> None:
    buf = io.StringIO()
    buf.write(",".join(COLUMNS) + "\n")
    for row in zip(*series.columns()):
        buf.write(",".join("%.17g" % v for v in row) + "\n")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def read_series_csv(path) -> DiagnosticsSeries:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.size == 0:
        data = np.zeros((0, len(COLUMNS)))
    return DiagnosticsSeries(*data.T)


_PLOT_SCRIPT = '''"""Plot the diagnostics of one run: python3 plot_series.py [series.csv]"""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "series.csv"
with open(path) as fh:
    rows = list(csv.DictReader(fh))
t = [float(r["t"]) for r in rows]
fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
for ax, key in zip(axes.flat, ["mass", "lmp1", "h1", "tail_mass"]):
    vals = [float(r[key]) for r in rows]
    pos = [(ti, v) for ti, v in zip(t, vals) if v > 0]
    if pos:
        ax.semilogy(*zip(*pos))
    ax.set_title(key)
    ax.set_xlabel("t")
fig.tight_layout()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=120)
'''


def _reference_mass(series: DiagnosticsSeries, forced: bool) -> float:
    m0 = float(series.mass[0])
    if forced or m0 <= 0:
        return float(series.mass.max())
    return m0


def _fit_window(cfg: RunConfig, series: DiagnosticsSeries, ref: float):
    # default: drop the first 10% of live records, stop before the extinction threshold
    live = np.nonzero(series.mass > cfg.extinction_threshold * ref)[0]
    if len(live) == 0:
        return 0.0, 0.0
    last = live[-1]
    start = int(0.1 * (last + 1))
    t0 = cfg.fit_start if cfg.fit_start is not None else float(series.times[start])
    t1 = cfg.fit_end if cfg.fit_end is not None else float(series.times[last])
    return t0, t1


def _source_variation(source: SourceTerm, t_end: float) -> float:
    """``int_0^t_end ||f'(t)|| dt`` for separable sources (jumps included)."""
    if source.is_zero:
        return 0.0
    ts = np.linspace(0.0, t_end, 20001)
    amps = np.array([source.amplitude(t) for t in ts])
    return float(np.sum(np.abs(np.diff(amps)))) * lp_norm(source.spatial, 2)


def _source_l1(source: SourceTerm, t_end: float) -> float:
    if source.is_zero:
        return 0.0
    ts = np.linspace(0.0, min(t_end, source.T0), 20001)
    amps = np.abs([source.amplitude(t) for t in ts])
    return float(np.trapezoid(amps, ts)) * lp_norm(source.spatial, 2)


def run_scenario(cfg: RunConfig, write: bool = True) -> RunSummary:
    """Evolve, evaluate the configured check and (optionally) write artifacts."""
    start = time.perf_counter()
    grid = cfg.grid()
    params = cfg.params()
    u0 = cfg.initial(grid)
    source = cfg.source(grid)
    forced = not source.is_zero
    track = cfg.check in ("gradient", "ut_bound")
    snaps = tuple(cfg.snapshot_times)
    if cfg.check == "contraction":
        # stepping with stop_on_extinction off keeps both record grids identical
        record_times = tuple(k * cfg.cadence * cfg.dt for k in range(int(cfg.t_end / (cfg.cadence * cfg.dt)) + 1))
        ev = cfg.evolve_config(u0, source, snapshot_times=record_times, stop_on_extinction=False)
    else:
        ev = cfg.evolve_config(u0, source, track_steps=track)
    result = evolve(ev)
    series = result.series
    summary = RunSummary(cfg.scenario, cfg.config_hash(), 0.0, cfg.check, steps=result.steps)
    ref = _reference_mass(series, forced)
    summary.t_extinction = detect_extinction(series, cfg.extinction_threshold, reference=ref)
    summary.max_mass_residual = float(np.max(np.abs(mass_balance_residual(series, params)), initial=0.0))
    summary.max_tail_mass = float(series.tail_mass.max(initial=0.0))

    check = cfg.check
    flags = summary.flags
    if check in ("extinction", "forced"):
        _check_extinction(cfg, series, summary, source, params, ref)
    elif check in ("decay_exponential", "decay_power"):
        _check_decay(cfg, series, summary, ref)
    elif check == "weak_limit":
        m0 = float(series.mass[0])
        ratio = float(series.mass[-1]) / m0 if m0 > 0 else 0.0
        summary.final_mass_ratio = ratio
        flags["vanishes"] = ratio <= cfg.weak_threshold
    elif check == "contraction":
        _check_contraction(cfg, summary, u0, source, result.snapshots)
    elif check == "gradient":
        scale = max(1.0, float(series.h1[0]))
        summary.max_grad_rise = result.max_grad_rise
        flags["gradient_nonincreasing"] = result.max_grad_rise <= cfg.tolerance * scale
    elif check == "ut_bound":
        f0 = source.values_at(0.0)
        start_rate = laplacian(u0).values + params.a * g_apply(params.m, u0.values)
        if f0 is not None:
            start_rate = start_rate - f0
        bound = lp_norm(Field(grid, start_rate), 2) + _source_variation(source, cfg.t_end)
        summary.max_rate, summary.rate_bound = result.max_rate, bound
        flags["ut_bound"] = result.max_rate <= UT_SLACK * bound
    if not forced and check != "contraction":
        flags["mass_monotone"] = bool(np.all(np.diff(series.mass) <= 1e-12 * series.mass[0]))

    summary.wall_clock = time.perf_counter() - start
    if write:
        out = Path(cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        write_series_csv(out / "series.csv", series)
        (out / "summary.json").write_text(summary.to_json() + "\n", encoding="utf-8")
        (out / "plot_series.py").write_text(_PLOT_SCRIPT, encoding="utf-8")
        if snaps:
            for i, (t, u) in enumerate(result.snapshots):
                write_field(out / f"snapshot_{i:03d}.bin", u)
    return summary


def _check_extinction(cfg, series, summary, source, params, ref):
    flags = summary.flags
    delta = delta_exponent(cfg.dims, cfg.ell, cfg.m).delta
    summary.delta = delta
    flags["extinct"] = summary.t_extinction is not None
    if cfg.check == "forced":
        spacing = cfg.cadence * cfg.dt
        flags["extinct_by_T0"] = (summary.t_extinction is not None
                                  and summary.t_extinction <= source.T0 + spacing + 1e-12)
        return
    from_time = source.T0 if not source.is_zero else 0.0
    try:
        fit = fit_extinction_constant(series, delta, params, from_time, cfg.extinction_threshold)
    except InsufficientDataError as exc:
        summary.notes.append(str(exc))
        flags["bound"] = False
        return
    summary.c_emp, summary.t_star_bound = fit.C_emp, fit.T_star_bound
    flags["bound"] = summary.t_extinction is not None and summary.t_extinction <= fit.T_star_bound
    if cfg.dispersion:
        flags["tail_mass"] = summary.max_tail_mass < TAIL_LIMIT


def _check_decay(cfg, series, summary, ref):
    flags = summary.flags
    t0, t1 = _fit_window(cfg, series, ref)
    window_series = series.window(t0, t1)
    try:
        if cfg.check == "decay_exponential":
            fit = fit_decay(window_series, "exponential", (t0, t1))
            summary.decay_rate, summary.r2 = fit.rate_or_exponent, fit.r2
            flags["exponential_r2"] = fit.r2 > 0.99
        else:
            fit = fit_decay(window_series, "power", (t0, t1))
            # mass exponent is twice the L2-norm exponent
            expo = 0.5 * fit.rate_or_exponent
            pred = predicted_power_exponent(cfg.dims, cfg.ell, cfg.m)
            summary.decay_rate, summary.r2, summary.predicted_exponent = expo, fit.r2, pred
            flags["power_exponent"] = abs(expo - pred) <= POWER_TOLERANCE * pred
    except InsufficientDataError as exc:
        summary.notes.append(str(exc))
        flags["decay_fit"] = False
    try:
        eff = effective_delta(window_series)
        summary.notes.append(f"effective comparator exponent delta = {eff.rate_or_exponent:.4f} "
                             f"(r2 {eff.r2:.4f}) from log(-dy/dt) against log y")
    except InsufficientDataError:
        pass
    if summary.t_extinction is not None:
        summary.notes.append(
            f"mass fell below {cfg.extinction_threshold:g} x initial at t = {summary.t_extinction:.6g}")


def _check_contraction(cfg, summary, u0, source, snapshots):
    grid = u0.grid
    scale = lp_norm(u0, 2) or 1.0
    bump = band_limited_random(grid, cfg.seed, min(4, grid.n // 2 - 1), cfg.perturbation * scale)
    v0 = u0 + bump
    if source.is_zero:
        src_v = source
    else:
        src_v = SourceTerm(source.kind, source.spatial * (1.0 + cfg.perturbation), source.T0,
                           source.eps_star, source.source_exponent, source.envelope)
    record_times = tuple(t for t, _ in snapshots)
    other = evolve(cfg.evolve_config(v0, src_v, snapshot_times=record_times, stop_on_extinction=False))
    worst = 0.0
    ok = True
    gap0 = lp_norm(v0 - u0, 2)
    for (t, u), (_, v) in zip(snapshots, other.snapshots):
        src_gap = 0.0 if source.is_zero else cfg.perturbation * _source_l1(source, t)
        bound = gap0 + src_gap
        dist = lp_norm(u - v, 2)
        worst = max(worst, dist / bound if bound > 0 else 0.0)
        if dist > bound + cfg.tolerance * max(1.0, scale):
            ok = False
    summary.worst_contraction_ratio = worst
    summary.flags["contraction"] = ok and len(snapshots) == len(other.snapshots) > 1


def run_sweep(cfg: RunConfig, key: str, values, threads: int | None = None) -> list:
    """Run ``cfg`` once per value of ``key`` in parallel; one directory per run."""
    from .config import _ATTR_PARSER, _ATTR_SECTION

    attr = None
    for name, (sec, k) in _ATTR_SECTION.items():
        if key in (k, f"{sec}.{k}", name):
            attr = name
            break
    if attr is None:
        raise KeyError(f"unknown sweep key {key!r}")
    parser = _ATTR_PARSER[attr]
    runs = []
    for raw in values:
        val = parser(raw) if isinstance(raw, str) else raw
        label = f"{attr}={raw}"
        runs.append(cfg.replace(**{attr: val}, output=str(Path(cfg.output) / label)))
    from ..errors import ConfigError

    bad = [f"{r.output}: {p}" for r in runs for p in r.problems()]
    if bad:
        raise ConfigError(bad)
    workers = min(threads or max_threads(), len(runs))
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return list(pool.map(run_scenario, runs))
