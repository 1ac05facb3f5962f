"""Line-oriented run configuration.

Format::

    # comment
    [section]
    key = value

Every violation (syntax, unknown key, bad value, failed invariant) is
collected and reported together, with line numbers where they apply.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from ..cone import ConeParams, cone_contains
from ..diagnostics import delta_exponent
from ..domain import DEFAULT_POINT_BUDGET, Field, PeriodicGrid, band_limited_random, gaussian, make_grid
from ..errors import ConfigError, DomainError
from ..evolve import EvolveConfig, SourceTerm
from ..resolvent import SolveOptions

__all__ = ["RunConfig", "parse_config", "format_config", "CHECKS"]

CHECKS = ("none", "extinction", "forced", "decay_exponential", "decay_power",
          "weak_limit", "contraction", "gradient", "ut_bound")
INITIAL_KINDS = ("gaussian", "band_limited", "constant", "zero")


def _complex(text: str) -> complex:
    # "re,im" or a Python complex literal such as "-1+2j"
    if "," in text:
        re_, im_ = text.split(",")
        return complex(float(re_), float(im_))
    return complex(text.replace("i", "j"))


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _opt_float(text: str):
    return None if text.lower() in ("", "none") else float(text)


# section -> key -> (attribute, parser)
_SCHEMA = {
    "run": {
        "scenario": ("scenario", str),
        "output": ("output", str),
        "seed": ("seed", int),
    },
    "equation": {
        "m": ("m", float),
        "a": ("a", _complex),
    },
    "grid": {
        "dims": ("dims", int),
        "n": ("n", int),
        "box_length": ("box_length", float),
        "budget": ("budget", int),
    },
    "initial": {
        "kind": ("initial_kind", str),
        "amplitude": ("initial_amplitude", float),
        "width": ("initial_width", float),
        "kmax": ("initial_kmax", int),
    },
    "source": {
        "kind": ("source_kind", str),
        "amplitude": ("source_amplitude", float),
        "width": ("source_width", float),
        "T0": ("source_T0", float),
        "eps_star": ("eps_star", float),
        "exponent": ("source_exponent", _opt_float),
        "envelope": ("envelope", str),
    },
    "time": {
        "scheme": ("scheme", str),
        "dt": ("dt", float),
        "t_end": ("t_end", float),
        "cadence": ("cadence", int),
        "snapshot_times": ("snapshot_times", _floats),
        "extinction_threshold": ("extinction_threshold", float),
        "stop_on_extinction": ("stop_on_extinction", _bool),
        "dispersion": ("dispersion", _bool),
    },
    "solve": {
        "tol": ("tol", float),
        "max_iter": ("max_iter", int),
        "relaxation": ("relaxation", float),
        "epsilon_reg": ("epsilon_reg", float),
        "mode": ("mode", str),
    },
    "analysis": {
        "check": ("check", str),
        "ell": ("ell", int),
        "fit_start": ("fit_start", _opt_float),
        "fit_end": ("fit_end", _opt_float),
        "weak_threshold": ("weak_threshold", float),
        "perturbation": ("perturbation", float),
        "tolerance": ("tolerance", float),
    },
}


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "custom"
    output: str = "runs/custom"
    seed: int = 0
    m: float = 0.5
    a: complex = 1j
    dims: int = 1
    n: int = 256
    box_length: float = 40.0
    budget: int = DEFAULT_POINT_BUDGET
    initial_kind: str = "gaussian"
    initial_amplitude: float = 1.0
    initial_width: float = 1.0
    initial_kmax: int = 2
    source_kind: str = "zero"
    source_amplitude: float = 1.0
    source_width: float = 1.0
    source_T0: float = 0.0
    eps_star: float = 0.0
    source_exponent: float | None = None
    envelope: str = "box"
    scheme: str = "strang"
    dt: float = 1e-3
    t_end: float = 1.0
    cadence: int = 1
    snapshot_times: tuple = ()
    extinction_threshold: float = 1e-12
    stop_on_extinction: bool = True
    dispersion: bool = True
    tol: float = 1e-10
    max_iter: int = 500
    relaxation: float = 1.0
    epsilon_reg: float = 1e-12
    mode: str = "newton"
    check: str = "none"
    ell: int = 1
    fit_start: float | None = None
    fit_end: float | None = None
    weak_threshold: float = 1e-6
    perturbation: float = 1e-3
    tolerance: float = 1e-8

    def problems(self) -> list:
        """Every violated invariant, as human-readable messages."""
        out = []
        try:
            if not cone_contains(self.m, self.a):
                out.append(
                    f"a = {self.a} violates the cone condition for m = {self.m}: need Im(a) > 0 "
                    "and 2*sqrt(m)*Im(a) >= (1-m)*|Re(a)| (strict when Re(a) >= 0)")
        except DomainError as exc:
            out.append(f"m must lie in (0,1): {exc}")
        try:
            make_grid(self.dims, self.n, self.box_length, budget=self.budget)
        except DomainError as exc:
            out.append(str(exc))
        if self.initial_kind not in INITIAL_KINDS:
            out.append(f"initial kind must be one of {INITIAL_KINDS}, got {self.initial_kind!r}")
        if self.initial_kind == "band_limited" and not 0 <= self.initial_kmax < self.n // 2:
            out.append("initial kmax must lie in [0, n/2)")
        if self.source_kind not in ("zero", "separable", "vanishing_profile"):
            out.append(f"unknown source kind {self.source_kind!r}")
        elif self.source_kind != "zero":
            if not self.source_T0 > 0:
                out.append("source T0 must be positive")
            if self.source_kind == "vanishing_profile" and not self.eps_star > 0:
                out.append("eps_star must be positive for a vanishing profile")
            if self.source_kind == "vanishing_profile" and self.source_exponent is None:
                try:
                    if not math.isfinite(delta_exponent(self.dims, self.ell, self.m).source_exponent):
                        out.append("no vanishing-profile exponent exists when delta >= 1; set exponent")
                except DomainError as exc:
                    out.append(str(exc))
        if self.scheme not in ("strang", "backward_euler"):
            out.append(f"scheme must be strang or backward_euler, got {self.scheme!r}")
        if not self.dt > 0:
            out.append("dt must be positive")
        if not self.t_end > 0:
            out.append("t_end must be positive")
        if self.cadence < 1:
            out.append("cadence must be >= 1")
        if not self.extinction_threshold > 0:
            out.append("extinction_threshold must be positive")
        if not self.tol > 0 or self.max_iter < 1:
            out.append("solver needs tol > 0 and max_iter >= 1")
        if not 0 < self.relaxation <= 1:
            out.append("relaxation must lie in (0, 1]")
        if self.mode not in ("picard", "newton"):
            out.append(f"solve mode must be picard or newton, got {self.mode!r}")
        if self.check not in CHECKS:
            out.append(f"check must be one of {CHECKS}, got {self.check!r}")
        if self.ell not in (1, 2):
            out.append("ell must be 1 or 2")
        return out

    # --- builders -----------------------------------------------------

    def params(self) -> ConeParams:
        return ConeParams(self.m, self.a)

    def grid(self) -> PeriodicGrid:
        return make_grid(self.dims, self.n, self.box_length, budget=self.budget)

    def initial(self, grid: PeriodicGrid | None = None) -> Field:
        grid = grid or self.grid()
        if self.initial_kind == "gaussian":
            return gaussian(grid, self.initial_amplitude, self.initial_width)
        if self.initial_kind == "band_limited":
            return band_limited_random(grid, self.seed, self.initial_kmax, self.initial_amplitude)
        if self.initial_kind == "constant":
            return Field(grid, np.full(grid.shape, self.initial_amplitude, dtype=complex))
        return Field.zeros(grid)

    def source(self, grid: PeriodicGrid | None = None) -> SourceTerm:
        if self.source_kind == "zero":
            return SourceTerm()
        grid = grid or self.grid()
        shape = gaussian(grid, self.source_amplitude, self.source_width)
        if self.source_kind == "separable":
            return SourceTerm("separable", shape, self.source_T0, envelope=self.envelope)
        expo = self.source_exponent
        if expo is None:
            expo = delta_exponent(self.dims, self.ell, self.m).source_exponent
        return SourceTerm("vanishing_profile", shape, self.source_T0, self.eps_star, expo)

    def solve_options(self) -> SolveOptions:
        return SolveOptions(self.tol, self.max_iter, self.relaxation, self.epsilon_reg, self.mode)

    def evolve_config(self, u0: Field | None = None, source: SourceTerm | None = None,
                      **overrides) -> EvolveConfig:
        grid = self.grid()
        kw = dict(
            params=self.params(),
            u0=u0 if u0 is not None else self.initial(grid),
            dt=self.dt,
            t_end=self.t_end,
            scheme=self.scheme,
            source=source if source is not None else self.source(grid),
            solve=self.solve_options(),
            cadence=self.cadence,
            extinction_threshold=self.extinction_threshold,
            stop_on_extinction=self.stop_on_extinction,
            snapshot_times=tuple(self.snapshot_times),
            dispersion=self.dispersion,
        )
        kw.update(overrides)
        return EvolveConfig(**kw)

    def canonical(self) -> dict:
        d = asdict(self)
        d["a"] = [self.a.real, self.a.imag]
        d["snapshot_times"] = list(self.snapshot_times)
        return d

    def config_hash(self) -> str:
        # output directory does not change the physics
        d = self.canonical()
        d.pop("output")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def replace(self, **changes) -> "RunConfig":
        return replace(self, **changes)


_ATTR_PARSER = {attr: parser for sec in _SCHEMA.values() for attr, parser in sec.values()}
_ATTR_SECTION = {attr: (sec, key) for sec, keys in _SCHEMA.items() for key, (attr, _) in keys.items()}


def parse_config(text: str, validate: bool = True) -> RunConfig:
    """Parse and validate; raises ConfigError listing every problem."""
    problems = []
    values = {}
    seen = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                problems.append(f"line {lineno}: malformed section header {raw.strip()!r}")
                continue
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                problems.append(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            problems.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        if len(val) >= 2 and val[0] == val[-1] and val[0] in "'\"":
            val = val[1:-1]
        if section is None:
            problems.append(f"line {lineno}: key {key!r} outside any section")
            continue
        if section not in _SCHEMA:
            continue
        if key not in _SCHEMA[section]:
            problems.append(f"line {lineno}: unknown key {key!r} in [{section}]")
            continue
        attr, parser = _SCHEMA[section][key]
        if attr in seen:
            problems.append(f"line {lineno}: duplicate key {key!r} (first set on line {seen[attr]})")
            continue
        seen[attr] = lineno
        try:
            values[attr] = parser(val)
        except ValueError as exc:
            problems.append(f"line {lineno}: bad value for {key!r}: {exc}")
    if problems:
        raise ConfigError(problems)
    cfg = RunConfig(**values)
    if validate:
        bad = cfg.problems()
        if bad:
            raise ConfigError(bad)
    return cfg


def format_config(cfg: RunConfig) -> str:
    """Inverse of parse_config (round-trips every field)."""
    defaults = {f.name: f.default for f in fields(RunConfig)}
    lines = []
    for sec, keys in _SCHEMA.items():
        lines.append(f"[{sec}]")
        for key, (attr, _) in keys.items():
            val = getattr(cfg, attr)
            if attr == "budget" and val == defaults["budget"]:
                continue
            if isinstance(val, complex):
                text = f"{val.real!r},{val.imag!r}"
            elif isinstance(val, tuple):
                text = ", ".join(repr(float(x)) for x in val)
            elif isinstance(val, bool):
                text = "true" if val else "false"
            elif val is None:
                text = "none"
            else:
                text = repr(val) if isinstance(val, float) else str(val)
            lines.append(f"{key} = {text}")
        lines.append("")
    return "\n".join(lines)
