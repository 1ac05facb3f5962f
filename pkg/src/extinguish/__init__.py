"""Simulator and verification suite for the damped sublinear Schrödinger equation

    i u_t + Lap u + a |u|^(m-1) u = f,    0 < m < 1,

on a periodic box: cone algebra, resolvent solver, time stepping,
extinction and decay diagnostics, and a scenario runner with a CLI.
"""
from .cone import ConeParams, Rotation, cone_contains, g_apply, lp_check, rotate, sample_cone
from .diagnostics import (
    DiagnosticsSeries,
    ExtinctionReport,
    comparator_trajectory,
    delta_exponent,
    detect_extinction,
    fit_decay,
    fit_extinction_constant,
    gn_ratio,
    mass_balance_residual,
    ode_comparator_bound,
)
from .domain import (
    Field,
    PeriodicGrid,
    band_limited_random,
    gaussian,
    inner,
    laplacian,
    lp_norm,
    make_grid,
    read_field,
    sobolev_norm,
    write_field,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DivergenceError,
    DomainError,
    InsufficientDataError,
    MemoryBudgetError,
)
from .evolve import (
    EvolveConfig,
    SourceTerm,
    evolve,
    linear_flow_exact,
    nonlinear_flow_exact,
    source_eval,
    step_backward_euler,
    step_strang,
)
from .resolvent import ResolventProblem, SolveOptions, residual, solve_resolvent

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
