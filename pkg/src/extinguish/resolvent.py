"""Stationary resolvent problem ``-lam Lap u - a lam g(u) - i b0 u = F``.

One backward-Euler step of the evolution is exactly one such solve.  The
nonlinearity ``g(u) = |u|^(m-1) u`` is only m-Hölder, so Newton's method in
``u`` breaks down near zeros of the solution.  The default ``newton`` mode
therefore works in the variable ``w = g(u)``: the pointwise inverse
``u = phi(w) = |w|^((1-m)/m) w`` is C^1 with ``phi'(0) = 0`` and the problem

    R(w) = L phi(w) - a lam w - F = 0,     L = lam |k|^2 - i b0 (Fourier symbol)

has a Jacobian bounded away from singular.  Linear systems are solved with
GMRES, right-preconditioned by the same Jacobian built from a second-order
finite-difference Laplacian and factored sparsely.
"""
from __future__ import annotations

import logging
from functools import lru_cache
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, gmres, spilu, splu

from .cone import ConeParams, g_apply
from .domain import Field, PeriodicGrid, h2_split_norm, inner, laplacian, lp_norm
from .errors import ConvergenceError, DomainError

log = logging.getLogger(__name__)

__all__ = [
    "ResolventProblem",
    "SolveOptions",
    "SolveResult",
    "solve_resolvent",
    "residual",
    "monotonicity_integral",
    "laplacian_sign",
    "apriori_ratio",
]

# above this many real unknowns the preconditioner uses incomplete LU
_SPLU_LIMIT = 20_000


@dataclass(frozen=True)
class ResolventProblem:
    lam: float
    b0: float
    params: ConeParams
    F: Field
    nonlinear: bool = True  # test hook: False drops the a*lam*g(u) term

    def __post_init__(self):
        if not self.lam > 0 or not self.b0 > 0:
            raise DomainError(f"need lam > 0 and b0 > 0, got lam={self.lam}, b0={self.b0}")
        if not isinstance(self.params, ConeParams):
            raise DomainError("params must be a validated ConeParams")

    @property
    def grid(self) -> PeriodicGrid:
        return self.F.grid


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-10
    max_iter: int = 500
    relaxation: float = 1.0
    epsilon_reg: float = 1e-12
    mode: str = "newton"

    def __post_init__(self):
        if not self.tol > 0 or self.max_iter < 1:
            raise DomainError("need tol > 0 and max_iter >= 1")
        if not 0 < self.relaxation <= 1:
            raise DomainError("relaxation must lie in (0, 1]")
        if self.epsilon_reg < 0:
            raise DomainError("epsilon_reg must be >= 0")
        if self.mode not in ("picard", "newton"):
            raise DomainError(f"unknown solve mode {self.mode!r}")


class SolveResult(NamedTuple):
    u: Field
    iterations: int
    residual: float


def _norm(grid: PeriodicGrid, arr: np.ndarray) -> float:
    return float(np.sqrt(grid.cell_volume) * np.linalg.norm(arr))


def _residual_array(problem: ResolventProblem, u: np.ndarray) -> np.ndarray:
    g = problem.grid
    lin = g.ifft((problem.lam * g.k2 - 1j * problem.b0) * g.fft(u))
    out = lin - problem.F.values
    if problem.nonlinear:
        out = out - problem.params.a * problem.lam * g_apply(problem.params.m, u)
    return out


def residual(problem: ResolventProblem, u: Field) -> float:
    """L^2 norm of ``-lam Lap u - a lam g(u) - i b0 u - F``."""
    if not u.grid.same_as(problem.grid):
        raise DomainError("solution and right-hand side live on different grids")
    return _norm(problem.grid, _residual_array(problem, u.values))


def solve_resolvent(problem: ResolventProblem, opts: SolveOptions | None = None,
                    initial: Field | None = None) -> SolveResult:
    """Solve the resolvent equation to ``residual <= tol * max(1, ||F||)``.

    ``initial`` is an optional warm start (the previous time level, say).
    Raises ConvergenceError carrying the best iterate on failure.
    """
    opts = opts or SolveOptions()
    grid = problem.grid
    F = problem.F.values
    symbol = problem.lam * grid.k2 - 1j * problem.b0
    if not np.any(F):
        return SolveResult(Field.zeros(grid), 1, 0.0)
    if not problem.nonlinear:
        u = grid.ifft(grid.fft(F) / symbol)
        return SolveResult(Field(grid, u), 1, _norm(grid, _residual_array(problem, u)))
    target = opts.tol * max(1.0, _norm(grid, F))
    if opts.mode == "picard":
        return _picard(problem, opts, symbol, target, initial)
    return _newton(problem, opts, symbol, target, initial)


def _picard(problem, opts, symbol, target, initial):
    grid = problem.grid
    m, a, lam = problem.params.m, problem.params.a, problem.lam
    F = problem.F.values
    u = initial.values.copy() if initial is not None else np.zeros(grid.shape, complex)
    omega = opts.relaxation
    history = []
    best, best_res = u, np.inf
    for it in range(1, opts.max_iter + 1):
        new = grid.ifft(grid.fft(F + a * lam * g_apply(m, u)) / symbol)
        u = (1.0 - omega) * u + omega * new
        res = _norm(grid, _residual_array(problem, u))
        history.append(res)
        if res < best_res:
            best, best_res = u, res
        if res <= target:
            return SolveResult(Field(grid, u), it, res)
        # stagnation: no 1% progress over the last 10 sweeps
        if omega > 0.5 and it >= 10 and history[-1] > 0.99 * history[-10]:
            log.debug("picard stagnated at %.3e, relaxing to 0.5", res)
            omega = 0.5
    raise ConvergenceError(
        f"picard iteration stalled at residual {best_res:.3e} (target {target:.3e})",
        best=Field(grid, best), history=history,
    )


def _phi(w, q):
    return np.abs(w) ** q * w


@lru_cache(maxsize=8)
def _fd_laplacian_cached(dims: int, n: int, box_length: float) -> sp.csr_matrix:
    h = box_length / n
    one = sp.diags([np.ones(n - 1), -2.0 * np.ones(n), np.ones(n - 1)], [-1, 0, 1], format="lil")
    one[0, n - 1] = 1.0
    one[n - 1, 0] = 1.0
    one = one.tocsr() / h ** 2
    eye = sp.identity(n, format="csr")
    total = None
    for ax in range(dims):
        factors = [eye] * dims
        factors[ax] = one
        term = factors[0]
        for f in factors[1:]:
            term = sp.kron(term, f, format="csr")
        total = term if total is None else total + term
    return total


def _fd_laplacian(grid: PeriodicGrid) -> sp.csr_matrix:
    return _fd_laplacian_cached(grid.dims, grid.n, grid.box_length)


class _Preconditioner:
    """Sparse LU of the finite-difference Jacobian, in real 2x2 block form."""

    def __init__(self, problem: ResolventProblem, lap_fd, A, B):
        lam, b0 = problem.lam, problem.b0
        al = problem.params.a * lam
        size = problem.grid.size
        eye = sp.identity(size, format="csr")
        lin = sp.bmat([[-lam * lap_fd, b0 * eye], [-b0 * eye, -lam * lap_fd]], format="csr")
        jac_pt = sp.bmat(
            [[sp.diags(A + B.real), sp.diags(B.imag)], [sp.diags(B.imag), sp.diags(A - B.real)]],
            format="csr",
        )
        shift = sp.bmat([[al.real * eye, -al.imag * eye], [al.imag * eye, al.real * eye]], format="csr")
        mat = (lin @ jac_pt - shift).tocsc()
        if 2 * size <= _SPLU_LIMIT:
            self._lu = splu(mat)
        else:
            self._lu = spilu(mat, drop_tol=1e-3, fill_factor=4)
        self.size = size

    def solve(self, v):
        return self._lu.solve(v)


def _newton(problem, opts, symbol, target, initial):
    grid = problem.grid
    m, a, lam = problem.params.m, problem.params.a, problem.lam
    q = (1.0 - m) / m
    al = a * lam
    F = problem.F.values
    size = grid.size

    def apply_L(x):
        return grid.ifft(symbol * grid.fft(x))

    def R(w):
        return apply_L(_phi(w, q)) - al * w - F

    if initial is not None and np.any(initial.values):
        w = g_apply(m, initial.values)
    else:
        w = g_apply(m, grid.ifft(grid.fft(F) / symbol))
    lap_fd = _fd_laplacian(grid)
    r = R(w)
    res = _norm(grid, r)
    history = [res]
    best_w, best_res = w, res
    precond = None
    last_inner = 0
    for it in range(1, opts.max_iter + 1):
        if res <= target:
            break
        aw = np.abs(w)
        ph2 = np.zeros_like(w)
        nz = aw > opts.epsilon_reg
        ph2[nz] = (w[nz] / aw[nz]) ** 2
        A = aw ** q * (1.0 + 0.5 * q)
        B = aw ** q * (0.5 * q) * ph2
        if precond is None or last_inner > 20:
            precond = _Preconditioner(problem, lap_fd, A.ravel(), B.ravel())

        def matvec(v, A=A, B=B, P=precond):
            z = P.solve(v)
            d = (z[:size] + 1j * z[size:]).reshape(grid.shape)
            out = apply_L(A * d + B * np.conj(d)) - al * d
            return np.concatenate([out.real.ravel(), out.imag.ravel()])

        op = LinearOperator((2 * size, 2 * size), matvec=matvec, dtype=float)
        rhs = -np.concatenate([r.real.ravel(), r.imag.ravel()])
        counter = [0]
        # forcing term proportional to the outer residual keeps quadratic convergence
        eta = max(1e-12, min(1e-2, res / history[0]))
        sol, info = gmres(op, rhs, rtol=eta, atol=0.0, restart=60, maxiter=8,
                          callback=lambda _: counter.__setitem__(0, counter[0] + 1),
                          callback_type="pr_norm")
        last_inner = counter[0]
        z = precond.solve(sol)
        d = (z[:size] + 1j * z[size:]).reshape(grid.shape)
        step = 1.0
        while True:
            trial = w + step * d
            r_trial = R(trial)
            res_trial = _norm(grid, r_trial)
            if res_trial <= (1.0 - 1e-4 * step) * res or step < 1e-10:
                break
            step *= 0.5
        if res_trial >= res:
            history.append(res_trial)
            break
        w, r, res = trial, r_trial, res_trial
        history.append(res)
        if res < best_res:
            best_w, best_res = w, res
    u = _phi(best_w, q)
    true_res = _norm(grid, _residual_array(problem, u))
    if true_res <= target:
        return SolveResult(Field(grid, u), len(history) - 1, true_res)
    raise ConvergenceError(
        f"newton iteration stalled at residual {true_res:.3e} (target {target:.3e})",
        best=Field(grid, u), history=history,
    )


def monotonicity_integral(params: ConeParams, u: Field, v: Field) -> float:
    """``Re(-i a <g(u) - g(v), u - v>)``, non-negative for admissible ``a``."""
    gu = Field(u.grid, g_apply(params.m, u.values) - g_apply(params.m, v.values))
    return float((-1j * params.a * inner(gu, u - v)).real)


def laplacian_sign(params: ConeParams, u: Field) -> float:
    """``Re(i a <g(u), Lap u>)``, non-negative in the continuum."""
    gu = Field(u.grid, g_apply(params.m, u.values))
    return float((1j * params.a * inner(gu, laplacian(u))).real)


def apriori_ratio(params: ConeParams, u: Field, F: Field) -> float:
    """``(||u||_H2^2 + ||u||_{m+1}^{m+1} + ||u||_{2m}^{2m}) / ||F||^2``."""
    m = params.m
    num = h2_split_norm(u) ** 2 + lp_norm(u, m + 1) ** (m + 1) + lp_norm(u, 2 * m) ** (2 * m)
    return num / lp_norm(F, 2) ** 2
