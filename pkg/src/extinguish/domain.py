"""Periodic box standing in for R^N, spectral operators and norms.

Transform convention: the forward FFT is unnormalized and the inverse
carries ``1/n^N`` (numpy's default).  With ``h`` the grid spacing,

    ||u||_2^2 = h^N sum |u_j|^2 = (h^N / n^N) sum |u_hat_k|^2,

so every spectral norm below is ``(h^N / n^N) * sum(weight_k |u_hat_k|^2)``.
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import fft as sp_fft

from .errors import DomainError, MemoryBudgetError

__all__ = [
    "DEFAULT_POINT_BUDGET",
    "PeriodicGrid",
    "Field",
    "make_grid",
    "laplacian",
    "lp_norm",
    "sobolev_norm",
    "h2_split_norm",
    "gradient_norm",
    "inner",
    "band_limited_random",
    "gaussian",
    "tail_mass",
    "write_field",
    "read_field",
]

DEFAULT_POINT_BUDGET = 1 << 24

_HEADER = struct.Struct("<qqd")


def _fft_workers() -> int:
    try:
        cap = int(os.environ.get("EXTINGUISH_THREADS", "0"))
    except ValueError:
        cap = 0
    cpus = os.cpu_count() or 1
    return max(1, min(cap, cpus)) if cap > 0 else cpus


_WORKERS = _fft_workers()


@dataclass(frozen=True, eq=False)
class PeriodicGrid:
    dims: int
    n: int
    box_length: float

    @property
    def spacing(self) -> float:
        return self.box_length / self.n

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.dims

    @property
    def size(self) -> int:
        return self.n ** self.dims

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dims

    @property
    def volume(self) -> float:
        return self.box_length ** self.dims

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Signed angular frequencies ``2 pi j / L`` in FFT order (one axis)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    @cached_property
    def coords(self) -> np.ndarray:
        """Cell positions along one axis, centred on the origin."""
        return -0.5 * self.box_length + self.spacing * np.arange(self.n)

    def axis_view(self, values: np.ndarray, axis: int) -> np.ndarray:
        """Reshape a 1-D per-axis table so it broadcasts along ``axis``."""
        shape = [1] * self.dims
        shape[axis] = self.n
        return values.reshape(shape)

    @cached_property
    def k2(self) -> np.ndarray:
        """|k|^2 on the full spectral grid."""
        out = np.zeros(self.shape)
        k = self.wavenumbers
        for ax in range(self.dims):
            out = out + self.axis_view(k * k, ax)
        return out

    @cached_property
    def r2(self) -> np.ndarray:
        """|x|^2 on the full physical grid."""
        out = np.zeros(self.shape)
        x = self.coords
        for ax in range(self.dims):
            out = out + self.axis_view(x * x, ax)
        return out

    def fft(self, arr: np.ndarray) -> np.ndarray:
        return sp_fft.fftn(arr, workers=_WORKERS)

    def ifft(self, arr: np.ndarray) -> np.ndarray:
        return sp_fft.ifftn(arr, workers=_WORKERS)

    def same_as(self, other: "PeriodicGrid") -> bool:
        return (self.dims, self.n, self.box_length) == (other.dims, other.n, other.box_length)


def make_grid(dims: int, n: int, box_length: float, budget: int | None = None) -> PeriodicGrid:
    """Validated periodic grid with ``n`` points per axis on ``[-L/2, L/2)^dims``."""
    problems = []
    if int(dims) != dims or not 1 <= dims <= 5:
        problems.append(f"dims must be an integer in 1..5, got {dims!r}")
    if int(n) != n or n < 4 or (int(n) & (int(n) - 1)) != 0:
        problems.append(f"n must be a power of two >= 4, got {n!r}")
    if not np.isfinite(box_length) or box_length <= 0:
        problems.append(f"box_length must be positive and finite, got {box_length!r}")
    if problems:
        raise DomainError("; ".join(problems))
    dims, n = int(dims), int(n)
    cap = DEFAULT_POINT_BUDGET if budget is None else budget
    if n ** dims > cap:
        raise MemoryBudgetError(f"grid has {n}^{dims} = {n ** dims} points, budget is {cap}")
    return PeriodicGrid(dims, n, float(box_length))


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples on a grid; ``values`` has shape ``grid.shape``."""

    grid: PeriodicGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.size != self.grid.size:
            raise DomainError(f"field has {vals.size} values, grid has {self.grid.size} points")
        vals = vals.reshape(self.grid.shape)
        if not np.all(np.isfinite(vals)):
            raise DomainError("field values must be finite")
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, grid: PeriodicGrid) -> "Field":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @property
    def flat(self) -> np.ndarray:
        """Row-major flattening, the layout used on disk."""
        return self.values.reshape(-1)

    def with_values(self, values) -> "Field":
        return Field(self.grid, values)

    def __add__(self, other: "Field") -> "Field":
        _check_same(self, other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _check_same(self, other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, c) -> "Field":
        return Field(self.grid, self.values * c)

    __rmul__ = __mul__


def _check_same(u: Field, v: Field) -> None:
    if not u.grid.same_as(v.grid):
        raise DomainError("fields live on different grids")


def laplacian(u: Field) -> Field:
    g = u.grid
    return Field(g, g.ifft(-g.k2 * g.fft(u.values)))


def lp_norm(u: Field, p: float) -> float:
    """``(h^N sum |u|^p)^(1/p)``; ``p < 1`` gives the quasi-norm."""
    if p <= 0:
        raise DomainError(f"p must be positive, got {p}")
    s = np.sum(np.abs(u.values) ** p) * u.grid.cell_volume
    return float(s ** (1.0 / p))


def _spectral_sum(u: Field, weight) -> float:
    g = u.grid
    uh = g.fft(u.values)
    return float(np.sum(weight * (uh.real ** 2 + uh.imag ** 2)) * g.cell_volume / g.size)


def sobolev_norm(u: Field, ell: int) -> float:
    """Bessel-potential norm ``(sum (1+|k|^2)^ell |u_hat|^2)^(1/2)`` in the convention above."""
    if ell not in (0, 1, 2):
        raise DomainError(f"ell must be 0, 1 or 2, got {ell}")
    return float(np.sqrt(_spectral_sum(u, (1.0 + u.grid.k2) ** ell)))


def h2_split_norm(u: Field) -> float:
    """The equivalent H^2 norm ``(||u||^2 + ||Lap u||^2)^(1/2)``."""
    return float(np.sqrt(_spectral_sum(u, 1.0 + u.grid.k2 ** 2)))


def gradient_norm(u: Field) -> float:
    """``||grad u||_2`` computed spectrally."""
    return float(np.sqrt(_spectral_sum(u, u.grid.k2)))


def inner(u: Field, v: Field) -> complex:
    """``h^N sum u conj(v)``; callers take the real or imaginary part."""
    _check_same(u, v)
    return complex(np.vdot(v.values, u.values) * u.grid.cell_volume)


def band_limited_random(grid: PeriodicGrid, seed: int, kmax: int, amplitude: float) -> Field:
    """Seeded field with Gaussian coefficients on modes ``max_j |j| <= kmax``.

    The result is rescaled to have L^2 norm ``amplitude``.
    """
    if int(kmax) != kmax or kmax < 0 or kmax >= grid.n // 2:
        raise DomainError(f"kmax must be an integer in [0, n/2), got {kmax} for n = {grid.n}")
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    idx = np.abs(np.fft.fftfreq(grid.n) * grid.n)
    mask = np.ones(grid.shape, dtype=bool)
    for ax in range(grid.dims):
        mask &= grid.axis_view(idx <= kmax, ax)
    vals = grid.ifft(np.where(mask, coeffs, 0.0))
    u = Field(grid, vals)
    norm = lp_norm(u, 2)
    return Field(grid, vals * (amplitude / norm))


def gaussian(grid: PeriodicGrid, amplitude: float = 1.0, width: float = 1.0, center=0.0) -> Field:
    """``amplitude * exp(-|x - center|^2 / (2 width^2))``."""
    center = np.broadcast_to(np.asarray(center, dtype=float), (grid.dims,))
    r2 = np.zeros(grid.shape)
    for ax in range(grid.dims):
        r2 = r2 + grid.axis_view((grid.coords - center[ax]) ** 2, ax)
    return Field(grid, amplitude * np.exp(-r2 / (2.0 * width ** 2)))


def tail_mass(u: Field, fraction: float = 0.1) -> float:
    """Share of the L^2 mass lying in the outer ``fraction`` of the box.

    A point is in the tail when any coordinate satisfies
    ``|x_j| >= (1 - fraction) L / 2``.
    """
    g = u.grid
    dens = np.abs(u.values) ** 2
    total = dens.sum()
    if total == 0:
        return 0.0
    edge = np.abs(g.coords) >= (1.0 - fraction) * 0.5 * g.box_length
    mask = np.zeros(g.shape, dtype=bool)
    for ax in range(g.dims):
        mask |= g.axis_view(edge, ax)
    return float(dens[mask].sum() / total)


def write_field(path, u: Field) -> None:
    """Header ``<q dims, <q n, <d L`` followed by interleaved little-endian re/im doubles."""
    g = u.grid
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(g.dims, g.n, g.box_length))
        fh.write(np.ascontiguousarray(u.flat, dtype="<c16").tobytes())


def read_field(path) -> Field:
    with open(path, "rb") as fh:
        dims, n, box_length = _HEADER.unpack(fh.read(_HEADER.size))
        data = np.frombuffer(fh.read(), dtype="<c16")
    grid = make_grid(dims, n, box_length, budget=max(DEFAULT_POINT_BUDGET, n ** dims))
    return Field(grid, data.astype(complex))
