"""Pointwise algebra of the damping coefficient and the sublinear nonlinearity.

The admissible coefficients form the cone

    C(m) = { a : Im(a) > 0  and  2 sqrt(m) Im(a) >= (1 - m) |Re(a)| },

with the boundary ray in the first quadrant removed (strict inequality when
Re(a) >= 0).  Everything here is a pure function of scalars or numpy arrays.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError

__all__ = [
    "ConeParams",
    "Rotation",
    "LPCheck",
    "cone_contains",
    "rotate",
    "g_apply",
    "lp_check",
    "sample_cone",
]


def _check_m(m: float) -> None:
    if not (isinstance(m, (int, float, np.floating)) and math.isfinite(m)) or not 0.0 < m < 1.0:
        raise DomainError(f"exponent m must lie in (0, 1), got {m!r}")


def cone_contains(m: float, a: complex) -> bool:
    """Return True iff ``a`` is an admissible damping coefficient for ``m``."""
    _check_m(m)
    a = complex(a)
    if not (math.isfinite(a.real) and math.isfinite(a.imag)):
        raise DomainError(f"coefficient a must be finite, got {a!r}")
    if a.imag <= 0.0:
        return False
    lhs = 2.0 * math.sqrt(m) * a.imag
    if lhs < (1.0 - m) * abs(a.real):
        return False
    if a.real >= 0.0 and not lhs > (1.0 - m) * a.real:
        return False
    return True


@dataclass(frozen=True)
class ConeParams:
    """Exponent ``m`` and damping coefficient ``a``, validated on construction."""

    m: float
    a: complex

    def __post_init__(self):
        object.__setattr__(self, "m", float(self.m))
        object.__setattr__(self, "a", complex(self.a))
        if not cone_contains(self.m, self.a):
            raise DomainError(
                f"a = {self.a} is outside the admissible cone for m = {self.m}: "
                "need Im(a) > 0 and 2*sqrt(m)*Im(a) >= (1-m)*|Re(a)|, "
                "strictly when Re(a) >= 0"
            )

    @property
    def theta_a(self) -> float:
        """Principal argument of ``a``, in (0, pi)."""
        return cmath.phase(self.a)


@dataclass(frozen=True)
class Rotation:
    b: complex
    theta_b: float


def rotate(params: ConeParams) -> Rotation:
    """Unit rotation ``b = exp(-i theta_b)`` keeping ``a*b`` inside the cone.

    For Re(a) < 0 the rotation brings ``a`` onto the imaginary axis.  For
    Re(a) >= 0 we take the midpoint between the cone edge angle
    ``phi_m = arctan((1-m) / (2 sqrt(m)))`` and ``theta_a``, which leaves
    ``a*b`` strictly inside the open first-quadrant sector.
    """
    if not isinstance(params, ConeParams):
        raise DomainError("rotate expects a validated ConeParams")
    m, a = params.m, params.a
    theta_a = params.theta_a
    if a.real < 0.0:
        theta_b = theta_a - math.pi / 2
    else:
        phi_m = math.atan((1.0 - m) / (2.0 * math.sqrt(m)))
        theta_b = 0.5 * (theta_a - phi_m)
    return Rotation(b=cmath.exp(-1j * theta_b), theta_b=theta_b)


def g_apply(m: float, z):
    """``|z|^(m-1) z`` with ``g(0) = 0``; works on scalars and arrays."""
    arr = np.asarray(z, dtype=complex)
    r = np.abs(arr)
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(r > 0, r ** (np.asarray(m, dtype=float) - 1.0), 0.0)
    out = scale * arr
    if out.ndim == 0:
        return complex(out)
    return out


class LPCheck(NamedTuple):
    lhs: float
    rhs: float


def lp_check(m: float, z1, z2) -> LPCheck:
    """Both sides of ``2 sqrt(m)|Im w| <= (1-m) Re w`` with ``w = (g(z1)-g(z2)) conj(z1-z2)``.

    Vectorized: array inputs give array fields.  The inequality itself is
    what callers test; nothing is enforced here.
    """
    w = (g_apply(m, z1) - g_apply(m, z2)) * np.conj(np.asarray(z1) - np.asarray(z2))
    m = np.asarray(m, dtype=float)
    lhs = 2.0 * np.sqrt(m) * np.abs(np.imag(w))
    rhs = (1.0 - m) * np.real(w)
    if np.ndim(w) == 0:
        return LPCheck(float(lhs), float(rhs))
    return LPCheck(lhs, rhs)


def sample_cone(rng: np.random.Generator, size: int, m_range=(0.01, 0.99)):
    """Draw ``size`` admissible ``(m, a)`` pairs.

    The argument of ``a`` is uniform over the open admissible arc
    ``(phi_m, pi - phi_m)`` and the modulus log-uniform in [1e-2, 1e2].
    Returns two arrays ``(m, a)``.
    """
    m = rng.uniform(m_range[0], m_range[1], size)
    phi = np.arctan((1.0 - m) / (2.0 * np.sqrt(m)))
    # stay off both edges so rounding cannot push a sample out of the cone
    margin = 1e-6 * (np.pi / 2 - phi)
    theta = rng.uniform(phi + margin, np.pi - phi - margin)
    modulus = 10.0 ** rng.uniform(-2.0, 2.0, size)
    return m, modulus * np.exp(1j * theta)
