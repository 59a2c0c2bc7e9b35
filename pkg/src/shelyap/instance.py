"""Problem data for multi-point moment exponents.

An instance is a horizon t > 0, strictly increasing locations x_1 < ... < x_n,
and integer multiplicities m_i >= 1. The flattened form repeats each location
by its multiplicity: nu = sum(m_i) coordinates u_1 <= ... <= u_nu, with f(k)
giving the 1-based location index that coordinate k came from.

Two equivalent variational objectives are evaluated here verbatim; the solvers
module minimizes them:

    route 1 (per-coordinate drifts a, constraints a_k - a_{k+1} >= 1):
        sum_k (t/2) a_k^2 + u_k a_k

    route 2 (per-location drifts b, constraints b_i - b_{i+1} >= (m_i+m_{i+1})/2):
        sum_i (m_i t / 2)(b_i + x_i/t)^2 + (m_i^3 - m_i) t / 24 - m_i x_i^2 / (2t)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    LengthMismatch,
    NonPositiveMultiplicity,
    NonPositiveTime,
    UnsortedLocations,
)


@dataclass(frozen=True)
class MomentInstance:
    """Validated (t, x, m) triple. Construct through validate_instance."""

    t: float
    x: tuple[float, ...]
    m: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def nu(self) -> int:
        return sum(self.m)


@dataclass(frozen=True)
class FlatInstance:
    """Multiplicity-flattened coordinates.

    u has length nu, non-decreasing; f[k-1] is the 1-based location index of
    flat coordinate k.
    """

    nu: int
    u: tuple[float, ...]
    f: tuple[int, ...]


def validate_instance(t: float, x: Sequence[float], m: Sequence[int]) -> MomentInstance:
    """Check (t, x, m) and return the frozen instance.

    Raises NonPositiveTime, UnsortedLocations, NonPositiveMultiplicity or
    LengthMismatch. Locations must be strictly increasing; ties are rejected
    rather than merged.
    """
    x = tuple(float(v) for v in x)
    m_out = []
    for v in m:
        iv = int(v)
        if iv != v:
            raise NonPositiveMultiplicity(f"multiplicity {v!r} is not an integer")
        m_out.append(iv)
    m = tuple(m_out)
    if len(x) != len(m):
        raise LengthMismatch(f"len(x)={len(x)} but len(m)={len(m)}")
    if len(x) == 0:
        raise LengthMismatch("instance needs at least one location")
    t = float(t)
    if not t > 0.0:
        raise NonPositiveTime(f"t={t} must be > 0")
    if any(not np.isfinite(v) for v in x) or not np.isfinite(t):
        raise UnsortedLocations("locations and t must be finite")
    for a, b in zip(x, x[1:]):
        if not a < b:
            raise UnsortedLocations(f"locations must be strictly increasing, got {a} before {b}")
    for v in m:
        if v < 1:
            raise NonPositiveMultiplicity(f"multiplicity {v} must be >= 1")
    return MomentInstance(t=t, x=x, m=m)


def flatten(inst: MomentInstance) -> FlatInstance:
    """Repeat each location by its multiplicity."""
    u: list[float] = []
    f: list[int] = []
    for j, (xj, mj) in enumerate(zip(inst.x, inst.m), start=1):
        u.extend([xj] * mj)
        f.extend([j] * mj)
    return FlatInstance(nu=len(u), u=tuple(u), f=tuple(f))


def gamma1_objective(flat: FlatInstance, t: float, a: Sequence[float]) -> float:
    a = np.asarray(a, dtype=float)
    if a.shape != (flat.nu,):
        raise LengthMismatch(f"expected {flat.nu} coordinates, got {a.shape}")
    u = np.asarray(flat.u)
    return float(np.sum(0.5 * t * a * a + u * a))


def gamma2_objective(inst: MomentInstance, b: Sequence[float]) -> float:
    b = np.asarray(b, dtype=float)
    if b.shape != (inst.n,):
        raise LengthMismatch(f"expected {inst.n} coordinates, got {b.shape}")
    t = inst.t
    x = np.asarray(inst.x)
    m = np.asarray(inst.m, dtype=float)
    kinetic = 0.5 * m * t * (b + x / t) ** 2
    shift = (m**3 - m) * t / 24.0 - m * x * x / (2.0 * t)
    return float(np.sum(kinetic + shift))
