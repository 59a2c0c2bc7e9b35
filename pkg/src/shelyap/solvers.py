"""Exact minimization of the two variational routes.

Both routes are chain-constrained strictly convex quadratics and reduce to one
canonical problem,

    minimize sum_i w_i (c_i - z_i)^2   subject to   c_1 >= c_2 >= ... >= c_d,

solved exactly (up to rounding) by weighted pool-adjacent-violators. The
reductions absorb each chain margin into a running shift:

route 1: constraints a_k - a_{k+1} >= 1. Put c_k = a_k + k, so the chain
becomes c_k >= c_{k+1}, and

    sum_k (t/2) a_k^2 + u_k a_k = sum_k (t/2) (c_k - (k - u_k/t))^2 + const,

i.e. targets z_k = k - u_k/t with uniform weights t.

route 2: constraints b_i - b_{i+1} >= (m_i + m_{i+1})/2. Put
M_1 = 0, M_{i+1} = M_i + (m_i + m_{i+1})/2 and c_i = b_i + M_i, so again
c_i >= c_{i+1}, and

    sum_i (m_i t/2) (b_i + x_i/t)^2 = sum_i (m_i t/2) (c_i - (M_i - x_i/t))^2,

i.e. targets z_i = M_i - x_i/t with weights m_i t. The additive constants
((m_i^3 - m_i) t/24 - m_i x_i^2/(2t) terms) do not move the minimizer and are
restored when the objective is reported.

An independent exhaustive oracle cross-checks the solver: it enumerates all
2^(d-1) subsets of active constraints, solves each equality-constrained
problem in closed form (each maximal active run is a single free variable),
keeps the feasible minimum, and breaks ties toward the lexicographically
smallest active set. Exponential, capped at d <= 20.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .clusters import ClusterResult
from .errors import DimensionTooLarge, LengthMismatch
from .instance import (
    FlatInstance,
    MomentInstance,
    gamma1_objective,
    gamma2_objective,
)

STRUCTURE_TOL_SCALE = 1e-9
BOUNDARY_TOL = 1e-6


def structure_tolerance(margin: float) -> float:
    return STRUCTURE_TOL_SCALE * (1.0 + abs(margin))


@dataclass(frozen=True)
class IsotonicProblem:
    """Weighted least squares under a non-increasing chain."""

    targets: tuple[float, ...]
    weights: tuple[float, ...]
    direction: str = "non-increasing"

    def __post_init__(self):
        if len(self.targets) != len(self.weights):
            raise LengthMismatch("targets and weights differ in length")
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be positive")


@dataclass(frozen=True)
class VariationalSolution:
    """Minimizer, objective value, and the set of tight chain constraints.

    active holds 1-based constraint indices i whose gap values_i - values_{i+1}
    sits within structure tolerance of its margin.
    """

    values: tuple[float, ...]
    objective: float
    active: frozenset[int]


def isotonic_nonincreasing(z: Sequence[float], w: Sequence[float]) -> np.ndarray:
    """Weighted PAVA for a non-increasing fit.

    Returns the unique minimizer of sum w_i (c_i - z_i)^2 over non-increasing
    c. Pooled values are recomputed per final block as exact weighted means.
    """
    prob = IsotonicProblem(tuple(float(v) for v in z), tuple(float(v) for v in w))
    z = np.asarray(prob.targets)
    w = np.asarray(prob.weights)
    # blocks as (start, weight sum, weighted target sum)
    starts: list[int] = []
    wsum: list[float] = []
    wzsum: list[float] = []
    for i in range(len(z)):
        starts.append(i)
        wsum.append(w[i])
        wzsum.append(w[i] * z[i])
        while len(starts) > 1 and wzsum[-2] / wsum[-2] < wzsum[-1] / wsum[-1]:
            tz, tw = wzsum.pop(), wsum.pop()
            starts.pop()
            wzsum[-1] += tz
            wsum[-1] += tw
    out = np.empty_like(z)
    bounds = starts + [len(z)]
    for lo, hi in zip(bounds, bounds[1:]):
        out[lo:hi] = np.sum(w[lo:hi] * z[lo:hi]) / np.sum(w[lo:hi])
    return out


def _active_from_gaps(values: np.ndarray, margins: np.ndarray) -> frozenset[int]:
    gaps = values[:-1] - values[1:]
    return frozenset(
        i + 1
        for i in range(len(margins))
        if gaps[i] <= margins[i] + structure_tolerance(margins[i])
    )


def gamma1_isotonic(flat: FlatInstance, t: float) -> tuple[IsotonicProblem, np.ndarray]:
    """Canonical form of route 1; second return is the shift c = a + shift."""
    k = np.arange(1, flat.nu + 1, dtype=float)
    z = k - np.asarray(flat.u) / t
    w = np.full(flat.nu, float(t))
    return IsotonicProblem(tuple(z), tuple(w)), k


def gamma2_isotonic(inst: MomentInstance) -> tuple[IsotonicProblem, np.ndarray]:
    """Canonical form of route 2; second return is the shift c = b + shift."""
    m = np.asarray(inst.m, dtype=float)
    margins = (m[:-1] + m[1:]) / 2.0
    shift = np.concatenate([[0.0], np.cumsum(margins)])
    z = shift - np.asarray(inst.x) / inst.t
    w = m * inst.t
    return IsotonicProblem(tuple(z), tuple(w)), shift


def solve_gamma1(flat: FlatInstance, t: float) -> VariationalSolution:
    """Minimize route 1 exactly via the pooled non-increasing fit."""
    prob, shift = gamma1_isotonic(flat, t)
    c = isotonic_nonincreasing(prob.targets, prob.weights)
    a = c - shift
    margins = np.ones(flat.nu - 1)
    return VariationalSolution(
        values=tuple(a),
        objective=gamma1_objective(flat, t, a),
        active=_active_from_gaps(a, margins),
    )


def solve_gamma2(inst: MomentInstance) -> VariationalSolution:
    """Minimize route 2 exactly via the pooled non-increasing fit."""
    prob, shift = gamma2_isotonic(inst)
    c = isotonic_nonincreasing(prob.targets, prob.weights)
    b = c - shift
    m = np.asarray(inst.m, dtype=float)
    margins = (m[:-1] + m[1:]) / 2.0
    return VariationalSolution(
        values=tuple(b),
        objective=gamma2_objective(inst, b),
        active=_active_from_gaps(b, margins),
    )


def bruteforce_chain_qp(
    weights: Sequence[float],
    linear: Sequence[float],
    margins: Sequence[float],
    constant: float = 0.0,
) -> VariationalSolution:
    """Exhaustive oracle for min sum (w_i/2) v_i^2 + q_i v_i, v_i - v_{i+1} >= g_i.

    Enumerates every active subset; within a maximal active run the variables
    differ by fixed margin offsets, so each run solves in closed form. Ties in
    the objective go to the lexicographically smallest active set.
    """
    w = np.asarray(weights, dtype=float)
    q = np.asarray(linear, dtype=float)
    g = np.asarray(margins, dtype=float)
    d = len(w)
    if len(q) != d or len(g) != d - 1:
        raise LengthMismatch("weights, linear terms and margins are inconsistent")
    if d > 20:
        raise DimensionTooLarge(f"oracle capped at 20 variables, got {d}")
    feas_tol = 1e-12 * (1.0 + float(np.abs(g).max(initial=0.0)))

    best: tuple[float, tuple[int, ...], np.ndarray] | None = None
    for mask in range(1 << max(d - 1, 0)):
        active = tuple(i for i in range(d - 1) if mask >> i & 1)
        v = np.empty(d)
        lo = 0
        while lo < d:
            hi = lo
            while hi < d - 1 and (mask >> hi & 1):
                hi += 1
            # run lo..hi with v_i = beta + delta_i, delta from chained margins
            delta = np.concatenate([[0.0], -np.cumsum(g[lo:hi])])
            wr, qr = w[lo : hi + 1], q[lo : hi + 1]
            beta = -(np.sum(wr * delta) + np.sum(qr)) / np.sum(wr)
            v[lo : hi + 1] = beta + delta
            lo = hi + 1
        slack = v[:-1] - v[1:] - g
        if np.any(slack < -feas_tol):
            continue
        obj = float(np.sum(0.5 * w * v * v + q * v)) + constant
        key = tuple(i + 1 for i in active)
        if best is None or obj < best[0] or (obj == best[0] and key < best[1]):
            best = (obj, key, v)
    assert best is not None  # mask 2^(d-1)-1 is always feasible
    obj, _, v = best
    return VariationalSolution(
        values=tuple(v),
        objective=obj,
        active=_active_from_gaps(v, g),
    )


def oracle_gamma1(flat: FlatInstance, t: float) -> VariationalSolution:
    w = [t] * flat.nu
    q = list(flat.u)
    g = [1.0] * (flat.nu - 1)
    return bruteforce_chain_qp(w, q, g)


def oracle_gamma2(inst: MomentInstance) -> VariationalSolution:
    m = np.asarray(inst.m, dtype=float)
    x = np.asarray(inst.x)
    w = m * inst.t
    q = m * x
    g = (m[:-1] + m[1:]) / 2.0
    constant = float(np.sum((m**3 - m) * inst.t / 24.0))
    return bruteforce_chain_qp(w, q, g, constant=constant)


def lift_b_to_a(b: Sequence[float], inst: MomentInstance) -> np.ndarray:
    """Expand per-location drifts to per-coordinate drifts.

    Coordinate k in the block of location j gets
    a_k = b_j + (m_j + 1)/2 - k + sum_{i<j} m_i; a feasible b maps to a
    feasible a with the same route-1 objective.
    """
    if len(b) != inst.n:
        raise LengthMismatch(f"expected {inst.n} drifts, got {len(b)}")
    a: list[float] = []
    for bj, mj in zip(b, inst.m):
        # global k = S_{j-1} + r cancels the block offset, leaving local r
        a.extend(bj + (mj + 1) / 2.0 - r for r in range(1, mj + 1))
    return np.asarray(a)


def build_b_from_clusters(res: ClusterResult, inst: MomentInstance) -> np.ndarray:
    """Assemble the route-2 minimizer from the terminal partition.

    Within block B with members N_{k-1}+1..N_k, location i gets the block's
    centre-of-mass drift plus a mass-staircase offset:

        b_i = -(sum_{j in B} m_j x_j)/(mass(B) t)
              + (sum_{j=i+1}^{N_k} m_j - sum_{j=N_{k-1}+1}^{i-1} m_j)/2.
    """
    x, m, t = inst.x, inst.m, inst.t
    b = np.empty(inst.n)
    for block in res.partition:
        idx = [i - 1 for i in block]
        mass = float(sum(m[i] for i in idx))
        com = sum(m[i] * x[i] for i in idx) / (mass * t)
        for i in idx:
            after = sum(m[j] for j in idx if j > i)
            before = sum(m[j] for j in idx if j < i)
            b[i] = -com + (after - before) / 2.0
    return b


@dataclass(frozen=True)
class GapRecord:
    """Classification of one route-1 chain constraint."""

    index: int
    gap: float
    tight: bool
    same_block: bool
    boundary: bool

    @property
    def agree(self) -> bool:
        return self.tight == self.same_block


@dataclass(frozen=True)
class StructureReport:
    records: tuple[GapRecord, ...]
    near_terminal_merge: bool

    @property
    def boundary(self) -> bool:
        return self.near_terminal_merge or any(r.boundary for r in self.records)

    @property
    def ok(self) -> bool:
        return all(r.agree or r.boundary for r in self.records)


def check_minimizer_structure(
    sol: VariationalSolution, flat: FlatInstance, res: ClusterResult
) -> StructureReport:
    """Compare route-1 gap structure against the terminal partition.

    Gap a_i - a_{i+1} should be exactly 1 iff flat coordinates i and i+1 end
    in the same block. Constraints too close to the merge transition to
    classify reliably are flagged boundary instead of asserted either way:
    the location-pair margin test |(x_{j+1}-x_j)/t - (m_j+m_{j+1})/2| <= 1e-6,
    a cross-block gap within 1e-6 of 1, or any merge within 1e-6*(1+t) of t.
    """
    a = np.asarray(sol.values)
    gaps = a[:-1] - a[1:]
    block_of = {}
    for bi, block in enumerate(res.partition):
        for j in block:
            block_of[j] = bi
    t = res.inertia_paths[0].breakpoints[-1]
    # recover per-location data from the flat coordinates
    x_of: dict[int, float] = {}
    m_of: dict[int, int] = {}
    for u, j in zip(flat.u, flat.f):
        x_of[j] = u
        m_of[j] = m_of.get(j, 0) + 1

    records = []
    for i in range(flat.nu - 1):
        ji, jn = flat.f[i], flat.f[i + 1]
        gap = float(gaps[i])
        tight = abs(gap - 1.0) <= structure_tolerance(1.0)
        same = block_of[ji] == block_of[jn]
        boundary = False
        if ji != jn:
            margin = (m_of[ji] + m_of[jn]) / 2.0
            boundary = abs((x_of[jn] - x_of[ji]) / t - margin) <= BOUNDARY_TOL
        if not same and abs(gap - 1.0) <= BOUNDARY_TOL:
            boundary = True
        records.append(GapRecord(index=i + 1, gap=gap, tight=tight,
                                 same_block=same, boundary=boundary))
    near_t = any(abs(e.time - t) <= BOUNDARY_TOL * (1.0 + t) for e in res.events)
    return StructureReport(records=tuple(records), near_terminal_merge=near_t)
