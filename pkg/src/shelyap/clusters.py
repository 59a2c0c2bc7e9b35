"""Deterministic sticky-cluster dynamics on [0, t].

Each location x_i carries mass m_i and starts with speed

    phi_i = (m_{i+1} + ... + m_n)/2 - (m_1 + ... + m_{i-1})/2,

so total momentum sum(m_i phi_i) is exactly zero. Clusters move ballistically;
when adjacent clusters meet they merge, conserving mass and momentum (the
merged speed is the mass-weighted average). A merge happening exactly at s = t
is included. The surviving clusters at time t define the optimal partition
B_1, ..., B_qhat into contiguous index blocks, each with terminal position
zeta_B(t) and drift v_j = zeta_B(t)/t.

Two path families are recorded per original index i on a shared breakpoint
grid {0, merge times, t}:

    inertia path   zeta_i(s): the simulated trajectory;
    optimal path   xi_i(s) = zeta_i(s) - v_j s, the drift-removed trajectory,
                   which returns to zero at s = t.

The simulation is event-driven. Candidate collision times are exact ratios
gap / closing-speed; two candidates within 1e-12 * (1 + t) of each other count
as simultaneous, and merging cascades within one event batch until no adjacent
pair is in contact. Multi-way collisions therefore resolve into one or more
merge groups recorded at the same timestamp.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NoMerge, OutOfRange
from .instance import MomentInstance

EVENT_TOL_SCALE = 1e-12


def event_tolerance(t: float) -> float:
    return EVENT_TOL_SCALE * (1.0 + t)


def initial_speeds(m: Sequence[int]) -> np.ndarray:
    """Momentum-balancing initial speeds, exact in binary floating point."""
    m = np.asarray(m, dtype=float)
    after = m.sum() - np.cumsum(m)
    before = np.cumsum(m) - m
    return 0.5 * (after - before)


def block_com_speed(m: Sequence[int], block: Sequence[int]) -> float:
    """Centre-of-mass speed of a contiguous block of 1-based indices."""
    lo, hi = min(block), max(block)
    after = sum(m[hi:])
    before = sum(m[: lo - 1])
    return 0.5 * (after - before)


@dataclass
class Cluster:
    """Live cluster: contiguous member interval, mass, momentum, position."""

    lo: int
    hi: int
    mass: float
    momentum: float
    position: float

    @property
    def speed(self) -> float:
        return self.momentum / self.mass

    @property
    def members(self) -> tuple[int, ...]:
        return tuple(range(self.lo, self.hi + 1))


@dataclass(frozen=True)
class MergeEvent:
    """One merge group: the pre-merge member intervals it combined."""

    time: float
    merged: tuple[tuple[int, int], ...]
    position: float


@dataclass(frozen=True)
class PiecewiseLinearPath:
    breakpoints: tuple[float, ...]
    values: tuple[float, ...]

    def at(self, s: float) -> float:
        """Evaluate at s; exact stored value when s is a breakpoint."""
        b = self.breakpoints
        if s < b[0] or s > b[-1]:
            raise OutOfRange(f"s={s} outside [{b[0]}, {b[-1]}]")
        k = bisect.bisect_left(b, s)
        if k < len(b) and b[k] == s:
            return self.values[k]
        w = (s - b[k - 1]) / (b[k] - b[k - 1])
        return self.values[k - 1] + w * (self.values[k] - self.values[k - 1])


@dataclass(frozen=True)
class ClusterResult:
    """Terminal partition, per-block data, merge log and recorded paths.

    momentum_at_breakpoints holds sum(mass * speed) over live clusters right
    after each recorded breakpoint; conservation keeps every entry at zero up
    to rounding.
    """

    partition: tuple[tuple[int, ...], ...]
    cluster_masses: tuple[float, ...]
    terminal_positions: tuple[float, ...]
    drifts: tuple[float, ...]
    events: tuple[MergeEvent, ...]
    inertia_paths: tuple[PiecewiseLinearPath, ...]
    optimal_paths: tuple[PiecewiseLinearPath, ...]
    momentum_at_breakpoints: tuple[float, ...]

    @property
    def q_hat(self) -> int:
        return len(self.partition)


@dataclass(frozen=True)
class FirstMerge:
    """State extracted at the first merge time s0."""

    s0: float
    x_prime: tuple[float, ...]
    m_prime: tuple[int, ...]
    xi_at_s0: tuple[float, ...]


def _collision_times(clusters: list[Cluster], s: float) -> list[float]:
    out = []
    for a, b in zip(clusters, clusters[1:]):
        closing = a.speed - b.speed
        if closing > 0.0:
            out.append(s + (b.position - a.position) / closing)
        else:
            out.append(np.inf)
    return out


def _snapshot(clusters: list[Cluster], n: int) -> list[float]:
    # members of one cluster share the exact same stored float
    snap = [0.0] * n
    for c in clusters:
        for i in range(c.lo, c.hi + 1):
            snap[i - 1] = c.position
    return snap


def _merge_contacts(clusters: list[Cluster], s: float, tol: float,
                    events: list[MergeEvent]) -> bool:
    """Merge every run of adjacent clusters in contact at time s.

    Cascades until no candidate collision time lies within tol of s.
    Returns True if anything merged.
    """
    merged_any = False
    while len(clusters) > 1:
        cand = _collision_times(clusters, s)
        touching = [j for j, c in enumerate(cand) if c <= s + tol]
        if not touching:
            break
        merged_any = True
        runs: list[list[int]] = [[touching[0]]]
        for j in touching[1:]:
            if j == runs[-1][-1] + 1:
                runs[-1].append(j)
            else:
                runs.append([j])
        pass_events: list[MergeEvent] = []
        for run in reversed(runs):  # splice right to left so indices stay valid
            j0, j1 = run[0], run[-1] + 1
            group = clusters[j0 : j1 + 1]
            mass = sum(c.mass for c in group)
            momentum = sum(c.momentum for c in group)
            com = sum(c.mass * c.position for c in group) / mass
            pass_events.append(MergeEvent(
                time=s,
                merged=tuple((c.lo, c.hi) for c in group),
                position=com,
            ))
            clusters[j0 : j1 + 1] = [Cluster(
                lo=group[0].lo, hi=group[-1].hi,
                mass=mass, momentum=momentum, position=com,
            )]
        events.extend(reversed(pass_events))
    return merged_any


def simulate_inertia(inst: MomentInstance) -> ClusterResult:
    """Run the sticky dynamics to time t and record paths and merge events."""
    t, n = inst.t, inst.n
    tol = event_tolerance(t)
    phi = initial_speeds(inst.m)
    clusters = [
        Cluster(lo=i + 1, hi=i + 1, mass=float(mi), momentum=float(mi) * float(v),
                position=float(xi))
        for i, (xi, mi, v) in enumerate(zip(inst.x, inst.m, phi))
    ]
    events: list[MergeEvent] = []
    times = [0.0]
    snaps = [_snapshot(clusters, n)]
    momenta = [sum(c.mass * c.speed for c in clusters)]
    s = 0.0
    while len(clusters) > 1:
        cand = _collision_times(clusters, s)
        s_next = min(cand)
        if not s_next <= t + tol:
            break
        s_evt = min(s_next, t)
        dt = s_evt - s
        for c in clusters:
            c.position += c.speed * dt
        s = s_evt
        if _merge_contacts(clusters, s, tol, events):
            times.append(s)
            snaps.append(_snapshot(clusters, n))
            momenta.append(sum(c.mass * c.speed for c in clusters))
        # else: rounding put the contact just beyond s; next iteration gets it
    if s < t:
        for c in clusters:
            c.position += c.speed * (t - s)
    if times[-1] < t:
        times.append(t)
        snaps.append(_snapshot(clusters, n))
        momenta.append(sum(c.mass * c.speed for c in clusters))

    partition = tuple(c.members for c in clusters)
    masses = tuple(c.mass for c in clusters)
    terminal = tuple(c.position for c in clusters)
    drifts = tuple(p / t for p in terminal)
    grid = tuple(times)
    inertia_paths = tuple(
        PiecewiseLinearPath(grid, tuple(snap[i] for snap in snaps))
        for i in range(n)
    )
    drift_of_index = {}
    for c, v in zip(clusters, drifts):
        for i in range(c.lo, c.hi + 1):
            drift_of_index[i] = v
    optimal_paths = tuple(
        PiecewiseLinearPath(
            grid,
            tuple(snap[i] - drift_of_index[i + 1] * sk
                  for snap, sk in zip(snaps, grid)),
        )
        for i in range(n)
    )
    return ClusterResult(
        partition=partition,
        cluster_masses=masses,
        terminal_positions=terminal,
        drifts=drifts,
        events=tuple(events),
        inertia_paths=inertia_paths,
        optimal_paths=optimal_paths,
        momentum_at_breakpoints=tuple(momenta),
    )


def first_optimal_merge(res: ClusterResult, inst: MomentInstance) -> FirstMerge:
    """Collapse the instance at the first merge time s0.

    Locations sharing a cluster at s0 collapse to one location at their common
    drift-removed position xi(s0); the reduced instance (t - s0, x', m') has
    strictly fewer locations. Raises NoMerge if nothing merges before t.
    """
    if not res.events:
        raise NoMerge("no merge event in [0, t]")
    s0 = res.events[0].time
    k = res.inertia_paths[0].breakpoints.index(s0)
    zeta0 = [p.values[k] for p in res.inertia_paths]
    xi0 = [p.values[k] for p in res.optimal_paths]
    x_prime: list[float] = []
    m_prime: list[int] = []
    for i in range(inst.n):
        if i > 0 and zeta0[i] == zeta0[i - 1]:
            m_prime[-1] += inst.m[i]
        else:
            x_prime.append(xi0[i])
            m_prime.append(inst.m[i])
    if len(x_prime) >= inst.n:
        raise NoMerge("first event collapsed nothing")
    return FirstMerge(
        s0=s0,
        x_prime=tuple(x_prime),
        m_prime=tuple(m_prime),
        xi_at_s0=tuple(xi0),
    )


def separation_margins(inst: MomentInstance, partition: Sequence[Sequence[int]]) -> np.ndarray:
    """Strict slack of consecutive terminal blocks.

    Entry k is com_x(B_{k+1}) - com_x(B_k) - (mass(B_k) + mass(B_{k+1})) t / 2;
    every entry is positive iff consecutive blocks stay apart on [0, t].
    """
    x = np.asarray(inst.x)
    m = np.asarray(inst.m, dtype=float)
    coms, masses = [], []
    for block in partition:
        idx = [i - 1 for i in block]
        mb = m[idx].sum()
        coms.append(float((m[idx] * x[idx]).sum() / mb))
        masses.append(float(mb))
    out = []
    for k in range(len(coms) - 1):
        out.append(coms[k + 1] - coms[k] - (masses[k] + masses[k + 1]) * inst.t / 2.0)
    return np.asarray(out)
