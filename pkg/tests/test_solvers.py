"""Tests for the isotonic solvers and the brute-force oracle."""

import numpy as np
import pytest

from shelyap import (
    DimensionTooLarge,
    LengthMismatch,
    bruteforce_chain_qp,
    build_b_from_clusters,
    check_minimizer_structure,
    flatten,
    gamma1_objective,
    gamma2_objective,
    isotonic_nonincreasing,
    lift_b_to_a,
    oracle_gamma1,
    oracle_gamma2,
    simulate_inertia,
    solve_gamma1,
    solve_gamma2,
    validate_instance,
)


def random_interior_instance(rng, max_n=6, max_m=6):
    while True:
        n = int(rng.integers(1, max_n))
        t = float(rng.uniform(0.2, 4.0))
        x = np.sort(rng.uniform(-3.0, 3.0, size=n))
        if n > 1 and np.min(np.diff(x)) < 1e-3:
            continue
        m = [int(v) for v in rng.integers(1, max_m, size=n)]
        return validate_instance(t, x, m)


def test_isotonic_pools_adjacent_violation():
    fit = isotonic_nonincreasing([1.0, 1.5], [1.0, 1.0])
    assert fit == pytest.approx([1.25, 1.25])


def test_isotonic_weighted_pool():
    # pooling [0, 2] with weights [1, 2] gives 4/3; the trailing 1 then
    # satisfies 4/3 >= 1 and stays un-pooled
    fit = isotonic_nonincreasing([0.0, 2.0, 1.0], [1.0, 2.0, 1.0])
    assert fit == pytest.approx([4.0 / 3.0, 4.0 / 3.0, 1.0])


def test_isotonic_leaves_decreasing_input_alone():
    fit = isotonic_nonincreasing([3.0, 1.0, 0.5], [1.0, 1.0, 1.0])
    assert fit == pytest.approx([3.0, 1.0, 0.5])


def test_isotonic_rejects_bad_shapes():
    with pytest.raises(LengthMismatch):
        isotonic_nonincreasing([1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        isotonic_nonincreasing([1.0], [0.0])


def test_isotonic_kkt_certificate():
    # within each pooled block the weighted residual prefix sums must be
    # nonnegative and the block total must vanish
    rng = np.random.default_rng(11)
    for _ in range(200):
        d = int(rng.integers(1, 12))
        z = rng.normal(size=d)
        w = rng.uniform(0.1, 5.0, size=d)
        fit = isotonic_nonincreasing(z, w)
        assert np.all(np.diff(fit) <= 1e-12)
        i = 0
        while i < d:
            j = i
            while j + 1 < d and abs(fit[j + 1] - fit[i]) <= 1e-12:
                j += 1
            resid = w[i : j + 1] * (fit[i : j + 1] - z[i : j + 1])
            prefix = np.cumsum(resid)
            assert np.all(prefix >= -1e-9)
            assert abs(prefix[-1]) <= 1e-9
            i = j + 1


def test_solve_gamma1_two_point_example():
    inst = validate_instance(1.0, [0.0, 0.5], [1, 1])
    sol = solve_gamma1(flatten(inst), inst.t)
    assert sol.values == pytest.approx((0.25, -0.75))
    assert sol.objective == pytest.approx(-0.0625)
    assert sol.active == frozenset({1})


def test_solve_gamma1_single_coordinate():
    inst = validate_instance(1.0, [0.0], [1])
    sol = solve_gamma1(flatten(inst), inst.t)
    assert sol.values == pytest.approx((0.0,))
    assert sol.objective == pytest.approx(0.0)
    assert sol.active == frozenset()


def test_solve_gamma1_wide_pair_inactive():
    inst = validate_instance(1.0, [0.0, 2.0], [1, 1])
    sol = solve_gamma1(flatten(inst), inst.t)
    assert sol.values == pytest.approx((0.0, -2.0))
    assert sol.objective == pytest.approx(-2.0)
    assert sol.active == frozenset()


def test_solve_gamma2_single_location():
    inst = validate_instance(1.0, [0.0], [2])
    sol = solve_gamma2(inst)
    assert sol.values == pytest.approx((0.0,))
    assert sol.objective == pytest.approx(0.25)


def test_solve_gamma2_matches_gamma1_through_lift():
    rng = np.random.default_rng(23)
    for _ in range(100):
        inst = random_interior_instance(rng)
        flat = flatten(inst)
        s1 = solve_gamma1(flat, inst.t)
        s2 = solve_gamma2(inst)
        tol = 1e-10 * (1 + abs(s1.objective))
        assert s2.objective == pytest.approx(s1.objective, abs=tol)
        lifted = lift_b_to_a(s2.values, inst)
        assert gamma1_objective(flat, inst.t, lifted) == pytest.approx(
            s1.objective, abs=tol
        )


def test_lift_objective_identity_for_arbitrary_b():
    # the staircase lift preserves the objective for any b, feasible or
    # not: the within-block terms telescope exactly
    rng = np.random.default_rng(31)
    for _ in range(100):
        inst = random_interior_instance(rng)
        b = rng.normal(scale=2.0, size=inst.n)
        a = lift_b_to_a(b, inst)
        lhs = gamma1_objective(flatten(inst), inst.t, a)
        rhs = gamma2_objective(inst, b)
        assert lhs == pytest.approx(rhs, abs=1e-9 * (1 + abs(rhs)))


def test_lift_frozen_example():
    inst = validate_instance(1.0, [0.0], [3])
    a = lift_b_to_a([0.0], inst)
    assert a == pytest.approx([1.0, 0.0, -1.0])


def test_lift_two_blocks():
    inst = validate_instance(1.0, [0.0, 0.5], [2, 1])
    a = lift_b_to_a([1.0, -1.0], inst)
    # block 1 spreads 1.0 into (1.5, 0.5); block 2 keeps -1.0
    assert a == pytest.approx([1.5, 0.5, -1.0])


def test_lift_rejects_wrong_length():
    inst = validate_instance(1.0, [0.0, 0.5], [2, 1])
    with pytest.raises(LengthMismatch):
        lift_b_to_a([0.0], inst)


def test_oracle_matches_solver_gamma1():
    rng = np.random.default_rng(47)
    checked = 0
    while checked < 60:
        inst = random_interior_instance(rng, max_m=4)
        if inst.nu > 10:
            continue
        flat = flatten(inst)
        sol = solve_gamma1(flat, inst.t)
        ora = oracle_gamma1(flat, inst.t)
        assert sol.objective == pytest.approx(ora.objective, abs=1e-10)
        assert np.allclose(sol.values, ora.values, atol=1e-8)
        checked += 1


def test_oracle_matches_solver_gamma2():
    rng = np.random.default_rng(59)
    for _ in range(60):
        inst = random_interior_instance(rng)
        sol = solve_gamma2(inst)
        ora = oracle_gamma2(inst)
        assert sol.objective == pytest.approx(ora.objective, abs=1e-10)
        assert np.allclose(sol.values, ora.values, atol=1e-8)


def test_oracle_prefers_empty_active_set():
    inst = validate_instance(1.0, [0.0, 2.0], [1, 1])
    ora = oracle_gamma2(inst)
    # unconstrained optimum (0, -2) is feasible with gap 2 > 1 and beats
    # the glued candidate's -1.75
    assert ora.active == frozenset()
    assert ora.objective == pytest.approx(-2.0)


def test_oracle_dimension_cap():
    d = 21
    with pytest.raises(DimensionTooLarge):
        bruteforce_chain_qp(
            weights=(1.0,) * d,
            linear=tuple(float(-k) for k in range(d)),
            margins=(1.0,) * (d - 1),
        )


def test_oracle_rejects_inconsistent_shapes():
    with pytest.raises(LengthMismatch):
        bruteforce_chain_qp(weights=(1.0, 1.0), linear=(0.0, 0.0), margins=())


def test_minimizer_is_strict_local_minimum():
    # step along a feasible direction: sorting the direction decreasingly
    # within each active run keeps the chain satisfied, and strict
    # convexity forces the objective up by at least (t/2) * step^2
    rng = np.random.default_rng(71)
    for _ in range(50):
        inst = random_interior_instance(rng, max_m=4)
        flat = flatten(inst)
        sol = solve_gamma1(flat, inst.t)
        base = np.asarray(sol.values)
        d = rng.normal(size=flat.nu)
        i = 0
        while i < flat.nu:
            j = i
            while j < flat.nu - 1 and (j + 1) in sol.active:
                j += 1
            d[i : j + 1] = np.sort(d[i : j + 1])[::-1]
            i = j + 1
        d /= np.linalg.norm(d)
        stepped = base + 1e-3 * d
        if flat.nu > 1 and not np.all(np.diff(stepped) <= -1.0 + 1e-9):
            continue  # a slack constraint sat too close to its margin
        assert gamma1_objective(flat, inst.t, stepped) > sol.objective + 1e-10


def test_build_b_singleton():
    inst = validate_instance(2.0, [1.0], [3])
    b = build_b_from_clusters(simulate_inertia(inst), inst)
    assert b == pytest.approx([-0.5])


def test_build_b_pair_matches_solver():
    inst = validate_instance(1.0, [0.0, 0.5], [1, 1])
    b = build_b_from_clusters(simulate_inertia(inst), inst)
    assert b == pytest.approx([0.25, -0.75])
    sol = solve_gamma2(inst)
    assert b == pytest.approx(sol.values)


def test_build_b_consistency_random():
    rng = np.random.default_rng(83)
    for _ in range(80):
        inst = random_interior_instance(rng)
        b = build_b_from_clusters(simulate_inertia(inst), inst)
        sol = solve_gamma2(inst)
        assert gamma2_objective(inst, b) == pytest.approx(
            sol.objective, abs=1e-9 * (1 + abs(sol.objective))
        )


def test_build_b_is_feasible():
    rng = np.random.default_rng(97)
    for _ in range(80):
        inst = random_interior_instance(rng)
        if inst.n < 2:
            continue
        b = build_b_from_clusters(simulate_inertia(inst), inst)
        m = np.asarray(inst.m, dtype=float)
        req = 0.5 * (m[:-1] + m[1:])
        assert np.all(-np.diff(b) >= req - 1e-9)


def test_structure_check_on_interior_instance():
    inst = validate_instance(1.0, [0.0, 0.5], [1, 1])
    flat = flatten(inst)
    sol = solve_gamma1(flat, inst.t)
    report = check_minimizer_structure(sol, flat, simulate_inertia(inst))
    assert report.ok
    assert not report.boundary
    assert len(report.records) == 1
    rec = report.records[0]
    assert rec.tight and rec.same_block and rec.agree


def test_structure_check_two_blocks():
    inst = validate_instance(1.0, [0.0, 0.3, 0.6, 3.0, 3.3], [1] * 5)
    flat = flatten(inst)
    sol = solve_gamma1(flat, inst.t)
    report = check_minimizer_structure(sol, flat, simulate_inertia(inst))
    assert report.ok
    assert [r.tight for r in report.records] == [True, True, False, True]
    assert [r.same_block for r in report.records] == [True, True, False, True]


def test_structure_check_random_agreement():
    rng = np.random.default_rng(101)
    boundary = 0
    for _ in range(300):
        inst = random_interior_instance(rng)
        flat = flatten(inst)
        sol = solve_gamma1(flat, inst.t)
        report = check_minimizer_structure(sol, flat, simulate_inertia(inst))
        if report.boundary:
            boundary += 1
        else:
            assert report.ok
    # boundary skips must stay rare for generic draws
    assert boundary < 30
