"""Command line interface.

Subcommands:
    gamma     three-route exponent report for one instance (JSON)
    clusters  sticky-dynamics paths, merge events and partition (CSV or JSON)
    verify    seeded randomized cross-check suites
    moments   contour-quadrature moment and rate at scale T
    sweep     one-parameter grid of exponents (CSV or JSON)

Exit codes: 0 success, 1 invalid input (machine-readable error object on
stderr), 2 tolerance or suite failure. Floats are printed with 17 significant
digits so every value round-trips exactly. Identical invocations produce
byte-identical output; LYAP_THREADS caps worker threads for verify and sweep
without changing the output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

from .clusters import block_com_speed, separation_margins, simulate_inertia
from .closedform import gamma_report, verify_recursion_identity
from .errors import ShelyapError
from .instance import MomentInstance, flatten, validate_instance
from .quadrature import (
    ContourConfig,
    contour_moment,
    contour_moment_complex,
    default_contour_config,
    heat_kernel,
    lyapunov_rate_estimate,
    upper_bound_value,
)
from .sampling import random_instance, sample_matching
from .solvers import oracle_gamma1, oracle_gamma2, solve_gamma1, solve_gamma2

TRIPLE_TOL = 1e-8
ORACLE_OBJ_TOL = 1e-10
ORACLE_COORD_TOL = 1e-8
RECURSION_TOL = 1e-9
MOMENTUM_TOL = 1e-12
ANCHOR_TOL = 1e-12
COM_TOL = 1e-10
QUAD_REL_TOL = 1e-8


def format_float(v: float) -> str:
    return f"{v:.17g}"


def dumps_json(obj, indent: int = 0) -> str:
    """Deterministic JSON with %.17g floats (json module can't control that)."""
    sp = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        rows = ",\n".join(
            f'{sp}  {json.dumps(str(k))}: {dumps_json(v, indent + 1)}'
            for k, v in obj.items()
        )
        return "{\n" + rows + "\n" + sp + "}"
    if isinstance(obj, (list, tuple)):
        items = list(obj)
        flat = all(not isinstance(v, (dict, list, tuple)) for v in items)
        flat_rows = not flat and all(
            isinstance(v, (list, tuple))
            and all(not isinstance(u, (dict, list, tuple)) for u in v)
            for v in items
        )
        if flat or flat_rows:
            return "[" + ", ".join(dumps_json(v) for v in items) + "]"
        rows = ",\n".join(f"{sp}  " + dumps_json(v, indent + 1) for v in items)
        return "[\n" + rows + "\n" + sp + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fail(exc: BaseException) -> int:
    sys.stderr.write(
        dumps_json({"error": type(exc).__name__, "message": str(exc)}) + "\n"
    )
    return 1


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("LYAP_THREADS", "1")))
    except ValueError:
        return 1


def _map_ordered(fn: Callable, items: Sequence) -> list:
    items = list(items)
    k = _thread_count()
    if k == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=k) as ex:
        return list(ex.map(fn, items))


def _parse_floats(text: str) -> list[float]:
    return [float(s) for s in text.split(",") if s.strip()]


def _load_instance(args) -> MomentInstance:
    inline = args.t is not None or args.x is not None or args.m is not None
    if args.input and inline:
        raise ShelyapError("give either --input or inline --t/--x/--m, not both")
    if args.input:
        with open(args.input) as fh:
            doc = json.load(fh)
        for key in ("t", "x", "m"):
            if key not in doc:
                raise ShelyapError(f"instance file missing key {key!r}")
        return validate_instance(doc["t"], doc["x"], doc["m"])
    if args.t is None or args.x is None or args.m is None:
        raise ShelyapError("need --input FILE or all of --t/--x/--m")
    return validate_instance(
        float(args.t), _parse_floats(args.x), [int(v) for v in _parse_floats(args.m)]
    )


def _add_instance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="instance JSON file with keys t, x, m")
    p.add_argument("--t", help="horizon t > 0")
    p.add_argument("--x", help="comma-separated strictly increasing locations")
    p.add_argument("--m", help="comma-separated integer multiplicities >= 1")
    p.add_argument("--output", help="write result here instead of stdout")


# --- gamma ------------------------------------------------------------------

def cmd_gamma(args) -> int:
    inst = _load_instance(args)
    rep = gamma_report(inst)
    _emit(dumps_json(rep.to_json_dict()) + "\n", args.output)
    ok = (
        rep.max_pairwise_dev <= args.tolerance * (1.0 + abs(rep.gamma3))
        and rep.structure_ok
    )
    return 0 if ok else 2


# --- clusters ----------------------------------------------------------------

def cmd_clusters(args) -> int:
    inst = _load_instance(args)
    res = simulate_inertia(inst)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "s", "zeta", "xi"])
        grid = res.inertia_paths[0].breakpoints
        for i in range(inst.n):
            zeta = res.inertia_paths[i].values
            xi = res.optimal_paths[i].values
            for s, zv, xv in zip(grid, zeta, xi):
                w.writerow([i + 1, format_float(s), format_float(zv), format_float(xv)])
        _emit(buf.getvalue(), args.output)
        return 0
    doc = {
        "partition": [list(b) for b in res.partition],
        "q_hat": res.q_hat,
        "cluster_masses": list(res.cluster_masses),
        "terminal_positions": list(res.terminal_positions),
        "drifts": list(res.drifts),
        "events": [
            {"time": e.time, "merged": [list(iv) for iv in e.merged],
             "position": e.position}
            for e in res.events
        ],
        "breakpoints": list(res.inertia_paths[0].breakpoints),
        "zeta": [list(p.values) for p in res.inertia_paths],
        "xi": [list(p.values) for p in res.optimal_paths],
    }
    _emit(dumps_json(doc) + "\n", args.output)
    return 0


# --- verify -------------------------------------------------------------------

def _check_triple(inst: MomentInstance) -> bool:
    rep = gamma_report(inst)
    return rep.max_pairwise_dev <= TRIPLE_TOL * (1.0 + abs(rep.gamma3))


def _check_oracle(inst: MomentInstance) -> bool:
    flat = flatten(inst)
    for fast, slow in (
        (solve_gamma1(flat, inst.t), oracle_gamma1(flat, inst.t)),
        (solve_gamma2(inst), oracle_gamma2(inst)),
    ):
        if abs(fast.objective - slow.objective) > ORACLE_OBJ_TOL:
            return False
        dev = max(abs(p - q) for p, q in zip(fast.values, slow.values))
        if dev > ORACLE_COORD_TOL:
            return False
    return True


def _check_structure(inst: MomentInstance) -> bool | None:
    """None means boundary-flagged, excluded from the count."""
    rep = gamma_report(inst)
    if rep.boundary:
        return None
    return rep.structure_ok


def _check_recursion(inst: MomentInstance) -> bool:
    chk = verify_recursion_identity(inst)
    return chk.abs_diff <= RECURSION_TOL * (1.0 + abs(chk.rhs))


def _check_physics(inst: MomentInstance) -> bool:
    res = simulate_inertia(inst)
    if sum(res.cluster_masses) != float(inst.nu):
        return False
    if max(abs(p) for p in res.momentum_at_breakpoints) > MOMENTUM_TOL:
        return False
    if max(abs(p.values[-1]) for p in res.optimal_paths) > ANCHOR_TOL:
        return False
    t = inst.t
    m = np.asarray(inst.m, dtype=float)
    for block, mass in zip(res.partition, res.cluster_masses):
        if sum(inst.m[i - 1] for i in block) != mass:
            return False
        psi = block_com_speed(inst.m, block)
        idx = [i - 1 for i in block]
        mb = m[idx]
        com0 = sum(
            mb[j] * res.inertia_paths[i].at(0.0) for j, i in enumerate(idx)
        ) / mass
        for s in (t / 2.0, t):
            com_s = sum(
                mb[j] * res.inertia_paths[i].at(s) for j, i in enumerate(idx)
            ) / mass
            if abs(com_s - com0 - psi * s) > COM_TOL:
                return False
    if any(p >= q for p, q in zip(res.terminal_positions, res.terminal_positions[1:])):
        return False
    if res.q_hat > 1 and not np.all(separation_margins(inst, res.partition) > 0.0):
        return False
    return True


def _quadrature_checks(rng: np.random.Generator, count: int) -> list[bool]:
    if count == 0:
        return []
    out: list[bool] = []
    for _ in range(count):
        T = float(rng.uniform(0.5, 10.0))
        t = float(rng.uniform(0.2, 3.0))
        x0 = float(rng.uniform(-1.5, 1.5))
        inst = validate_instance(t, [x0], [1])
        cfg = default_contour_config(T, inst, points=200)
        mom = contour_moment(T, inst, cfg)
        ref = heat_kernel(T * t, T * x0)
        ok = abs(mom - ref) <= QUAD_REL_TOL * ref
        # default offset [-x/t] makes the bound tight, so allow quadrature slack
        ub = upper_bound_value(T, flatten(inst), t, cfg.offsets)
        out.append(ok and mom <= ub * (1.0 + QUAD_REL_TOL))
    # shift invariance and strict domination on a two-coordinate instance
    inst = validate_instance(1.0, [0.0], [2])
    base_cfg = default_contour_config(4.0, inst)
    base = contour_moment(4.0, inst, base_cfg)
    ok_shift = True
    for delta in (-0.5, 0.25, 0.5):
        cfg = ContourConfig(
            offsets=tuple(a + delta for a in base_cfg.offsets),
            truncation=base_cfg.truncation,
            points=base_cfg.points,
        )
        if abs(contour_moment(4.0, inst, cfg) - base) > QUAD_REL_TOL * abs(base):
            ok_shift = False
    out.append(ok_shift)
    wide = tuple(a + 0.4 for a in base_cfg.offsets)
    ub = upper_bound_value(
        4.0, flatten(inst), 1.0,
        wide,
    )
    cfg = ContourConfig(offsets=wide, truncation=base_cfg.truncation,
                        points=base_cfg.points)
    out.append(contour_moment(4.0, inst, cfg) <= ub)
    return out


def _run_suite(name: str, seed: int, count: int) -> dict:
    idx = SUITE_INDEX[name]
    rng = np.random.default_rng([seed, idx])
    skipped = 0
    if name == "triple":
        insts = [random_instance(rng) for _ in range(count)]
        results = _map_ordered(_check_triple, insts)
    elif name == "oracle":
        insts = sample_matching(rng, lambda i: i.nu <= 10, count)
        results = _map_ordered(_check_oracle, insts)
    elif name == "structure":
        insts = [random_instance(rng) for _ in range(count)]
        raw = _map_ordered(_check_structure, insts)
        skipped = sum(1 for r in raw if r is None)
        results = [r for r in raw if r is not None]
    elif name == "recursion":
        insts = sample_matching(
            rng, lambda i: i.n >= 2 and simulate_inertia(i).q_hat == 1, count
        )
        results = _map_ordered(_check_recursion, insts)
    elif name == "physics":
        insts = [random_instance(rng) for _ in range(count)]
        results = _map_ordered(_check_physics, insts)
    elif name == "quadrature":
        results = _quadrature_checks(rng, count)
    else:
        raise ShelyapError(f"unknown suite {name!r}")
    return {
        "suite": name,
        "pass": sum(1 for r in results if r),
        "total": len(results),
        "skipped": skipped,
    }


SUITE_INDEX = {
    "triple": 0,
    "oracle": 1,
    "structure": 2,
    "recursion": 3,
    "physics": 4,
    "quadrature": 5,
}


def cmd_verify(args) -> int:
    names = list(SUITE_INDEX) if args.suites is None else [
        s.strip() for s in args.suites.split(",") if s.strip()
    ]
    for s in names:
        if s not in SUITE_INDEX:
            raise ShelyapError(f"unknown suite {s!r}; pick from {', '.join(SUITE_INDEX)}")
    lines = []
    all_ok = True
    for name in names:
        r = _run_suite(name, args.seed, args.count)
        note = f" ({r['skipped']} boundary skipped)" if r["skipped"] else ""
        lines.append(f"{r['suite']}: {r['pass']}/{r['total']} pass{note}")
        all_ok = all_ok and r["pass"] == r["total"]
    lines.append("VERIFY PASS" if all_ok else "VERIFY FAIL")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0 if all_ok else 2


# --- moments -------------------------------------------------------------------

def cmd_moments(args) -> int:
    inst = _load_instance(args)
    T = float(args.T)
    if args.offsets is not None:
        nu = inst.nu
        points = args.points if args.points else (200 if nu <= 2 else 96)
        cfg = ContourConfig(
            offsets=tuple(_parse_floats(args.offsets)),
            truncation=args.truncation_sigmas / math.sqrt(T * inst.t),
            points=points,
            rule=args.rule,
        )
    else:
        cfg = default_contour_config(
            T, inst, points=args.points,
            truncation_sigmas=args.truncation_sigmas, rule=args.rule,
        )
    val = contour_moment_complex(T, inst, cfg)
    rate = lyapunov_rate_estimate(T, inst, cfg)
    gamma = solve_gamma1(flatten(inst), inst.t).objective
    doc = {
        "moment": val.real,
        "rate": rate,
        "gamma": gamma,
        "gap": rate - gamma,
        "imag_residual": abs(val.imag) / max(abs(val.real), 1e-300),
        "offsets": list(cfg.offsets),
        "points": cfg.points,
        "truncation": cfg.truncation,
    }
    _emit(dumps_json(doc) + "\n", args.output)
    return 0


# --- sweep --------------------------------------------------------------------

def _parse_grid(text: str) -> np.ndarray:
    parts = text.split(":")
    if len(parts) != 3:
        raise ShelyapError(f"grid {text!r} must be start:stop:count")
    try:
        start, stop, num = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as e:
        raise ShelyapError(f"malformed grid {text!r}: {e}") from None
    if num < 0:
        raise ShelyapError(f"grid count {num} must be >= 0")
    return np.linspace(start, stop, num)


def _sweep_row(inst: MomentInstance, value: float) -> tuple:
    rep = gamma_report(inst)
    res = simulate_inertia(inst)
    s0 = res.events[0].time if res.events else None
    return value, rep.gamma3, res.q_hat, s0


def cmd_sweep(args) -> int:
    base = _load_instance(args)
    grid = _parse_grid(args.grid)
    param = args.param
    if param != "t":
        if not (param.startswith("x") and param[1:].isdigit()):
            raise ShelyapError(f"param {param!r} must be 't' or 'x<i>'")
        loc = int(param[1:])
        if not 1 <= loc <= base.n:
            raise ShelyapError(f"param {param!r} out of range for n={base.n}")

    def make(value: float) -> MomentInstance:
        if param == "t":
            return validate_instance(value, base.x, base.m)
        xs = list(base.x)
        xs[loc - 1] = value
        return validate_instance(base.t, xs, base.m)

    insts = [make(float(v)) for v in grid]
    rows = _map_ordered(lambda iv: _sweep_row(iv[0], iv[1]),
                        list(zip(insts, [float(v) for v in grid])))
    if args.format == "json":
        doc = [
            {"parameter": v, "gamma": g, "q_hat": q, "s0": s0}
            for v, g, q, s0 in rows
        ]
        _emit(dumps_json(doc) + "\n", args.output)
        return 0
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["parameter", "gamma", "q_hat", "s0"])
    for v, g, q, s0 in rows:
        w.writerow([
            format_float(v), format_float(g), q,
            "" if s0 is None else format_float(s0),
        ])
    _emit(buf.getvalue(), args.output)
    return 0


# --- wiring -------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        sys.stderr.write(
            dumps_json({"error": "UsageError", "message": message}) + "\n"
        )
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="shelyap", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gamma", help="three-route exponent report")
    _add_instance_args(g)
    g.add_argument("--tolerance", type=float, default=TRIPLE_TOL,
                   help="relative agreement tolerance (default 1e-8)")
    g.set_defaults(func=cmd_gamma)

    c = sub.add_parser("clusters", help="sticky-dynamics paths and partition")
    _add_instance_args(c)
    c.add_argument("--format", choices=("json", "csv"), default="json")
    c.set_defaults(func=cmd_clusters)

    v = sub.add_parser("verify", help="seeded randomized cross-check suites")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--count", type=int, default=100,
                   help="instances (or checks) per suite")
    v.add_argument("--suites", help=f"comma list from: {', '.join(SUITE_INDEX)}")
    v.set_defaults(func=cmd_verify)

    q = sub.add_parser("moments", help="contour moment and rate at scale T")
    _add_instance_args(q)
    q.add_argument("--T", required=True, type=float, help="moment scale T > 0")
    q.add_argument("--points", type=int, help="grid points per axis")
    q.add_argument("--truncation-sigmas", type=float, default=8.0,
                   help="half-width Y = sigmas/sqrt(T t)")
    q.add_argument("--offsets", help="comma-separated contour offsets")
    q.add_argument("--rule", choices=("gauss", "trapezoid"), default="gauss")
    q.set_defaults(func=cmd_moments)

    s = sub.add_parser("sweep", help="exponent along a parameter grid")
    _add_instance_args(s)
    s.add_argument("--param", required=True, help="'t' or 'x<i>' (1-based)")
    s.add_argument("--grid", required=True, help="start:stop:count")
    s.add_argument("--format", choices=("csv", "json"), default="csv")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except ShelyapError as e:
        return _fail(e)
    except (OSError, json.JSONDecodeError, ValueError) as e:
        return _fail(e)


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
