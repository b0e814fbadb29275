"""Command-line front end.

Problem document (JSON)::

    {
      "x_alphabet": ["x1", "x2", "x3"],
      "y_alphabet": ["y"],
      "joint": [[0.3], [0.4], [0.3]],          # rows = x, columns = y
      "graph_edges": [["x1", "x2"], ["x2", "x3"]],
      "options": {"keep_dominated_sets": false}
    }

``graph_edges`` may be replaced by ``"sets": [["x1", "x3"], ["x2"]]``.

Exit codes: 0 ok, 2 invalid input, 3 iteration limit reached, 4 the
optimality check still finds an improvement after the reactivation limit,
5 (``check``) the given r is not a fixed point.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .corner import CornerQuery, max_entropy_distribution
from .geometry import RPoint, validate_r
from .model import Problem, ProblemError, load_problem
from .optimality import NotAFixedPointError, Verdict, check_fixed_point
from .oracle import OracleRefusal, brute_force_q, brute_force_r
from .solver import CONVERGED, MAX_ITERS, SolveReport, SolverConfig, solve

log = logging.getLogger("graphent")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_MAX_ITERS = 3
EXIT_NOT_OPTIMAL = 4
EXIT_NOT_FIXED_POINT = 5


class InputError(Exception):
    pass


def _num(v: float):
    v = float(v)
    return v if math.isfinite(v) else None


def read_json(path: str) -> dict:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise InputError(f"{path}: expected a JSON object")
    return doc


def read_problem(path: str) -> Problem:
    try:
        return load_problem(read_json(path))
    except ProblemError as exc:
        raise InputError(f"{path}: {exc}") from None


def r_to_doc(p: Problem, r: RPoint) -> list[dict]:
    out = []
    for j in range(p.nj):
        if not r.active[j] or not np.any(r.values[j] > 0):
            continue
        out.append({
            "set": list(p.set_labels(j)),
            "weights": {y: float(r.values[j, k]) for k, y in enumerate(p.y_labels)},
        })
    return out


def r_from_doc(p: Problem, entries) -> RPoint:
    if not isinstance(entries, list):
        raise InputError("'r' must be a list of {set, weights} entries")
    vals = np.zeros((p.nj, p.ny))
    for e in entries:
        try:
            j = p.set_index(e["set"])
        except (KeyError, ValueError, TypeError):
            raise InputError(f"r entry {e!r} does not name a set of the problem") from None
        w = e.get("weights")
        if isinstance(w, dict):
            unknown = set(w) - set(p.y_labels)
            if unknown:
                raise InputError(f"r entry weights reference unknown y letters {sorted(unknown)}")
            vals[j] = [float(w.get(y, 0.0)) for y in p.y_labels]
        elif isinstance(w, list) and len(w) == p.ny:
            vals[j] = [float(v) for v in w]
        else:
            raise InputError(f"r entry {e!r} has malformed weights")
    r = RPoint(vals)
    report = validate_r(p, r, tol=1e-9)
    if not report.ok:
        v = report.violations[0]
        raise InputError(f"r is not a point of K_r: {v.constraint} at {v.index} (magnitude {v.magnitude:.3g})")
    return r


def verdict_to_doc(p: Problem, v: Verdict | None) -> dict | None:
    if v is None:
        return None
    return {
        "optimal": v.optimal,
        "worst_set": list(p.set_labels(v.worst_set)) if v.worst_set is not None else None,
        "worst_value": _num(v.worst_value) if v.worst_value is not None else None,
        "tolerance": v.tolerance,
        "fixed_point_residual": v.residual,
        "improving_directions": [
            {"set": list(p.set_labels(j)),
             "t": {y: float(t[k]) for k, y in enumerate(p.y_labels)},
             "value": v.values[j].value}
            for j, t in v.directions.items()
        ],
        "inactive_sets": [
            {"set": list(p.set_labels(j)), "value": res.value, "gap": res.gap}
            for j, res in v.values.items()
        ],
        "suspect_active_sets": [list(p.set_labels(j)) for j in v.suspect_active],
    }


def config_from_args(args) -> SolverConfig:
    return SolverConfig(max_iters=args.max_iters, tol=args.tol, eps_act=args.eps_act,
                        init=args.init, seed=args.seed, trace_every=args.trace_every)


def result_document(p: Problem, rep: SolveReport, cfg: SolverConfig, bits: bool) -> dict:
    nats = rep.entropy_nats
    b = nats / math.log(2)
    return {
        "version": __version__,
        "entropy_nats": nats,
        "entropy_bits": b,
        "unit": "bits" if bits else "nats",
        "entropy": b if bits else nats,
        "iterations": rep.iterations,
        "termination": rep.termination,
        "duality_gap_nats": _num(rep.duality_gap),
        "optimality": verdict_to_doc(p, rep.optimality),
        "r": r_to_doc(p, rep.r_final),
        "a": {x: float(v) for x, v in zip(p.x_labels, rep.a_final.values)},
        "pruned_sets": [list(p.set_labels(j)) for j in rep.pruned_sets],
        "reactivated_sets": [list(p.set_labels(j)) for j in rep.reactivated_sets],
        "config": {
            "max_iters": cfg.max_iters, "tol": cfg.tol, "eps_act": cfg.eps_act,
            "init": cfg.init, "seed": cfg.seed, "trace_every": cfg.trace_every,
            "reactivation_limit": cfg.reactivation_limit, "check_tol": cfg.check_tol,
        },
    }


def write_trace(path: str, rep: SolveReport) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", "phi_nats", "max_delta", "active_sets"])
        for row in rep.trace:
            w.writerow([row.iteration, repr(row.phi_nats), repr(row.max_delta), row.active_sets])


def emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, allow_nan=False)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


def cmd_solve(args) -> int:
    p = read_problem(args.problem)
    cfg = config_from_args(args)
    rep = solve(p, cfg)
    if args.trace:
        write_trace(args.trace, rep)
    emit(result_document(p, rep, cfg, args.bits), args.out)
    if rep.termination == CONVERGED:
        return EXIT_OK
    if rep.termination == MAX_ITERS:
        log.warning("iteration limit reached; reporting best point so far")
        return EXIT_MAX_ITERS
    log.warning("optimality check still finds an improving set after %d reactivations",
                len(rep.reactivated_sets))
    return EXIT_NOT_OPTIMAL


def cmd_entropy(args) -> int:
    p = read_problem(args.problem)
    cfg = config_from_args(args)
    rep = solve(p, cfg, unconditioned=p.ny == 1)
    nats = rep.entropy_nats
    emit({"version": __version__, "entropy_nats": nats, "entropy_bits": nats / math.log(2),
          "unit": "bits" if args.bits else "nats",
          "entropy": nats / math.log(2) if args.bits else nats,
          "termination": rep.termination}, args.out)
    return EXIT_OK if rep.termination == CONVERGED else (
        EXIT_MAX_ITERS if rep.termination == MAX_ITERS else EXIT_NOT_OPTIMAL)


def cmd_enumerate(args) -> int:
    p = read_problem(args.problem)
    sets = [list(p.set_labels(j)) for j in range(p.nj)]
    emit({"version": __version__, "x_alphabet": list(p.x_labels), "count": len(sets), "sets": sets},
         args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    p = read_problem(args.problem)
    doc = read_json(args.r_file)
    if "r" not in doc:
        raise InputError(f"{args.r_file}: missing 'r'")
    r = r_from_doc(p, doc["r"])
    try:
        v = check_fixed_point(p, r, args.check_tol, args.fixed_point_tol)
    except NotAFixedPointError as exc:
        log.error("%s", exc)
        emit({"version": __version__, "fixed_point": False, "residual": _num(exc.residual)}, args.out)
        return EXIT_NOT_FIXED_POINT
    emit({"version": __version__, "fixed_point": True, **verdict_to_doc(p, v)}, args.out)
    return EXIT_OK


def cmd_tau(args) -> int:
    p = read_problem(args.problem)
    m = max_entropy_distribution(p, CornerQuery(tol=args.tol))
    t = m.tau
    emit({
        "version": __version__,
        "tau": t.tau,
        "log_tau_nats": t.log_tau,
        "log_tau_bits": t.log_tau_bits,
        "lower": t.lower,
        "upper": t.upper,
        "gap": t.gap,
        "approximate": t.approximate,
        "pi": {x: float(v) for x, v in zip(p.x_labels, m.pi)},
        "max_entropy_nats": m.value,
        "multiplicity": m.multiplicity,
    }, args.out)
    return EXIT_OK


def cmd_oracle(args) -> int:
    p = read_problem(args.problem)
    out = {"version": __version__}
    sides = ["q", "r"] if args.side == "both" else [args.side]
    for side in sides:
        fn = brute_force_q if side == "q" else brute_force_r
        try:
            res = fn(p, args.resolution)
        except OracleRefusal as exc:
            out[side] = {"refused": str(exc), "instance_dims": list(exc.dims)}
            continue
        out[side] = {
            "minimum_nats": _num(res.minimum),
            "slack_nats": _num(res.slack),
            "grid_resolution": res.grid_resolution,
            "grid_points": res.points,
            "instance_dims": list(res.instance_dims),
            "argmin": res.argmin.tolist(),
        }
    emit(out, args.out)
    return EXIT_OK


def _solver_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--tol", type=float, default=1e-10, help="stop when phi decreases by less (nats)")
    sp.add_argument("--max-iters", type=int, default=10000)
    sp.add_argument("--eps-act", type=float, default=0.0, help="pruning threshold (0 disables)")
    sp.add_argument("--init", choices=["uniform", "random"], default="uniform")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--trace-every", type=int, default=1)
    sp.add_argument("--bits", action="store_true", help="report 'entropy' in bits")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="graphent", description="Conditional graph entropy solver.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="run the alternating minimisation")
    sp.add_argument("problem")
    sp.add_argument("--out")
    sp.add_argument("--trace", help="write the iteration trace as CSV")
    _solver_flags(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("entropy", help="print only the entropy value")
    sp.add_argument("problem")
    sp.add_argument("--out")
    _solver_flags(sp)
    sp.set_defaults(func=cmd_entropy)

    sp = sub.add_parser("enumerate", help="list the set system in canonical order")
    sp.add_argument("problem")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_enumerate)

    sp = sub.add_parser("check", help="optimality check at a fixed point")
    sp.add_argument("problem")
    sp.add_argument("r_file", help="JSON with an 'r' list (a solve result works)")
    sp.add_argument("--check-tol", type=float, default=1e-6)
    sp.add_argument("--fixed-point-tol", type=float, default=1e-6)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("tau", help="tau(K_a) and a maximum-entropy distribution")
    sp.add_argument("problem")
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_tau)

    sp = sub.add_parser("oracle", help="brute-force grid minimum")
    sp.add_argument("problem")
    sp.add_argument("--resolution", type=float, default=None)
    sp.add_argument("--side", choices=["q", "r", "both"], default="both")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    # diagnostics go to stderr through a handler owned by this call, so
    # stdout only ever carries the document
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    saved = (log.level, log.propagate)
    log.addHandler(handler)
    log.setLevel(logging.WARNING - 10 * min(args.verbose, 2))
    log.propagate = False
    try:
        return args.func(args)
    except (InputError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_INVALID
    finally:
        log.removeHandler(handler)
        log.setLevel(saved[0])
        log.propagate = saved[1]


if __name__ == "__main__":
    sys.exit(main())
