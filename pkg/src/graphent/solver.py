"""Alternating minimisation q -> r -> q -> ... for conditional graph entropy.

The iteration is run on the r side through the stepping map F_r = R o Q;
phi_r(r^(n)) is the value phi(q^(n+1), r^(n)) of the alternating sequence
and never increases.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import APoint, QPoint, RPoint, perturbed_interior_q, uniform_interior_q
from .maps import map_A, map_Q, map_R, phi_r
from .model import Problem
from .optimality import NotAFixedPointError, Verdict, check_fixed_point, duality_gap

log = logging.getLogger(__name__)

FLOOR = 1e-300

CONVERGED = "converged"
MAX_ITERS = "max-iters"
REACTIVATION_LIMIT = "reactivated-restart"


class OutsideDomainError(ValueError):
    """Raised when the stepping map is applied outside K*_r."""


@dataclass
class SolverConfig:
    max_iters: int = 10000
    tol: float = 1e-10
    eps_act: float = 0.0
    init: str = "uniform"
    seed: int = 0
    trace_every: int = 1
    reactivation_limit: int = 5
    check_tol: float = 1e-6

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not 0 <= self.eps_act < 1:
            raise ValueError("eps_act must lie in [0, 1)")
        if self.init not in ("uniform", "random"):
            raise ValueError(f"unknown init {self.init!r}")
        if self.trace_every < 1:
            raise ValueError("trace_every must be positive")
        if self.reactivation_limit < 0:
            raise ValueError("reactivation_limit must be >= 0")
        if not self.check_tol > 0:
            raise ValueError("check_tol must be positive")


@dataclass
class TraceRow:
    iteration: int
    phi_nats: float
    max_delta: float
    active_sets: int


@dataclass
class SolveReport:
    entropy_nats: float
    q_final: QPoint
    r_final: RPoint
    a_final: APoint
    iterations: int
    termination: str
    trace: list[TraceRow]
    pruned_sets: list[int] = field(default_factory=list)
    reactivated_sets: list[int] = field(default_factory=list)
    optimality: Verdict | None = None
    residual: float = float("nan")
    duality_gap: float = float("inf")

    @property
    def entropy_bits(self) -> float:
        return self.entropy_nats / math.log(2)


def _floored(values: np.ndarray, active: np.ndarray) -> np.ndarray:
    return np.where(active[:, None], np.maximum(values, FLOOR), values)


def step(p: Problem, r: RPoint) -> RPoint:
    """One application of F_r = R o Q."""
    q = map_Q(p, r)
    if q is None:
        raise OutsideDomainError("r lies outside K*_r (some A_x vanishes); restart from an interior point")
    return RPoint(map_R(p, q).values, r.active.copy())


def step_unconditioned(p: Problem, r: RPoint) -> RPoint:
    """F_r for a single-letter Y: r_j <- D_j(r) r_j with D_j = sum_{x in j} p_x / A_x."""
    if p.ny != 1:
        raise ValueError("unconditioned step needs |Y| = 1")
    a = p.member.T.astype(float) @ r.values[:, 0]
    if np.any(a <= 0):
        raise OutsideDomainError("r lies outside K*_r (some A_x vanishes); restart from an interior point")
    d = p.member.astype(float) @ (p.px / a)
    return RPoint((d * r.values[:, 0])[:, None], r.active.copy())


def initial_q(p: Problem, cfg: SolverConfig) -> QPoint:
    if cfg.init == "random":
        return perturbed_interior_q(p, cfg.seed)
    return uniform_interior_q(p)


def prune(r: RPoint, eps_act: float) -> tuple[RPoint, list[int]]:
    """Deactivate active sets whose every coordinate is below ``eps_act``."""
    low = r.active & np.all(r.values < eps_act, axis=1)
    if not low.any():
        return r, []
    active = r.active & ~low
    vals = np.where(active[:, None], r.values, 0.0)
    vals = vals / vals.sum(axis=0, keepdims=True)
    return RPoint(vals, active), [int(j) for j in np.flatnonzero(low)]


def reactivate(p: Problem, r: RPoint, j: int, t: np.ndarray,
               eps0: float = 1e-2, max_halvings: int = 60) -> RPoint | None:
    """Put mass eps * t_y on set ``j`` and shrink the other coordinates of column y by (1 - eps t_y).

    eps starts at ``eps0`` and is halved until phi_r strictly decreases;
    returns ``None`` if no step size helps.
    """
    t = np.asarray(t, dtype=float)
    base = phi_r(p, r)
    eps = min(eps0, 0.5 / float(t.max()))
    for _ in range(max_halvings):
        vals = r.values * (1.0 - eps * t)[None, :]
        vals[j] = eps * t
        active = r.active.copy()
        active[j] = True
        cand = RPoint(vals, active)
        if phi_r(p, cand) < base:
            return cand
        eps *= 0.5
    return None


def solve(p: Problem, cfg: SolverConfig | None = None, r0: RPoint | None = None,
          unconditioned: bool = False) -> SolveReport:
    """Run the alternating minimisation and certify the end point.

    ``r0`` overrides the configured start q^(0) (sets with all-zero rows
    start inactive).  ``unconditioned`` selects the D_j update, valid only
    when |Y| = 1.
    """
    cfg = cfg or SolverConfig()
    stepper = step_unconditioned if unconditioned else step
    if r0 is None:
        r = map_R(p, initial_q(p, cfg))
    else:
        r = RPoint(np.array(r0.values, dtype=float),
                   np.asarray(r0.active, dtype=bool) & np.any(r0.values > 0, axis=1))
    pruned: list[int] = []
    reactivated: list[int] = []
    if cfg.eps_act > 0:
        r, gone = prune(r, cfg.eps_act)
        pruned += gone

    cur = phi_r(p, r)
    trace = [TraceRow(0, cur, float("nan"), int(r.active.sum()))]
    fp_tol = max(math.sqrt(cfg.tol), 1e-12)
    it = 0
    delta = float("inf")
    termination = MAX_ITERS
    verdict = None
    while True:
        converged = False
        while it < cfg.max_iters:
            it += 1
            new = stepper(p, RPoint(_floored(r.values, r.active), r.active))
            if cfg.eps_act > 0:
                new, gone = prune(new, cfg.eps_act)
                if gone:
                    log.debug("iteration %d: pruned sets %s", it, gone)
                    pruned += gone
            val = phi_r(p, new)
            delta = float(np.max(np.abs(new.values - r.values)))
            decrease = cur - val
            r, cur = new, val
            if it % cfg.trace_every == 0:
                trace.append(TraceRow(it, cur, delta, int(r.active.sum())))
            if decrease < cfg.tol and delta < fp_tol:
                converged = True
                break
        if trace[-1].iteration != it:
            trace.append(TraceRow(it, cur, delta, int(r.active.sum())))
        if not converged:
            termination = MAX_ITERS
            try:
                verdict = check_fixed_point(p, r, cfg.check_tol, max(fp_tol, 1e-6))
            except NotAFixedPointError:
                verdict = None
            break
        verdict = check_fixed_point(p, r, cfg.check_tol, max(fp_tol, 1e-6))
        if verdict.optimal:
            termination = CONVERGED
            break
        if len(reactivated) >= cfg.reactivation_limit:
            termination = REACTIVATION_LIMIT
            break
        j = verdict.worst_set
        moved = reactivate(p, r, j, verdict.directions[j])
        if moved is None:
            log.warning("reactivation of set %d did not decrease phi_r", j)
            termination = REACTIVATION_LIMIT
            break
        log.info("reactivating set %d (auxiliary maximum %.6g)", j, verdict.worst_value)
        reactivated.append(j)
        r = moved
        cur = phi_r(p, r)
        trace.append(TraceRow(it, cur, float("nan"), int(r.active.sum())))

    q = map_Q(p, r)
    return SolveReport(
        entropy_nats=cur,
        q_final=q if q is not None else uniform_interior_q(p),
        r_final=r,
        a_final=map_A(p, r),
        iterations=it,
        termination=termination,
        trace=trace,
        pruned_sets=pruned,
        reactivated_sets=reactivated,
        optimality=verdict,
        residual=delta,
        duality_gap=duality_gap(p, RPoint(_floored(r.values, r.active), r.active)),
    )


def entropy_conditional(p: Problem, cfg: SolverConfig | None = None) -> float:
    return solve(p, cfg).entropy_nats


def entropy_unconditioned(p: Problem, cfg: SolverConfig | None = None) -> float:
    """Graph entropy for a single-letter Y via the multiplicative D_j update."""
    return solve(p, cfg, unconditioned=True).entropy_nats
