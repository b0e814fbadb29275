"""Convex-corner quantities of K_a: its entropy, tau(K_a) and a maximising distribution.

tau(K_a) is the smallest t >= 1 with the constant vector 1/t in K_a, i.e.
1 / max_{r in K_r} min_x A_x(r).  The max-min is solved as a conic program
(each product prod_y r_{j|y}^{p^{y|x}} is the hypograph of a chain of
three-dimensional power cones with the exact exponents).  The multipliers
of the constraints A_x(r) >= s form the normal of a supporting hyperplane at
the constant point, which is the distribution of maximal entropy.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import cvxpy as cp
import numpy as np
from scipy.optimize import linprog

from .geometry import RPoint
from .maps import map_A
from .model import Problem
from .optimality import duality_gap
from .solver import SolverConfig, solve

log = logging.getLogger(__name__)


@dataclass
class CornerQuery:
    tol: float = 1e-6
    inner_budget: int = 20000

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass
class TauResult:
    tau: float
    lower: float
    upper: float
    r: RPoint
    pi: np.ndarray
    approximate: bool

    @property
    def log_tau(self) -> float:
        return math.log(self.tau)

    @property
    def log_tau_bits(self) -> float:
        return math.log2(self.tau)

    @property
    def gap(self) -> float:
        return self.upper - self.lower


@dataclass
class MaxEntropyResult:
    pi: np.ndarray
    value: float
    multiplicity: bool
    tau: TauResult


def corner_entropy(p: Problem, cfg: SolverConfig | None = None) -> float:
    """H_pi(K_a) for pi the X-marginal; equal to the conditional entropy."""
    return solve(p, cfg).entropy_nats


def _product_hypograph(u, r_row, w: np.ndarray) -> list:
    """Constraints u <= prod_y r_row[y] ** w[y] for positive weights summing to 1."""
    ys = [int(y) for y in np.flatnonzero(w > 0)]
    if len(ys) == 1:
        return [u <= r_row[ys[0]]]
    cons = []
    rest = 1.0
    cur = u
    for k, y in enumerate(ys[:-1]):
        alpha = min(max(w[y] / rest, 0.0), 1.0)
        rest -= w[y]
        if k == len(ys) - 2:
            nxt = r_row[ys[-1]]
        else:
            nxt = cp.Variable(nonneg=True)
        cons.append(cp.constraints.PowCone3D(r_row[y], nxt, cur, alpha))
        cur = nxt
    return cons


def max_min_a(p: Problem) -> tuple[float, RPoint, np.ndarray]:
    """Solve max_r min_x A_x(r); returns (value, maximiser, constraint multipliers)."""
    r = cp.Variable((p.nj, p.ny), nonneg=True)
    s = cp.Variable()
    cons = [cp.sum(r, axis=0) == 1]
    covers = []
    w = p.p_y_given_x
    for x in range(p.nx):
        terms = []
        for j in np.flatnonzero(p.member[:, x]):
            u = cp.Variable(nonneg=True)
            cons += _product_hypograph(u, r[int(j), :], w[x])
            terms.append(u)
        c = cp.sum(cp.hstack(terms)) >= s
        covers.append(c)
    prob = cp.Problem(cp.Maximize(s), cons + covers)
    prob.solve(solver=cp.CLARABEL)
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise RuntimeError(f"conic solver failed: {prob.status}")
    vals = np.clip(np.asarray(r.value, dtype=float), 0.0, None)
    vals = vals / vals.sum(axis=0, keepdims=True)
    duals = np.clip(np.array([float(c.dual_value) for c in covers]), 0.0, None)
    return float(s.value), RPoint(vals), duals


def contains_constant(p: Problem, t: float) -> bool:
    """Whether the constant vector 1/t lies in K_a."""
    value, _, _ = max_min_a(p)
    return value >= 1.0 / t


def tau(p: Problem, query: CornerQuery | None = None) -> TauResult:
    """tau(K_a) with a certified bracket [lower, upper].

    upper = 1 / min_x A_x(r) at the conic maximiser r (any r gives an upper
    bound); lower = exp(H_pi(K_a)) for the multiplier distribution pi, where
    H_pi is bounded from below by phi_r minus the convexity gap of an
    interior solver iterate.
    """
    query = query or CornerQuery()
    value, r, duals = max_min_a(p)
    pi = duals / duals.sum() if duals.sum() > 0 else np.full(p.nx, 1.0 / p.nx)

    a = map_A(p, r).values
    upper = 1.0 / float(a.min()) if a.min() > 0 else math.inf

    sub = p.with_x_distribution(pi)
    rep = solve(sub, SolverConfig(max_iters=query.inner_budget, tol=1e-14))
    h_lower = rep.entropy_nats - duality_gap(sub, RPoint(np.maximum(rep.r_final.values, 1e-300)))
    lower = max(1.0, math.exp(h_lower)) if math.isfinite(h_lower) else 1.0
    lower = min(lower, upper)

    t = min(max(1.0 / value, lower), upper) if value > 0 else upper
    approximate = upper - lower > query.tol
    if approximate:
        log.warning("tau bracket [%.9g, %.9g] wider than tol %.3g", lower, upper, query.tol)
    return TauResult(t, lower, upper, r, pi, approximate)


def _normal_is_unique(p: Problem, pi: np.ndarray, t: float, tol: float) -> bool:
    """Unconditioned case: the optimal normals form the polytope
    {pi in simplex : sum_{x in j} pi_x <= 1/t for all j}; it is a point iff
    every coordinate has equal min and max over it."""
    a_ub = p.member.astype(float)
    b_ub = np.full(p.nj, 1.0 / t + tol)
    a_eq = np.ones((1, p.nx))
    for x in range(p.nx):
        c = np.zeros(p.nx)
        c[x] = 1.0
        lo = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], bounds=(0, None), method="highs")
        hi = linprog(-c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], bounds=(0, None), method="highs")
        if lo.status != 0 or hi.status != 0:
            return False
        if -hi.fun - lo.fun > math.sqrt(tol):
            return False
    return True


def max_entropy_distribution(p: Problem, query: CornerQuery | None = None) -> MaxEntropyResult:
    """A distribution on X attaining max_pi H_pi(K_a) = log tau(K_a).

    ``multiplicity`` flags a non-unique supporting normal: decided exactly by
    linear programming when |Y| = 1; otherwise flagged when tau = 1 or when a
    tight constraint carries a zero multiplier.
    """
    query = query or CornerQuery()
    tr = tau(p, query)
    pi = tr.pi
    if tr.tau <= 1.0 + query.tol:
        pi = np.full(p.nx, 1.0 / p.nx)
        multiplicity = p.nx > 1
    elif p.ny == 1:
        multiplicity = not _normal_is_unique(p, pi, tr.tau, 1e-9)
    else:
        a = map_A(p, tr.r).values
        tight = a <= (1.0 / tr.tau) * (1 + 1e-6)
        multiplicity = bool(np.any(tight & (pi < 1e-9)))
    value = solve(p.with_x_distribution(pi),
                  SolverConfig(max_iters=query.inner_budget, tol=1e-14)).entropy_nats
    return MaxEntropyResult(pi, value, multiplicity, tr)
