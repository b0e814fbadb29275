"""First-order optimality certificate at a fixed point of the stepping map.

For a set j that carries no mass, moving r_{j|.} off zero in direction t
changes phi_r at rate -sum_{x in j} (p_x / a_x) prod_y t_y^{p^{y|x}}, while
the compensating decrease of the active coordinates costs sum_y p^y t_y.
So the point is a minimum iff, for every inactive j,

    max { sum_{x in j} (p_x / a_x) prod_y t_y^{p^{y|x}} : t >= 0, sum_y p^y t_y = 1 } <= 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import RPoint
from .maps import map_A, step_r
from .model import Problem, mask_members

CHECK_TOL = 1e-6
FIXED_POINT_TOL = 1e-6


class NotAFixedPointError(ValueError):
    def __init__(self, residual: float, tol: float):
        super().__init__(f"r is not a fixed point: residual {residual:.3g} exceeds {tol:.3g}")
        self.residual = residual
        self.tol = tol


@dataclass
class AuxResult:
    t: np.ndarray
    value: float
    gap: float
    iterations: int
    converged: bool

    @property
    def upper_bound(self) -> float:
        return self.value + self.gap


@dataclass
class Verdict:
    optimal: bool
    worst_set: int | None
    worst_value: float | None
    directions: dict[int, np.ndarray]
    tolerance: float
    residual: float
    values: dict[int, AuxResult] = field(default_factory=dict)
    active_values: dict[int, float] = field(default_factory=dict)
    suspect_active: list[int] = field(default_factory=list)


def aux_objective(c: np.ndarray, w: np.ndarray, t: np.ndarray) -> float:
    """sum_x c_x prod_y t_y^{w_xy}, with t^0 = 1."""
    with np.errstate(divide="ignore"):
        logt = np.log(t)
    with np.errstate(invalid="ignore"):
        terms = np.where(w > 0, w * logt[None, :], 0.0)
    return float(np.sum(c * np.exp(terms.sum(axis=1))))


def aux_maximize(p: Problem, j: int, a, budget: int = 10000, tol: float = 1e-12) -> AuxResult:
    """Maximise the directional-derivative objective of set ``j`` over the weighted simplex.

    Works in s_y = p^y t_y (standard simplex).  Each step is the
    minorise-maximise update s <- sum_x lambda_x p^{.|x}, lambda_x being the
    share of term x in the objective; it never decreases the (concave)
    objective.  The Frank-Wolfe duality gap max_y grad_y - <grad, s> bounds
    the distance to the maximum and is the stopping rule.
    """
    a = np.asarray(getattr(a, "values", a), dtype=float)
    xs = list(mask_members(p.sets[j]))
    c = p.px[xs] / a[xs]
    w = p.p_y_given_x[xs]
    py = p.py
    s = py.copy()
    support = w.sum(axis=0) > 0
    gap = np.inf
    value = 0.0
    k = 0
    for k in range(1, budget + 1):
        with np.errstate(divide="ignore"):
            logt = np.log(s / py)
        with np.errstate(invalid="ignore"):
            lg = np.where(w > 0, w * logt[None, :], 0.0).sum(axis=1)
        terms = c * np.exp(lg)
        value = float(terms.sum())
        s_new = (terms / value) @ w
        ratio = np.zeros_like(s)
        ratio[support] = s_new[support] / s[support]
        # grad_y = value * ratio_y and <grad, s> = value
        gap = value * (float(ratio.max()) - 1.0)
        if gap <= tol * max(1.0, value):
            return AuxResult(s / py, value, max(gap, 0.0), k, True)
        s = s_new
    return AuxResult(s / py, aux_objective(c, w, s / py), max(gap, 0.0), k, False)


def duality_gap(p: Problem, r: RPoint) -> float:
    """Upper bound on phi_r(r) - min phi_r from convexity, valid for r > 0 everywhere.

    With grad_{j|y} = -p^y F_{j|y} / r_{j|y} the linearisation gives
    sum_y p^y (max_j F_{j|y} / r_{j|y} - 1).  Returns inf when some
    coordinate is zero (the gradient may be unbounded there).
    """
    if np.any(r.values <= 0):
        return float("inf")
    f = step_r(p, r)
    if f is None:
        return float("inf")
    ratio = f.values / r.values
    return float(max(np.sum(p.py * (ratio.max(axis=0) - f.values.sum(axis=0))), 0.0))


def check_fixed_point(
    p: Problem,
    r: RPoint,
    check_tol: float = CHECK_TOL,
    fixed_point_tol: float = FIXED_POINT_TOL,
    budget: int = 10000,
    aux_tol: float = 1e-12,
) -> Verdict:
    """Certify a fixed point as a global minimum of phi_r, or name an improving set."""
    f = step_r(p, r)
    if f is None:
        raise NotAFixedPointError(float("inf"), fixed_point_tol)
    residual = float(np.max(np.abs(f.values - r.values)))
    if residual > fixed_point_tol:
        raise NotAFixedPointError(residual, fixed_point_tol)
    a = map_A(p, r).values
    inactive = r.inactive_sets()
    values = {j: aux_maximize(p, j, a, budget, aux_tol) for j in inactive}

    # at a fixed point every mass-carrying set has maximum exactly 1
    active_values = {}
    suspect = []
    for j in range(p.nj):
        if j in values or r.values[j].max() <= 1e-8:
            continue
        v = aux_maximize(p, j, a, budget, aux_tol).value
        active_values[j] = v
        if abs(v - 1.0) > 1e-6:
            suspect.append(j)

    worst_set = None
    worst_value = None
    for j in inactive:
        if worst_value is None or values[j].value > worst_value:
            worst_set, worst_value = j, values[j].value
    directions = {j: res.t for j, res in values.items() if res.value > 1.0 + check_tol}
    optimal = worst_value is None or worst_value <= 1.0 + check_tol
    return Verdict(optimal, worst_set, worst_value, directions, check_tol, residual,
                   values, active_values, suspect)
