"""Brute-force verifiers for tiny instances.

The objectives are re-implemented here straight from their defining sums;
nothing in this module goes through the solver or the map kernel, except
``gradient_check`` which takes the kernel's analytic gradient as the thing
being checked.

Grid slack bounds
-----------------
r-grid: any r* has a grid point g >= (1 - |J|/N) r* coordinate-wise (round
the mixture (1 - th) r* + th/|J| to multiples of 1/N).  Each product
prod_y r^{p^{y|x}} is 1-homogeneous, so phi_r(g) <= phi_r(r*) - log(1 - |J|/N).

q-grid: every q has a grid neighbour with l1 distance < deg(x)/N in each
x-simplex, which moves each R_{.|y} by the same amount in l1; the sharp
Fannes inequality bounds both entropy terms of phi_q = H(J|Y) - H(J|X).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .geometry import RPoint
from .model import Problem

MAX_FREE_DIMS = 4
CHUNK = 200_000


class OracleRefusal(ValueError):
    def __init__(self, message: str, dims: tuple[int, int]):
        super().__init__(message)
        self.dims = dims


@dataclass
class OracleResult:
    minimum: float
    argmin: np.ndarray
    grid_resolution: float
    instance_dims: tuple[int, int]
    slack: float
    points: int


def default_resolution(free_dims: int) -> float:
    return 1e-3 if free_dims <= 2 else 2e-2


def compositions(n: int, parts: int) -> np.ndarray:
    """All vectors of ``parts`` nonnegative integers summing to ``n``, lexicographic."""
    if parts == 1:
        return np.array([[n]])
    bars = np.array(list(itertools.combinations(range(n + parts - 1), parts - 1)), dtype=np.int64)
    edges = np.hstack([np.full((len(bars), 1), -1), bars, np.full((len(bars), 1), n + parts - 1)])
    return np.diff(edges, axis=1) - 1


def _binary_entropy(t: float) -> float:
    if t <= 0 or t >= 1:
        return 0.0
    return -t * math.log(t) - (1 - t) * math.log(1 - t)


def _fannes(t: float, d: int) -> float:
    if d <= 1:
        return 0.0
    if t > 0.5:
        return math.log(d)
    return t * math.log(max(d - 1, 1)) + _binary_entropy(t)


def _xlogx(u: np.ndarray) -> np.ndarray:
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = u[pos] * np.log(u[pos])
    return out


def _dims(p: Problem) -> tuple[int, int]:
    return (p.n_edges, p.nj * p.ny)


def _grid_product(factors: list[np.ndarray]):
    """Lexicographic cartesian product of row sets, yielded in chunks of stacked rows."""
    if not factors:
        yield [np.zeros((1, 0))]
        return
    sizes = [len(f) for f in factors]
    total = math.prod(sizes)
    for start in range(0, total, CHUNK):
        idx = np.arange(start, min(start + CHUNK, total))
        parts = []
        for k in range(len(factors)):
            inner = math.prod(sizes[k + 1:])
            parts.append(factors[k][(idx // inner) % sizes[k]])
        yield parts


def phi_q_batch(p: Problem, qs: np.ndarray) -> np.ndarray:
    """phi_q for a batch of dense (B, J, X) q arrays: H(J|Y) - H(J|X) from first principles."""
    joint = np.asarray(p.joint)
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    cond = joint / py[None, :]
    h_jx = -np.einsum("x,bjx->b", px, _xlogx(qs))
    rr = np.einsum("bjx,xy->bjy", qs, cond)
    h_jy = -np.einsum("y,bjy->b", py, _xlogx(rr))
    return h_jy - h_jx


def phi_r_batch(p: Problem, rs: np.ndarray) -> np.ndarray:
    """-sum_x p_x log sum_{j ∋ x} prod_y r_{j|y}^{p^{y|x}} for a batch (B, J, Y)."""
    joint = np.asarray(p.joint)
    px = joint.sum(axis=1)
    w = joint / px[:, None]
    out = np.zeros(len(rs))
    for x in range(p.nx):
        ax = np.zeros(len(rs))
        for j in range(p.nj):
            if not (p.sets[j] >> x) & 1:
                continue
            prod = np.ones(len(rs))
            for y in range(p.ny):
                if w[x, y] > 0:
                    prod = prod * rs[:, j, y] ** w[x, y]
            ax = ax + prod
        with np.errstate(divide="ignore"):
            out = out - px[x] * np.log(ax)
    return out


def brute_force_q(p: Problem, resolution: float | None = None) -> OracleResult:
    free = p.n_edges - p.nx
    if free > MAX_FREE_DIMS:
        raise OracleRefusal(f"q-problem has {free} free dimensions (limit {MAX_FREE_DIMS})", _dims(p))
    resolution = resolution or default_resolution(free)
    n = max(1, round(1 / resolution))
    membership = [[j for j in range(p.nj) if (p.sets[j] >> x) & 1] for x in range(p.nx)]
    varying = [x for x in range(p.nx) if len(membership[x]) > 1]
    factors = [compositions(n, len(membership[x])) / n for x in varying]
    base = np.zeros((p.nj, p.nx))
    for x in range(p.nx):
        if len(membership[x]) == 1:
            base[membership[x][0], x] = 1.0

    best = math.inf
    best_q = base.copy()
    count = 0
    for parts in _grid_product(factors):
        b = len(parts[0])
        qs = np.broadcast_to(base, (b, p.nj, p.nx)).copy()
        for x, vals in zip(varying, parts):
            qs[:, membership[x], x] = vals
        vals = phi_q_batch(p, qs)
        k = int(np.argmin(vals))
        if vals[k] < best:
            best, best_q = float(vals[k]), qs[k].copy()
        count += b

    if not varying:
        slack = 0.0
    else:
        maxdeg = max(len(membership[x]) for x in varying)
        t = maxdeg / n / 2
        slack = _fannes(t, p.nj) + _fannes(t, maxdeg)
    return OracleResult(best, best_q, 1.0 / n, _dims(p), slack, count)


def brute_force_r(p: Problem, resolution: float | None = None) -> OracleResult:
    free = p.ny * (p.nj - 1)
    if free > MAX_FREE_DIMS:
        raise OracleRefusal(f"r-problem has {free} free dimensions (limit {MAX_FREE_DIMS})", _dims(p))
    resolution = resolution or default_resolution(free)
    n = max(1, round(1 / resolution))
    comp = compositions(n, p.nj) / n
    factors = [comp] * p.ny if p.nj > 1 else []

    best = math.inf
    best_r = np.ones((p.nj, p.ny))
    count = 0
    for parts in _grid_product(factors):
        if p.nj == 1:
            rs = np.ones((1, 1, p.ny))
        else:
            rs = np.stack(parts, axis=2)  # (B, J, Y)
        vals = phi_r_batch(p, rs)
        k = int(np.argmin(vals))
        if vals[k] < best:
            best, best_r = float(vals[k]), rs[k].copy()
        count += len(rs)

    if p.nj == 1:
        slack = 0.0
    elif p.nj < n:
        slack = -math.log(1 - p.nj / n)
    else:
        slack = math.inf
    return OracleResult(best, best_r, 1.0 / n, _dims(p), slack, count)


def gradient_check(p: Problem, point: RPoint, step: float = 1e-6) -> float:
    """Max relative deviation between the analytic gradient of phi_r and central differences."""
    from .maps import grad_phi_r

    r = np.asarray(point.values, dtype=float)
    if np.any(r < 10 * step):
        raise ValueError(f"point too close to the boundary for step {step:g}")
    analytic = grad_phi_r(p, point)
    worst = 0.0
    for j in range(p.nj):
        for y in range(p.ny):
            up = r.copy()
            dn = r.copy()
            up[j, y] += step
            dn[j, y] -= step
            vals = phi_r_batch(p, np.stack([up, dn]))
            fd = (vals[0] - vals[1]) / (2 * step)
            err = abs(analytic[j, y] - fd) / max(abs(fd), 1e-12)
            worst = max(worst, err)
    return worst
