"""Points of the two product-of-simplices domains and their validation.

A q-point stores q_{j|x} only on the membership edges (j, x) with x in j,
in the problem's edge order.  An r-point is a dense |J| x |Y| matrix with
one probability vector per column, plus an active-set mask.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import Problem

SUM_TOL = 1e-12
CLAMP_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class QPoint:
    values: np.ndarray

    def dense(self, p: Problem) -> np.ndarray:
        out = np.zeros((p.nj, p.nx))
        out[p.edge_j, p.edge_x] = self.values
        return out

    @classmethod
    def from_dense(cls, p: Problem, matrix) -> "QPoint":
        matrix = np.asarray(matrix, dtype=float)
        return cls(matrix[p.edge_j, p.edge_x].copy())


@dataclass(frozen=True, eq=False)
class RPoint:
    values: np.ndarray
    active: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.active is None:
            object.__setattr__(self, "active", np.ones(self.values.shape[0], dtype=bool))

    def inactive_sets(self) -> list[int]:
        """Sets that carry no mass: masked out, or all coordinates exactly zero."""
        zero = ~np.any(self.values > 0, axis=1)
        return [int(j) for j in np.flatnonzero(~self.active | zero)]


@dataclass(frozen=True, eq=False)
class APoint:
    values: np.ndarray


@dataclass(frozen=True)
class Violation:
    constraint: str
    index: tuple
    magnitude: float
    clampable: bool = False


@dataclass
class ValidationReport:
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def clampable(self) -> bool:
        """True when every violation is floating-point drift that clamping fixes."""
        return all(v.clampable for v in self.violations)


def q_sums(p: Problem, q: QPoint) -> np.ndarray:
    return np.bincount(p.edge_x, weights=q.values, minlength=p.nx)


def uniform_interior_q(p: Problem) -> QPoint:
    return QPoint(1.0 / p.deg[p.edge_x])


def perturbed_interior_q(p: Problem, seed: int) -> QPoint:
    rng = np.random.default_rng(seed)
    vals = uniform_interior_q(p).values * rng.uniform(0.9, 1.1, size=p.n_edges)
    return QPoint(vals / q_sums(p, QPoint(vals))[p.edge_x])


def uniform_r(p: Problem) -> RPoint:
    return RPoint(np.full((p.nj, p.ny), 1.0 / p.nj))


def validate_q(p: Problem, q: QPoint, tol: float = SUM_TOL) -> ValidationReport:
    out = []
    vals = np.asarray(q.values, dtype=float)
    if vals.shape != (p.n_edges,):
        return ValidationReport([Violation("shape", vals.shape, float("nan"))])
    for e in np.flatnonzero(~np.isfinite(vals)):
        out.append(Violation("finite", (int(p.edge_j[e]), int(p.edge_x[e])), float("nan")))
    for e in np.flatnonzero(vals < 0):
        out.append(Violation("nonnegative", (int(p.edge_j[e]), int(p.edge_x[e])),
                             float(-vals[e]), clampable=bool(vals[e] >= -CLAMP_TOL)))
    dev = q_sums(p, q) - 1.0
    for x in np.flatnonzero(np.abs(dev) > tol):
        out.append(Violation("sum", (int(x),), float(-dev[x])))
    return ValidationReport(out)


def validate_r(p: Problem, r: RPoint, tol: float = SUM_TOL) -> ValidationReport:
    out = []
    vals = np.asarray(r.values, dtype=float)
    if vals.shape != (p.nj, p.ny):
        return ValidationReport([Violation("shape", vals.shape, float("nan"))])
    for j, y in np.argwhere(~np.isfinite(vals)):
        out.append(Violation("finite", (int(j), int(y)), float("nan")))
    for j, y in np.argwhere(vals < 0):
        out.append(Violation("nonnegative", (int(j), int(y)), float(-vals[j, y]),
                             clampable=bool(vals[j, y] >= -CLAMP_TOL)))
    dev = vals.sum(axis=0) - 1.0
    for y in np.flatnonzero(np.abs(dev) > tol):
        out.append(Violation("sum", (int(y),), float(-dev[y])))
    for j in np.flatnonzero(~r.active):
        if np.any(vals[j] != 0):
            out.append(Violation("inactive-zero", (int(j),), float(np.abs(vals[j]).max())))
    return ValidationReport(out)


def clamp_q(p: Problem, q: QPoint) -> QPoint:
    vals = np.where((q.values < 0) & (q.values >= -CLAMP_TOL), 0.0, q.values)
    return QPoint(vals / np.bincount(p.edge_x, weights=vals, minlength=p.nx)[p.edge_x])


def clamp_r(r: RPoint) -> RPoint:
    vals = np.where((r.values < 0) & (r.values >= -CLAMP_TOL), 0.0, r.values)
    vals = np.where(r.active[:, None], vals, 0.0)
    return RPoint(vals / vals.sum(axis=0, keepdims=True), r.active.copy())
