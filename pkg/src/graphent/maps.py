"""The maps A, Q, R and the objective functions, all in nats.

Extended values are plain floats: ``math.inf`` stands for +infinity and the
conventions 0 * log 0 = 0, f(0, v) = 0, f(u, 0) = inf for u > 0, and
t ** 0 = 1 (also for t = 0) are applied branch-wise, never through NaN.
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import APoint, QPoint, RPoint, uniform_interior_q
from .model import Problem

INF = math.inf


def kl_terms(u, v) -> np.ndarray:
    """Elementwise f(u, v) = u log u - u log v with the log-0 conventions."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    u, v = np.broadcast_arrays(u, v)
    out = np.zeros(u.shape)
    pos = u > 0
    inf = pos & (v <= 0)
    fin = pos & ~inf
    out[inf] = INF
    out[fin] = u[fin] * (np.log(u[fin]) - np.log(v[fin]))
    return out


def xlogx(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape)
    pos = u > 0
    out[pos] = u[pos] * np.log(u[pos])
    return out


def _weighted_sum(weights: np.ndarray, terms: np.ndarray) -> float:
    # 0 * inf = 0: zero-weight entries are dropped before summing
    mask = weights > 0
    prod = weights[mask] * terms[mask]
    if np.any(np.isinf(prod)):
        return INF
    return float(prod.sum())


def log_products(p: Problem, r: RPoint) -> np.ndarray:
    """log g_{j,x} = sum_y p^{y|x} log r_{j|y}; -inf off the membership relation.

    Factors with exponent 0 are skipped, so a zero coordinate only kills the
    product when its exponent is positive.
    """
    w = p.p_y_given_x  # (X, Y)
    with np.errstate(divide="ignore"):
        logr = np.log(r.values)  # (J, Y)
    with np.errstate(invalid="ignore"):
        terms = w[None, :, :] * logr[:, None, :]
    terms = np.where(w[None, :, :] > 0, terms, 0.0)
    lg = terms.sum(axis=2)
    return np.where(p.member, lg, -INF)


def _logsumexp0(lg: np.ndarray) -> np.ndarray:
    # column-wise log-sum-exp; all -inf columns stay -inf
    m = lg.max(axis=0)
    shift = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        return np.log(np.exp(lg - shift).sum(axis=0)) + shift


def log_a(p: Problem, r: RPoint) -> np.ndarray:
    return _logsumexp0(log_products(p, r))


def map_R(p: Problem, q: QPoint) -> RPoint:
    # R_{j|y} = sum_{x in j} p_{x|y} q_{j|x}
    return RPoint(q.dense(p) @ p.p_x_given_y)


def map_A(p: Problem, r: RPoint) -> APoint:
    return APoint(np.exp(log_a(p, r)))


def map_Q(p: Problem, r: RPoint) -> QPoint | None:
    """Optimal q for fixed r, or ``None`` when some A_x(r) = 0 (r outside K*_r)."""
    lg = log_products(p, r)
    la = _logsumexp0(lg)
    if np.any(np.isneginf(la)):
        return None
    le = lg[p.edge_j, p.edge_x] - la[p.edge_x]
    return QPoint(np.exp(le))


def map_Q_or_interior(p: Problem, r: RPoint) -> QPoint:
    q = map_Q(p, r)
    return uniform_interior_q(p) if q is None else q


def phi(p: Problem, q: QPoint, r: RPoint) -> float:
    """sum_{x,y,j} p_{x,y} f(q_{j|x}, r_{j|y})."""
    pxy = p.joint[p.edge_x]  # (E, Y)
    terms = kl_terms(q.values[:, None], r.values[p.edge_j])
    return _weighted_sum(pxy, terms)


def delta(p: Problem, q: QPoint, q2: QPoint) -> float:
    """sum_x p_x sum_{j ∋ x} f(q_{j|x}, q2_{j|x})."""
    return _weighted_sum(p.px[p.edge_x], kl_terms(q.values, q2.values))


def phi_q(p: Problem, q: QPoint) -> float:
    """Closed form of phi(q, R(q)) = H(J|Y) - H(J|X); always finite."""
    neg_h_jx = float(np.sum(p.px[p.edge_x] * xlogx(q.values)))
    rq = map_R(p, q).values
    neg_h_jy = float(np.sum(p.py * xlogx(rq).sum(axis=0)))
    return neg_h_jx - neg_h_jy


def phi_r(p: Problem, r: RPoint) -> float:
    """-sum_x p_x log A_x(r); infinite exactly when r is outside K*_r."""
    la = log_a(p, r)
    if np.any(np.isneginf(la)):
        return INF
    return float(-np.sum(p.px * la)) + 0.0


def phi_a(p: Problem, a: APoint | np.ndarray) -> float:
    vals = np.asarray(getattr(a, "values", a), dtype=float)
    if np.any(vals <= 0):
        return INF
    return float(-np.sum(p.px * np.log(vals)))


def step_r(p: Problem, r: RPoint) -> RPoint | None:
    """F_r = R o Q, or ``None`` outside K*_r."""
    q = map_Q(p, r)
    if q is None:
        return None
    return RPoint(map_R(p, q).values, r.active.copy())


def grad_phi_r(p: Problem, r: RPoint) -> np.ndarray:
    """Partial derivatives -p^y R_{j|y}(Q(r)) / r_{j|y}.

    Defined on coordinates with r_{j|y} > 0; zero coordinates get NaN.
    """
    q = map_Q(p, r)
    if q is None:
        raise ValueError("gradient undefined outside K*_r")
    rq = map_R(p, q).values
    out = np.full(r.values.shape, np.nan)
    pos = r.values > 0
    out[pos] = -(p.py[None, :] * rq)[pos] / r.values[pos]
    return out


def d_values(p: Problem, r: RPoint) -> np.ndarray:
    """D_j(r) = sum_{x in j} p_x / A_x(r) for a single-letter Y."""
    a = map_A(p, r).values
    return p.member.astype(float) @ (p.px / a)
