import numpy as np
import pytest

import helpers as H
from graphent.geometry import (
    QPoint,
    RPoint,
    clamp_q,
    clamp_r,
    perturbed_interior_q,
    q_sums,
    uniform_interior_q,
    uniform_r,
    validate_q,
    validate_r,
)


def test_uniform_interior_q_is_valid():
    p = H.c5()
    q = uniform_interior_q(p)
    assert validate_q(p, q).ok
    np.testing.assert_allclose(q.values, 0.5)


def test_perturbed_q_is_seeded_and_interior():
    p = H.c5()
    a, b = perturbed_interior_q(p, 7), perturbed_interior_q(p, 7)
    np.testing.assert_array_equal(a.values, b.values)
    assert validate_q(p, a).ok and np.all(a.values > 0)
    assert not np.array_equal(a.values, perturbed_interior_q(p, 8).values)


def test_dense_round_trip():
    p = H.p3()
    q = uniform_interior_q(p)
    d = q.dense(p)
    assert d.shape == (p.nj, p.nx)
    np.testing.assert_array_equal(QPoint.from_dense(p, d).values, q.values)
    np.testing.assert_allclose(q_sums(p, q), 1.0)


def test_validate_q_reports_violations():
    p = H.c5()
    v = uniform_interior_q(p).values.copy()
    v[0] = -1e-15
    v[1] = 1.0
    rep = validate_q(p, QPoint(v))
    assert not rep.ok and rep.clampable()
    fixed = clamp_q(p, QPoint(v))
    assert validate_q(p, fixed).ok
    v[0] = -0.3
    rep = validate_q(p, QPoint(v))
    assert not rep.clampable()
    assert {x.constraint for x in rep.violations} >= {"nonnegative", "sum"}
    assert not validate_q(p, QPoint(np.ones(3))).ok


def test_validate_r_and_inactive_sets():
    p = H.planted()
    r = RPoint(np.array([[0.5], [0.0], [0.5]]))
    assert validate_r(p, r).ok
    assert r.inactive_sets() == [1]
    masked = RPoint(np.array([[0.5], [0.2], [0.3]]), np.array([True, False, True]))
    rep = validate_r(p, masked)
    assert not rep.ok and rep.violations[0].constraint == "inactive-zero"
    assert not validate_r(p, RPoint(np.array([[0.5], [0.1], [0.5]]))).ok
    assert not validate_r(p, RPoint(np.array([[np.nan], [0.5], [0.5]]))).ok


def test_clamp_r_and_uniform_r():
    p = H.cond2()
    r = uniform_r(p)
    assert validate_r(p, r).ok
    vals = r.values.copy()
    vals[0, 0] = -1e-15
    vals[1, 0] = 1.0
    assert validate_r(p, clamp_r(RPoint(vals))).ok


def test_validate_r_rejects_wrong_shape():
    rep = validate_r(H.p3(), RPoint(np.ones((3, 1)) / 3))
    assert not rep.ok and rep.violations[0].constraint == "shape"
