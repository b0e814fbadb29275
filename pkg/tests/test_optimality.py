import itertools
import math

import numpy as np
import pytest

import helpers as H
from graphent.geometry import RPoint
from graphent.maps import map_A
from graphent.model import Problem
from graphent.optimality import (
    NotAFixedPointError,
    aux_maximize,
    aux_objective,
    check_fixed_point,
    duality_gap,
)
from graphent.solver import SolverConfig, solve


def two_letter_problem(joint, sets):
    return Problem.from_sets(["x1", "x2", "x3"][: len(joint)], [f"y{k + 1}" for k in range(len(joint[0]))],
                             joint, sets, keep_dominated=True)


def simplex_grid(ny: int, n: int):
    for c in itertools.product(range(n + 1), repeat=ny - 1):
        if sum(c) <= n:
            yield np.array(list(c) + [n - sum(c)], dtype=float) / n


def grid_max(p, j, a, n=200):
    xs = list(np.flatnonzero(p.member[j]))
    c = p.px[xs] / a[xs]
    w = p.p_y_given_x[xs]
    return max(aux_objective(c, w, s / p.py) for s in simplex_grid(p.ny, n))


def test_unconditioned_closed_form():
    p = H.c5()
    a = np.array([0.3, 0.5, 0.4, 0.45, 0.35])
    for j in range(p.nj):
        res = aux_maximize(p, j, a)
        xs = np.flatnonzero(p.member[j])
        assert res.value == pytest.approx(float(np.sum(p.px[xs] / a[xs])), abs=1e-15)
        np.testing.assert_allclose(res.t, 1 / p.py)


def test_single_letter_set_closed_form():
    joint = [[0.3, 0.1], [0.2, 0.4]]
    p = two_letter_problem(joint, [["x1"], ["x2"], ["x1", "x2"]])
    a = np.array([0.6, 0.7])
    j = p.set_index(["x1"])
    res = aux_maximize(p, j, a)
    w = p.p_y_given_x[0]
    np.testing.assert_allclose(res.t, w / p.py, atol=1e-9)
    expected = p.px[0] / a[0] * float(np.prod((w / p.py) ** w))
    assert res.value == pytest.approx(expected, abs=1e-12)
    assert grid_max(p, j, a) <= res.value + 1e-12


def test_symmetric_set_closed_form():
    # both members share the conditional law (0.75, 0.25)
    joint = [[0.3, 0.1], [0.15, 0.05], [0.1, 0.3]]
    p = two_letter_problem(joint, [["x1", "x2"], ["x3"]])
    a = np.array([0.5, 0.6, 0.8])
    j = p.set_index(["x1", "x2"])
    res = aux_maximize(p, j, a)
    np.testing.assert_allclose(res.t, np.array([0.75, 0.25]) / p.py, atol=1e-9)


@pytest.mark.parametrize("seed", range(6))
def test_certificate_brackets_grid_maximum(seed):
    rng = np.random.default_rng(seed)
    ny = 2 + seed % 2
    p = Problem.from_sets(H.labels(3), H.labels(ny, "y"), H.random_joint(rng, 3, ny),
                          [["x1", "x2", "x3"], ["x1"], ["x2"], ["x3"]], keep_dominated=True)
    a = rng.uniform(0.3, 1.0, size=3)
    j = p.set_index(["x1", "x2", "x3"])
    res = aux_maximize(p, j, a, tol=1e-10)
    g = grid_max(p, j, a, n=300 if ny == 2 else 60)
    assert res.converged
    assert g <= res.upper_bound + 1e-12
    assert res.value >= g - 1e-3 * g


@pytest.mark.parametrize("seed", range(4))
def test_aux_objective_is_concave(seed):
    rng = np.random.default_rng(seed)
    p = H.random_problem(rng, 4, 3, 0.3)
    a = rng.uniform(0.2, 1.0, size=p.nx)
    for j in range(p.nj):
        xs = list(np.flatnonzero(p.member[j]))
        c, w = p.px[xs] / a[xs], p.p_y_given_x[xs]
        for _ in range(50):
            t1 = rng.dirichlet(np.ones(p.ny)) / p.py
            t2 = rng.dirichlet(np.ones(p.ny)) / p.py
            mid = aux_objective(c, w, (t1 + t2) / 2)
            assert mid >= (aux_objective(c, w, t1) + aux_objective(c, w, t2)) / 2 - 1e-12


def test_budget_exhaustion_reports_gap():
    joint = [[0.3, 0.05], [0.05, 0.3], [0.1, 0.2]]
    p = two_letter_problem(joint, [["x1", "x2"], ["x3"]])
    res = aux_maximize(p, p.set_index(["x1", "x2"]), np.array([0.5, 0.4, 0.9]), budget=1, tol=1e-15)
    assert not res.converged and res.gap > 0 and res.upper_bound > res.value


def test_planted_not_optimal():
    p = H.planted()
    r = RPoint(np.array([[0.5], [0.0], [0.5]]))
    v = check_fixed_point(p, r)
    j = p.set_index(["x1", "x2"])
    assert not v.optimal and v.worst_set == j
    assert v.worst_value == pytest.approx(2.0, abs=1e-12)
    assert j in v.directions
    assert v.worst_value > 1 + v.tolerance


def test_p3_optimal_without_inactive_sets():
    p = H.p3()
    v = check_fixed_point(p, RPoint(np.array([[2 / 3], [1 / 3]])))
    assert v.optimal and v.worst_set is None and v.worst_value is None
    assert not v.suspect_active
    assert all(val == pytest.approx(1.0, abs=1e-12) for val in v.active_values.values())


def test_non_fixed_point_raises():
    p = H.p3()
    with pytest.raises(NotAFixedPointError) as err:
        check_fixed_point(p, RPoint(np.array([[0.5], [0.5]])))
    assert err.value.residual > 1e-6
    with pytest.raises(NotAFixedPointError):
        check_fixed_point(p, RPoint(np.array([[1.0], [0.0]])))


def test_optimal_verdicts_match_oracle_on_small_instances():
    from graphent.oracle import OracleRefusal, brute_force_r
    for name, p in H.desk_instances().items():
        if p.n_edges > 6:
            continue
        rep = solve(p, SolverConfig(tol=1e-13, max_iters=200000))
        if not rep.optimality.optimal:
            continue
        try:
            res = brute_force_r(p)
        except OracleRefusal:
            continue
        assert rep.entropy_nats <= res.minimum + 1e-6


def test_duality_gap_at_optimum_and_boundary():
    p = H.c5()
    assert duality_gap(p, RPoint(np.full((5, 1), 0.2))) == pytest.approx(0.0, abs=1e-15)
    assert math.isinf(duality_gap(H.planted(), RPoint(np.array([[0.5], [0.0], [0.5]]))))
    r = RPoint(np.array([[0.1], [0.2], [0.3], [0.2], [0.2]]))
    from graphent.maps import phi_r
    assert phi_r(p, r) - math.log(2.5) <= duality_gap(p, r) + 1e-12
