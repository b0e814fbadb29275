"""Instances and independent reference computations shared by the tests."""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linprog

from graphent.model import Graph, Problem

COND2 = [[0.4, 0.1], [0.2, 0.3]]


def labels(n: int, prefix: str = "x") -> list[str]:
    return [f"{prefix}{i + 1}" for i in range(n)]


def uniform_column(n: int) -> list[list[float]]:
    return [[1.0 / n] for _ in range(n)]


def p3() -> Problem:
    return Problem.from_graph(Graph.path(labels(3)), ["y"], uniform_column(3))


def c5() -> Problem:
    return Problem.from_graph(Graph.cycle(labels(5)), ["y"], uniform_column(5))


def complete(n: int, joint=None) -> Problem:
    joint = uniform_column(n) if joint is None else joint
    ny = len(joint[0])
    return Problem.from_graph(Graph.complete(labels(n)), labels(ny, "y"), joint)


def cond2() -> Problem:
    return complete(2, COND2)


def edgeless(n: int, joint=None) -> Problem:
    joint = uniform_column(n) if joint is None else joint
    ny = len(joint[0])
    return Problem.from_graph(Graph.from_edges(labels(n), []), labels(ny, "y"), joint)


def planted() -> Problem:
    """Edgeless pair with the dominated singletons kept: sets {x1}, {x1,x2}, {x2}."""
    return Problem.from_sets(["x1", "x2"], ["y"], [[0.5], [0.5]],
                             [["x1"], ["x2"], ["x1", "x2"]], keep_dominated=True)


def petersen_graph() -> Graph:
    v = labels(10, "v")
    outer = [(v[i], v[(i + 1) % 5]) for i in range(5)]
    spokes = [(v[i], v[i + 5]) for i in range(5)]
    inner = [(v[5 + i], v[5 + (i + 2) % 5]) for i in range(5)]
    return Graph.from_edges(v, outer + spokes + inner)


def random_graph(rng, n: int, density: float) -> Graph:
    v = labels(n)
    edges = [(v[a], v[b]) for a, b in itertools.combinations(range(n), 2) if rng.random() < density]
    return Graph.from_edges(v, edges)


def random_joint(rng, nx: int, ny: int, alpha: float = 1.0) -> np.ndarray:
    j = rng.dirichlet(np.full(nx * ny, alpha)).reshape(nx, ny)
    j = np.maximum(j, 1e-4)
    return j / j.sum()


def random_problem(rng, nx: int, ny: int, density: float = 0.5) -> Problem:
    return Problem.from_graph(random_graph(rng, nx, density), labels(ny, "y"), random_joint(rng, nx, ny))


def conditional_c5() -> Problem:
    joint = np.array([[0.12, 0.08], [0.05, 0.15], [0.10, 0.10], [0.16, 0.04], [0.09, 0.11]])
    return Problem.from_graph(Graph.cycle(labels(5)), ["y1", "y2"], joint)


def desk_instances() -> dict[str, Problem]:
    rng = np.random.default_rng(20261016)
    out = {
        "P3": p3(),
        "C5": c5(),
        "K3": complete(3),
        "COND2": cond2(),
        "edgeless3": edgeless(3, [[0.2, 0.1], [0.3, 0.1], [0.2, 0.1]]),
        "planted": planted(),
        "C5-conditional": conditional_c5(),
        "P4-skewed": Problem.from_graph(Graph.path(labels(4)), ["y"], [[0.4], [0.1], [0.3], [0.2]]),
    }
    for k in range(4):
        out[f"random{k}"] = random_problem(rng, 5, 2 + k % 2, 0.4)
    return out


def unconditioned_instances() -> dict[str, Problem]:
    return {k: p for k, p in desk_instances().items() if p.ny == 1}


def shannon_conditional_entropy(joint) -> float:
    """H(X|Y) in nats straight from the joint matrix."""
    joint = np.asarray(joint, dtype=float)
    total = 0.0
    for k in range(joint.shape[1]):
        col = joint[:, k]
        py = col.sum()
        for v in col:
            if v > 0:
                total -= v * math.log(v / py)
    return total


def fractional_chromatic_number(g: Graph) -> float:
    """min sum_S w_S over all independent sets S with every vertex covered at least once."""
    n = len(g.vertices)
    adj = g.adjacency_masks()
    indep = []
    for m in range(1, 1 << n):
        if all(not (m >> i) & 1 or not adj[i] & m for i in range(n)):
            indep.append(m)
    a = np.array([[-float((m >> i) & 1) for m in indep] for i in range(n)])
    res = linprog(np.ones(len(indep)), A_ub=a, b_ub=-np.ones(n), bounds=(0, None), method="highs")
    assert res.status == 0
    return float(res.fun)


def random_q(p: Problem, rng, zeros: bool = False) -> np.ndarray:
    vals = rng.random(p.n_edges) + (0.0 if zeros else 0.05)
    if zeros:
        vals[rng.random(p.n_edges) < 0.2] = 0.0
    sums = np.bincount(p.edge_x, weights=vals, minlength=p.nx)
    # every x keeps at least one positive coordinate
    for x in np.flatnonzero(sums == 0):
        vals[np.flatnonzero(p.edge_x == x)[0]] = 1.0
    sums = np.bincount(p.edge_x, weights=vals, minlength=p.nx)
    return vals / sums[p.edge_x]


def random_r(p: Problem, rng, zeros: bool = False) -> np.ndarray:
    vals = rng.random((p.nj, p.ny)) + (0.0 if zeros else 0.05)
    if zeros:
        vals[rng.random((p.nj, p.ny)) < 0.2] = 0.0
        for k in np.flatnonzero(vals.sum(axis=0) == 0):
            vals[0, k] = 1.0
    return vals / vals.sum(axis=0, keepdims=True)
