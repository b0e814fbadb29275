"""Problem instances: joint distribution of (X, Y) plus a covering set system.

Sets are stored as integer bitmasks over the X alphabet (bit ``i`` is the
``i``-th letter).  The canonical set order is lexicographic on the sorted
tuple of member indices, so ``{x1, x3}`` precedes ``{x2}``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

MASS_TOL = 1e-9


class ProblemError(ValueError):
    """Raised for malformed problem instances."""


def mask_members(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def members_mask(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


def canonical_order(masks: Iterable[int]) -> list[int]:
    return sorted(set(masks), key=mask_members)


def remove_dominated(masks: Sequence[int]) -> list[int]:
    """Drop every set that is a subset of another set in the list (duplicates collapse)."""
    uniq = set(masks)
    keep = [m for m in uniq if not any(m != o and m & o == m for o in uniq)]
    return canonical_order(keep)


@dataclass(frozen=True)
class Graph:
    vertices: tuple[str, ...]
    edges: frozenset[frozenset[str]]

    @classmethod
    def from_edges(cls, vertices: Sequence[str], edges: Iterable[Sequence[str]]) -> "Graph":
        vertices = tuple(vertices)
        if len(set(vertices)) != len(vertices):
            raise ProblemError("duplicate vertex labels")
        known = set(vertices)
        seen: set[frozenset[str]] = set()
        for e in edges:
            if len(e) != 2:
                raise ProblemError(f"edge {list(e)!r} does not have two endpoints")
            u, v = e
            if u not in known or v not in known:
                raise ProblemError(f"edge ({u!r}, {v!r}) references an unknown vertex")
            if u == v:
                raise ProblemError(f"loop at vertex {u!r}")
            key = frozenset((u, v))
            if key in seen:
                raise ProblemError(f"duplicate edge ({u!r}, {v!r})")
            seen.add(key)
        return cls(vertices, frozenset(seen))

    @classmethod
    def complete(cls, vertices: Sequence[str]) -> "Graph":
        vs = tuple(vertices)
        return cls.from_edges(vs, [(vs[i], vs[k]) for i in range(len(vs)) for k in range(i + 1, len(vs))])

    @classmethod
    def cycle(cls, vertices: Sequence[str]) -> "Graph":
        vs = tuple(vertices)
        n = len(vs)
        return cls.from_edges(vs, [(vs[i], vs[(i + 1) % n]) for i in range(n)])

    @classmethod
    def path(cls, vertices: Sequence[str]) -> "Graph":
        vs = tuple(vertices)
        return cls.from_edges(vs, [(vs[i], vs[i + 1]) for i in range(len(vs) - 1)])

    def adjacency_masks(self) -> list[int]:
        index = {v: i for i, v in enumerate(self.vertices)}
        adj = [0] * len(self.vertices)
        for e in self.edges:
            u, v = (index[w] for w in e)
            adj[u] |= 1 << v
            adj[v] |= 1 << u
        return adj


def maximal_independent_masks(adjacency: Sequence[int]) -> list[int]:
    """Maximal independent sets of a graph given by neighbour bitmasks.

    Bron-Kerbosch with Tomita pivoting, run on the complement graph (its
    maximal cliques are our maximal independent sets).
    """
    n = len(adjacency)
    full = (1 << n) - 1
    comp = [full & ~adjacency[v] & ~(1 << v) for v in range(n)]
    found: list[int] = []

    def expand(r: int, p: int, x: int) -> None:
        if not p and not x:
            found.append(r)
            return
        # pivot maximising |P ∩ N(u)| keeps the branching small
        pivot = max(mask_members(p | x), key=lambda u: bin(p & comp[u]).count("1"))
        cand = p & ~comp[pivot]
        while cand:
            low = cand & -cand
            v = low.bit_length() - 1
            expand(r | low, p & comp[v], x & comp[v])
            p &= ~low
            x |= low
            cand &= ~low

    if n == 0:
        return [0]
    expand(0, full, 0)
    return canonical_order(found)


def enumerate_maximal_independent_sets(g: Graph) -> list[tuple[str, ...]]:
    masks = maximal_independent_masks(g.adjacency_masks())
    return [tuple(g.vertices[i] for i in mask_members(m)) for m in masks]


class Problem:
    """Joint law p_{x,y} together with a covering set system over X.

    Zero-mass letters are deleted on construction and the joint matrix is
    renormalised as the final step.  Instances are treated as immutable.
    """

    def __init__(
        self,
        x_labels: Sequence[str],
        y_labels: Sequence[str],
        joint,
        sets: Iterable[int],
        keep_dominated: bool = False,
    ):
        x_labels = [str(v) for v in x_labels]
        y_labels = [str(v) for v in y_labels]
        if not x_labels or not y_labels:
            raise ProblemError("alphabets must be non-empty")
        if len(set(x_labels)) != len(x_labels) or len(set(y_labels)) != len(y_labels):
            raise ProblemError("alphabet labels must be unique")
        joint = np.array(joint, dtype=float)
        if joint.shape != (len(x_labels), len(y_labels)):
            raise ProblemError(
                f"joint has shape {joint.shape}, expected {(len(x_labels), len(y_labels))}"
            )
        if not np.all(np.isfinite(joint)):
            raise ProblemError("joint contains non-finite entries")
        if np.any(joint < 0):
            i, k = np.argwhere(joint < 0)[0]
            raise ProblemError(f"negative probability {joint[i, k]!r} at ({x_labels[i]}, {y_labels[k]})")
        total = float(joint.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise ProblemError(f"total mass {total!r} deviates from 1 by {1.0 - total:+.3g}")

        sets = list(sets)
        full = (1 << len(x_labels)) - 1
        if any(m < 0 or m & ~full for m in sets):
            raise ProblemError("set references letters outside the X alphabet")

        keep_x = np.flatnonzero(joint.sum(axis=1) > 0)
        keep_y = np.flatnonzero(joint.sum(axis=0) > 0)
        if len(keep_x) < len(x_labels):
            log.info("dropping zero-mass x letters: %s",
                     [x_labels[i] for i in range(len(x_labels)) if i not in set(keep_x)])
        if len(keep_y) < len(y_labels):
            log.info("dropping zero-mass y letters: %s",
                     [y_labels[i] for i in range(len(y_labels)) if i not in set(keep_y)])
        remap = {int(old): new for new, old in enumerate(keep_x)}
        reduced = []
        for m in sets:
            nm = members_mask(remap[i] for i in mask_members(m) if i in remap)
            if nm:
                reduced.append(nm)

        self.x_labels = tuple(x_labels[i] for i in keep_x)
        self.y_labels = tuple(y_labels[i] for i in keep_y)
        self.keep_dominated = keep_dominated
        if keep_dominated:
            masks = canonical_order(reduced)
        else:
            masks = remove_dominated(reduced)
        self.sets = tuple(masks)

        nx, nj = len(self.x_labels), len(self.sets)
        member = np.zeros((nj, nx), dtype=bool)
        for j, m in enumerate(self.sets):
            member[j, list(mask_members(m))] = True
        uncovered = [self.x_labels[x] for x in range(nx) if not member[:, x].any()]
        if uncovered:
            raise ProblemError(f"letters not covered by any set: {uncovered}")

        joint = joint[np.ix_(keep_x, keep_y)]
        joint = joint / joint.sum()
        self.joint = joint
        self.px = joint.sum(axis=1)
        self.py = joint.sum(axis=0)
        self.p_x_given_y = joint / self.py[None, :]
        self.p_y_given_x = joint / self.px[:, None]
        self.member = member
        self.deg = member.sum(axis=0)
        # bipartite edges (j, x) with x in j, x-major then j
        xs, js = np.nonzero(member.T)
        self.edge_x = xs
        self.edge_j = js
        for arr in (self.joint, self.px, self.py, self.p_x_given_y, self.p_y_given_x, self.member):
            arr.setflags(write=False)

    @classmethod
    def from_graph(cls, graph: Graph, y_labels: Sequence[str], joint) -> "Problem":
        # restricting to positive-mass vertices then dropping dominated sets
        # gives the maximal independent sets of the induced subgraph
        masks = maximal_independent_masks(graph.adjacency_masks())
        return cls(graph.vertices, y_labels, joint, masks)

    @classmethod
    def from_sets(cls, x_labels: Sequence[str], y_labels: Sequence[str], joint,
                  sets: Iterable[Iterable[str]], keep_dominated: bool = False) -> "Problem":
        index = {str(v): i for i, v in enumerate(x_labels)}
        masks = []
        for s in sets:
            s = list(s)
            missing = [v for v in s if str(v) not in index]
            if missing:
                raise ProblemError(f"set {s!r} references unknown letters {missing}")
            masks.append(members_mask(index[str(v)] for v in s))
        return cls(x_labels, y_labels, joint, masks, keep_dominated=keep_dominated)

    @property
    def nx(self) -> int:
        return len(self.x_labels)

    @property
    def ny(self) -> int:
        return len(self.y_labels)

    @property
    def nj(self) -> int:
        return len(self.sets)

    @property
    def n_edges(self) -> int:
        return len(self.edge_x)

    def set_labels(self, j: int) -> tuple[str, ...]:
        return tuple(self.x_labels[i] for i in mask_members(self.sets[j]))

    def set_index(self, labels: Iterable[str]) -> int:
        index = {v: i for i, v in enumerate(self.x_labels)}
        m = members_mask(index[v] for v in labels)
        return self.sets.index(m)

    def q_dimension(self) -> int:
        return self.n_edges - self.nx

    def r_dimension(self) -> int:
        return self.ny * (self.nj - 1)

    def collapse_y(self) -> "Problem":
        """Same sets and X-marginal with Y replaced by a single letter."""
        return Problem(self.x_labels, ["*"], self.px[:, None], self.sets,
                       keep_dominated=self.keep_dominated)

    def with_x_distribution(self, pi) -> "Problem":
        """Keep the conditionals Y|X=x but replace the X-marginal by ``pi``."""
        pi = np.asarray(pi, dtype=float)
        return Problem(self.x_labels, self.y_labels, pi[:, None] * self.p_y_given_x,
                       self.sets, keep_dominated=self.keep_dominated)

    def permuted(self, order: Sequence[int]) -> "Problem":
        """Relabel X by the permutation ``order`` (new index i is old index order[i])."""
        pos = {old: new for new, old in enumerate(order)}
        sets = [members_mask(pos[i] for i in mask_members(m)) for m in self.sets]
        return Problem([self.x_labels[i] for i in order], self.y_labels,
                       self.joint[list(order)], sets, keep_dominated=self.keep_dominated)

    def __repr__(self) -> str:
        return f"Problem(|X|={self.nx}, |Y|={self.ny}, |J|={self.nj}, |E|={self.n_edges})"


def load_problem(doc: dict) -> Problem:
    """Build a Problem from a parsed problem document (see the CLI for the schema)."""
    try:
        xs = doc["x_alphabet"]
        ys = doc["y_alphabet"]
        joint = doc["joint"]
    except (KeyError, TypeError) as exc:
        raise ProblemError(f"problem document missing field {exc}") from None
    if not isinstance(xs, list) or not isinstance(ys, list):
        raise ProblemError("alphabets must be lists of labels")
    xs = [str(v) for v in xs]
    ys = [str(v) for v in ys]
    try:
        joint = np.array(joint, dtype=float)
    except (TypeError, ValueError):
        raise ProblemError("joint must be a numeric matrix") from None
    if joint.shape != (len(xs), len(ys)):
        raise ProblemError(f"joint has shape {joint.shape}, expected {(len(xs), len(ys))}")
    has_edges = "graph_edges" in doc
    has_sets = "sets" in doc
    if has_edges == has_sets:
        raise ProblemError("exactly one of 'graph_edges' or 'sets' is required")
    options = doc.get("options") or {}
    if has_edges:
        graph = Graph.from_edges(xs, [[str(u) for u in e] for e in doc["graph_edges"]])
        return Problem.from_graph(graph, ys, joint)
    return Problem.from_sets(xs, ys, joint, [[str(v) for v in s] for s in doc["sets"]],
                             keep_dominated=bool(options.get("keep_dominated_sets", False)))
