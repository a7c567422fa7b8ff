"""Directed pose graphs for the orientation sub-problem.

Node 0 is the reference whose orientation is fixed to zero. An edge
``tail -> head`` carries a measurement of ``theta[head] - theta[tail]``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .angles import wrap
from .errors import (
    Disconnected,
    GraphError,
    NonFinite,
    NonpositiveVariance,
    OdometricPathMissing,
    SelfLoop,
)

log = logging.getLogger(__name__)

ODOMETRIC = "odometric"
MIN_UNCERTAINTY = "minimum-uncertainty"


class EdgeRecord(NamedTuple):
    id: int
    tail: int
    head: int


@dataclass(frozen=True, eq=False)
class PoseGraph:
    node_count: int
    tails: np.ndarray
    heads: np.ndarray
    measurements: np.ndarray
    variances: np.ndarray
    wrapped_on_ingest: tuple = ()

    @property
    def n(self) -> int:
        return self.node_count - 1

    @property
    def m(self) -> int:
        return len(self.tails)

    @property
    def cyclomatic(self) -> int:
        return self.m - self.n

    @property
    def edges(self) -> list[EdgeRecord]:
        return [EdgeRecord(e, int(t), int(h)) for e, (t, h) in enumerate(zip(self.tails, self.heads))]

    def with_measurements(self, measurements, variances=None) -> "PoseGraph":
        v = self.variances if variances is None else variances
        return build_graph(
            self.node_count,
            zip(self.tails.tolist(), self.heads.tolist(), np.asarray(measurements, float).tolist(), np.asarray(v, float).tolist()),
        )

    def __repr__(self):
        return f"PoseGraph(n={self.n}, m={self.m}, cycles={self.cyclomatic})"


def build_graph(node_count: int, edges: Iterable) -> PoseGraph:
    """Validate and freeze a pose graph.

    ``edges`` yields ``(tail, head, measurement, variance)``. Measurements
    outside (-pi, +pi] are wrapped and their edge ids recorded in
    ``wrapped_on_ingest``.
    """
    if node_count < 2:
        raise GraphError("a pose graph needs at least two nodes")
    rows = list(edges)
    if not rows:
        raise Disconnected("graph has no edges")
    tails = np.array([int(r[0]) for r in rows], dtype=np.int64)
    heads = np.array([int(r[1]) for r in rows], dtype=np.int64)
    meas = np.array([float(r[2]) for r in rows])
    var = np.array([float(r[3]) for r in rows])

    if tails.min() < 0 or heads.min() < 0 or max(tails.max(), heads.max()) >= node_count:
        raise GraphError("edge references a node outside [0, node_count)")
    loops = np.flatnonzero(tails == heads)
    if loops.size:
        raise SelfLoop(f"edge {int(loops[0])} is a self-loop on node {int(tails[loops[0]])}")
    if not np.all(np.isfinite(meas)) or not np.all(np.isfinite(var)):
        raise NonFinite("measurements and variances must be finite")
    bad = np.flatnonzero(var <= 0)
    if bad.size:
        raise NonpositiveVariance(f"edge {int(bad[0])} has variance {var[bad[0]]}")

    outside = np.flatnonzero((meas <= -math.pi) | (meas > math.pi))
    if outside.size:
        log.warning("wrapping %d measurements outside (-pi, pi]", outside.size)
        meas = meas.copy()
        meas[outside] = wrap(meas[outside])

    adj = sp.coo_matrix((np.ones(len(rows)), (tails, heads)), shape=(node_count, node_count))
    ncomp, _ = connected_components(adj, directed=False)
    if ncomp != 1:
        raise Disconnected(f"graph has {ncomp} connected components")

    for arr in (tails, heads, meas, var):
        arr.setflags(write=False)
    return PoseGraph(node_count, tails, heads, meas, var, tuple(int(e) for e in outside))


def incidence_matrices(g: PoseGraph, sparse: bool = False):
    """Full ((n+1) x m) and reduced (n x m) incidence matrices.

    Column ``e`` has -1 at the tail row and +1 at the head row; the reduced
    matrix drops node 0.
    """
    m = g.m
    cols = np.concatenate([np.arange(m), np.arange(m)])
    rows = np.concatenate([g.tails, g.heads])
    vals = np.concatenate([-np.ones(m, dtype=np.int64), np.ones(m, dtype=np.int64)])
    full = sp.csr_matrix((vals, (rows, cols)), shape=(g.node_count, m), dtype=np.int64)
    reduced = full[1:, :]
    if sparse:
        return full, reduced
    return full.toarray(), reduced.toarray()


def relative_rotations(g: PoseGraph, theta) -> np.ndarray:
    """``theta[head] - theta[tail]`` per edge, with node 0 at zero."""
    full = np.concatenate([[0.0], np.asarray(theta, dtype=float)])
    return full[g.heads] - full[g.tails]


@dataclass(frozen=True, eq=False)
class SpanningTree:
    tree_edges: frozenset
    strategy: str
    edge_ordering: np.ndarray = field(repr=False)

    @property
    def chords(self) -> np.ndarray:
        return self.edge_ordering[len(self.tree_edges):]


def _ordering(m: int, tree: set) -> np.ndarray:
    t = sorted(tree)
    rest = [e for e in range(m) if e not in tree]
    order = np.array(t + rest, dtype=np.int64)
    order.setflags(write=False)
    return order


class _DisjointSet:
    def __init__(self, size):
        self.parent = list(range(size))

    def find(self, a):
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def odometric_tree(g: PoseGraph) -> set:
    first = {}
    for e, (t, h) in enumerate(zip(g.tails.tolist(), g.heads.tolist())):
        if abs(t - h) == 1:
            first.setdefault(min(t, h), e)
    missing = [i for i in range(g.n) if i not in first]
    if missing:
        raise OdometricPathMissing(f"no edge between consecutive nodes {missing[0]} and {missing[0] + 1}")
    return {first[i] for i in range(g.n)}


def minimum_uncertainty_tree(g: PoseGraph) -> set:
    """Kruskal on edge variances; ties go to the smaller edge id."""
    order = np.lexsort((np.arange(g.m), g.variances))
    ds = _DisjointSet(g.node_count)
    tree = set()
    tails, heads = g.tails.tolist(), g.heads.tolist()
    for e in order.tolist():
        if ds.union(tails[e], heads[e]):
            tree.add(e)
            if len(tree) == g.n:
                break
    return tree


def spanning_tree(g: PoseGraph, strategy: str = MIN_UNCERTAINTY) -> SpanningTree:
    if strategy == ODOMETRIC:
        tree = odometric_tree(g)
    elif strategy == MIN_UNCERTAINTY:
        tree = minimum_uncertainty_tree(g)
    else:
        raise ValueError(f"unknown spanning tree strategy {strategy!r}")
    return SpanningTree(frozenset(tree), strategy, _ordering(g.m, tree))


def tree_weight(g: PoseGraph, tree: SpanningTree) -> float:
    return float(g.variances[sorted(tree.tree_edges)].sum())
