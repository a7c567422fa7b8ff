"""Cycle bases of pose graphs and the integer right pseudoinverse.

Rows of a cycle basis matrix are signed circuits: +1 where the circuit runs
along an edge from tail to head, -1 where it runs against it. Every basis is
stored against a spanning tree: ``ordering`` lists tree edges first and chords
last, and the chord columns form the square block ``C_L``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import dijkstra

from .errors import CanonicalizationFailure
from .graph import (
    MIN_UNCERTAINTY,
    ODOMETRIC,
    PoseGraph,
    SpanningTree,
    spanning_tree,
)

log = logging.getLogger(__name__)

FCB_ODO = "fcb-odo"
FCB_MST = "fcb-mst"
MCB = "mcb"
BASIS_KINDS = (FCB_ODO, FCB_MST, MCB)

# C_L blocks up to this size are inverted exactly by fraction-free elimination
EXACT_INVERSE_LIMIT = 120


@dataclass(frozen=True, eq=False)
class CycleBasisMatrix:
    matrix: sp.csr_matrix = field(repr=False)
    tree: SpanningTree = field(repr=False)
    kind: str

    @property
    def n_cycles(self) -> int:
        return self.matrix.shape[0]

    @property
    def m(self) -> int:
        return self.matrix.shape[1]

    @property
    def ordering(self) -> np.ndarray:
        return self.tree.edge_ordering

    @property
    def chords(self) -> np.ndarray:
        return self.tree.chords

    @property
    def C_L(self) -> sp.csr_matrix:
        return self.matrix[:, self.chords]

    @property
    def C_T(self) -> sp.csr_matrix:
        return self.matrix[:, self.ordering[: self.m - self.n_cycles]]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def canonical(self) -> np.ndarray:
        """Dense matrix with columns in (tree | chord) order."""
        return self.matrix[:, self.ordering].toarray()

    def rows(self):
        """Each circuit as a dict ``edge -> sign``."""
        M = self.matrix
        return [
            dict(zip(M.indices[M.indptr[r]:M.indptr[r + 1]].tolist(), M.data[M.indptr[r]:M.indptr[r + 1]].tolist()))
            for r in range(M.shape[0])
        ]

    def __repr__(self):
        return f"CycleBasisMatrix(kind={self.kind!r}, cycles={self.n_cycles}, m={self.m})"


def _rows_to_csr(rows, m):
    indptr = [0]
    indices, data = [], []
    for row in rows:
        for e in sorted(row):
            indices.append(e)
            data.append(row[e])
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.array(data, dtype=np.int64), np.array(indices, dtype=np.int64), np.array(indptr, dtype=np.int64)),
        shape=(len(rows), m),
    )


def cycle_weight(circuit, variances) -> float:
    """Sum of ``variance * |c_e|`` over the circuit."""
    if sp.issparse(circuit):
        circuit = circuit.toarray().ravel()
    c = np.asarray(circuit)
    return float(np.abs(c) @ np.asarray(variances, dtype=float))


def basis_weight(C, variances) -> float:
    M = C.matrix if isinstance(C, CycleBasisMatrix) else sp.csr_matrix(C)
    return float(np.abs(M).sum(axis=0).A1 @ np.asarray(variances, dtype=float))


class _RootedTree:
    """Spanning tree rooted at node 0 with parent pointers."""

    def __init__(self, g: PoseGraph, tree_edges):
        adj = [[] for _ in range(g.node_count)]
        tails, heads = g.tails.tolist(), g.heads.tolist()
        for e in sorted(tree_edges):
            adj[tails[e]].append((heads[e], e))
            adj[heads[e]].append((tails[e], e))
        parent = [-1] * g.node_count
        pedge = [-1] * g.node_count
        depth = [0] * g.node_count
        seen = [False] * g.node_count
        seen[0] = True
        stack = [0]
        while stack:
            u = stack.pop()
            for v, e in adj[u]:
                if not seen[v]:
                    seen[v] = True
                    parent[v], pedge[v], depth[v] = u, e, depth[u] + 1
                    stack.append(v)
        self.parent, self.pedge, self.depth = parent, pedge, depth
        self.tails, self.heads = tails, heads

    def path(self, a, b):
        """Signed edges of the tree path walked from ``a`` to ``b``."""
        up, down = [], []
        parent, pedge, depth, tails = self.parent, self.pedge, self.depth, self.tails
        while depth[a] > depth[b]:
            e = pedge[a]
            up.append((e, 1 if tails[e] == a else -1))
            a = parent[a]
        while depth[b] > depth[a]:
            e = pedge[b]
            down.append((e, 1 if tails[e] == parent[b] else -1))
            b = parent[b]
        while a != b:
            e = pedge[a]
            up.append((e, 1 if tails[e] == a else -1))
            a = parent[a]
            e = pedge[b]
            down.append((e, 1 if tails[e] == parent[b] else -1))
            b = parent[b]
        return up + down[::-1]


def fundamental_cycle_basis(g: PoseGraph, tree: SpanningTree, kind: str | None = None) -> CycleBasisMatrix:
    """One circuit per chord: the chord forwards, then the tree path home.

    Rows follow the chord order of ``tree.edge_ordering``, so ``C_L`` is the
    identity.
    """
    rooted = _RootedTree(g, tree.tree_edges)
    rows = []
    for e in tree.chords.tolist():
        row = {e: 1}
        for te, s in rooted.path(int(g.heads[e]), int(g.tails[e])):
            row[te] = row.get(te, 0) + s
        rows.append(row)
    if kind is None:
        kind = FCB_ODO if tree.strategy == ODOMETRIC else FCB_MST
    return CycleBasisMatrix(_rows_to_csr(rows, g.m), tree, kind)


def _representative_edges(g: PoseGraph, weights):
    """Lightest edge per unordered node pair (ties to the smaller id)."""
    best = {}
    for e, (t, h) in enumerate(zip(g.tails.tolist(), g.heads.tolist())):
        key = (t, h) if t < h else (h, t)
        cur = best.get(key)
        if cur is None or weights[e] < weights[cur]:
            best[key] = e
    return best


def _branches(pred, sources):
    """First hop from the source towards each node in its shortest-path tree."""
    N = pred.shape[1]
    idx = np.arange(N)
    rows = np.arange(len(sources))
    J = np.where(pred == np.asarray(sources)[:, None], idx[None, :], pred)
    J[rows, sources] = sources
    while True:
        nxt = np.take_along_axis(J, J, axis=1)
        if np.array_equal(nxt, J):
            return J
        J = nxt


def horton_candidates(g: PoseGraph, weights, chunk: int = 256):
    """Horton's candidate family, sorted by weight.

    Candidate ``i`` is the cycle made of the shortest path ``source -> x``,
    the edge ``(x, y)`` and the shortest path ``y -> source``. Returns
    ``(weight, source, edge, pred, pred_edge)`` where ``pred`` and
    ``pred_edge`` hold, per source, the parent node and the edge to it in the
    shortest-path tree. Candidates whose two paths share more than the source,
    or that use the edge as a tree edge, are dropped.
    """
    N = g.node_count
    rep = _representative_edges(g, weights)
    keys = np.array(list(rep.keys()), dtype=np.int64).reshape(-1, 2)
    rep_ids = np.array(list(rep.values()), dtype=np.int64)
    vals = weights[rep_ids]
    W = sp.csr_matrix(
        (np.concatenate([vals, vals]), (np.concatenate([keys[:, 0], keys[:, 1]]), np.concatenate([keys[:, 1], keys[:, 0]]))),
        shape=(N, N),
    )
    flat_keys = keys[:, 0] * N + keys[:, 1]
    key_order = np.argsort(flat_keys)
    flat_keys, rep_ids = flat_keys[key_order], rep_ids[key_order]
    is_rep = np.zeros(g.m, dtype=bool)
    is_rep[rep_ids] = True
    x, y = g.tails, g.heads
    pred_all = np.empty((N, N), dtype=np.int32)
    pedge_all = np.full((N, N), -1, dtype=np.int32)
    idx = np.arange(N)
    out_w, out_v, out_e = [], [], []
    for start in range(0, N, chunk):
        src = np.arange(start, min(N, start + chunk))
        dist, pred = dijkstra(W, directed=True, indices=src, return_predecessors=True)
        pred[np.arange(len(src)), src] = src
        pred_all[src] = pred
        lo = np.minimum(pred, idx[None, :]).astype(np.int64)
        hi = np.maximum(pred, idx[None, :]).astype(np.int64)
        pos = np.searchsorted(flat_keys, lo * N + hi)
        pos = np.minimum(pos, len(flat_keys) - 1)
        pe = np.where(pred == idx[None, :], -1, rep_ids[pos])
        pedge_all[src] = pe
        br = _branches(pred, src)
        tree_edge = is_rep[None, :] & ((pred[:, y] == x[None, :]) | (pred[:, x] == y[None, :]))
        valid = (br[:, x] != br[:, y]) & ~tree_edge
        wt = dist[:, x] + weights[None, :] + dist[:, y]
        r, e = np.nonzero(valid)
        out_w.append(wt[r, e])
        out_v.append(src[r])
        out_e.append(e)
    w = np.concatenate(out_w)
    v = np.concatenate(out_v)
    e = np.concatenate(out_e)
    order = np.lexsort((v, e, w))
    return w[order], v[order], e[order], pred_all, pedge_all


def _batch_edges(vs, es, tails, heads, pred, pedge):
    """Edge ids of each candidate cycle, one padded row per candidate."""
    cols = [es]
    for start in (tails[es], heads[es]):
        u = start.copy()
        active = u != vs
        while active.any():
            cols.append(np.where(active, pedge[vs, u], -1))
            u = np.where(active, pred[vs, u], u)
            active = u != vs
    return np.stack(cols, axis=1)


def _signed_walk(v, e, tails, heads, pred, pedge):
    walk = [(e, 1)]
    for start, forward in ((tails[e], True), (heads[e], False)):
        u = start
        while u != v:
            p = int(pred[v, u])
            te = int(pedge[v, u])
            s = 1 if tails[te] == p else -1
            # the cycle runs p -> u on the way out to x and u -> p on the way back from y
            walk.append((te, s if forward else -s))
            u = p
    return dict(walk)


def minimum_cycle_basis_circuits(g: PoseGraph, weights=None, batch: int = 4096):
    """Signed circuits of a minimum cycle basis via Horton's candidate set.

    Candidates are scanned in ascending weight and kept when independent over
    GF(2) of those already kept.
    """
    weights = np.asarray(g.variances if weights is None else weights, dtype=float)
    ell = g.cyclomatic
    if ell == 0:
        return []
    _, vs, es, pred, pedge = horton_candidates(g, weights)
    tails, heads = g.tails, g.heads
    tails_l = tails.tolist()
    pivots = {}
    seen = set()
    circuits = []
    for start in range(0, len(vs), batch):
        bv, be = vs[start:start + batch], es[start:start + batch]
        rows = np.sort(_batch_edges(bv, be, tails, heads, pred, pedge), axis=1)
        for i in range(rows.shape[0]):
            key = rows[i].tobytes()
            if key in seen:
                continue
            seen.add(key)
            mask = 0
            for te in rows[i].tolist():
                if te >= 0:
                    mask |= 1 << te
            red = mask
            while red:
                b = pivots.get(red.bit_length() - 1)
                if b is None:
                    break
                red ^= b
            if not red:
                continue
            pivots[red.bit_length() - 1] = red
            row = _signed_walk(int(bv[i]), int(be[i]), tails_l, heads, pred, pedge)
            if row[min(row)] < 0:
                row = {k: -s for k, s in row.items()}
            circuits.append(row)
            if len(circuits) == ell:
                return circuits
    raise CanonicalizationFailure(f"found {len(circuits)} independent cycles, expected {ell}")


def minimum_cycle_basis(g: PoseGraph, tree: SpanningTree | None = None) -> CycleBasisMatrix:
    """Minimum-uncertainty cycle basis, canonical against a spanning tree.

    Edge weights are the measurement variances. Unless given, the tree is the
    minimum-uncertainty spanning tree.
    """
    if tree is None:
        tree = spanning_tree(g, MIN_UNCERTAINTY)
    rows = minimum_cycle_basis_circuits(g)
    return CycleBasisMatrix(_rows_to_csr(rows, g.m), tree, MCB)


def cycle_basis(g: PoseGraph, kind: str = MCB) -> CycleBasisMatrix:
    if kind == FCB_ODO:
        return fundamental_cycle_basis(g, spanning_tree(g, ODOMETRIC), FCB_ODO)
    if kind == FCB_MST:
        return fundamental_cycle_basis(g, spanning_tree(g, MIN_UNCERTAINTY), FCB_MST)
    if kind == MCB:
        return minimum_cycle_basis(g)
    raise ValueError(f"unknown basis kind {kind!r}; expected one of {BASIS_KINDS}")


def is_circuit(row: dict, g: PoseGraph) -> bool:
    """Every touched node has degree two and the support is connected."""
    if not row:
        return False
    deg = {}
    adj = {}
    for e in row:
        t, h = int(g.tails[e]), int(g.heads[e])
        deg[t] = deg.get(t, 0) + 1
        deg[h] = deg.get(h, 0) + 1
        adj.setdefault(t, []).append(h)
        adj.setdefault(h, []).append(t)
    if any(d != 2 for d in deg.values()):
        return False
    start = next(iter(adj))
    seen, stack = {start}, [start]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(deg)


def bareiss_determinant(M) -> int:
    """Exact determinant of an integer matrix by fraction-free elimination."""
    a = [[int(v) for v in row] for row in np.asarray(M)]
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        akk = a[k][k]
        rowk = a[k]
        for i in range(k + 1, n):
            ai = a[i]
            aik = ai[k]
            for j in range(k + 1, n):
                ai[j] = (ai[j] * akk - aik * rowk[j]) // prev
        prev = akk
    return sign * a[n - 1][n - 1]


def exact_integer_inverse(M):
    """``(inverse, det)`` of an integer matrix using fraction-free Gauss-Jordan.

    ``inverse`` is an object array of Fractions (integers when ``|det| == 1``).
    Raises CanonicalizationFailure when the matrix is singular.
    """
    n = M.shape[0]
    a = np.empty((n, 2 * n), dtype=object)
    a[:, :n] = np.asarray(M, dtype=np.int64).astype(object)
    a[:, n:] = np.eye(n, dtype=np.int64).astype(object)
    prev = 1
    sign = 1
    for k in range(n):
        if a[k, k] == 0:
            nz = [i for i in range(k + 1, n) if a[i, k] != 0]
            if not nz:
                raise CanonicalizationFailure("C_L is singular; rows do not form a cycle basis")
            i = nz[0]
            a[[k, i]] = a[[i, k]]
            sign = -sign
        piv = a[k, k]
        col = a[:, k].copy()
        others = [i for i in range(n) if i != k]
        # Bareiss update: every other row is scaled by piv and eliminated
        a[others] = (a[others] * piv - np.outer(col[others], a[k])) // prev
        prev = piv
    det = sign * prev if n else 1
    # left block is now prev * I (up to the sign bookkeeping of swaps)
    inv = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            inv[i, j] = Fraction(a[i, n + j], a[i, i])
    return inv, det


class PseudoinverseApplier:
    """Solves ``C k = gamma`` over the integers with ``k`` supported on chords.

    Small ``C_L`` blocks are inverted exactly up front. Larger blocks get a
    sparse LU whose rounded solution is accepted only after the exact integer
    check ``C_L x == gamma``; otherwise the exact inverse is built lazily.
    """

    def __init__(self, C: CycleBasisMatrix):
        self.C = C
        self.chords = C.chords
        CL = C.C_L.tocsr().astype(np.int64)
        self.CL = CL
        ell = CL.shape[0]
        self.ell = ell
        self._inv = None
        self._lu = None
        self.det = None
        if ell == 0:
            self.mode = "empty"
        elif (CL != sp.identity(ell, dtype=np.int64, format="csr")).nnz == 0:
            self.mode = "identity"
            self.det = 1
        elif ell <= EXACT_INVERSE_LIMIT:
            self.mode = "exact"
            self._build_exact()
        else:
            self.mode = "verified-lu"
            try:
                self._lu = spla.splu(CL.astype(float).tocsc())
            except RuntimeError as exc:
                raise CanonicalizationFailure("C_L is singular; rows do not form a cycle basis") from exc

    def _build_exact(self):
        self._inv, self.det = exact_integer_inverse(self.CL.toarray())

    def _exact_solve(self, gamma):
        if self._inv is None:
            self._build_exact()
        g = [int(v) for v in gamma]
        x = []
        for row in self._inv:
            s = sum((c * gv for c, gv in zip(row, g) if c), Fraction(0))
            if s.denominator != 1:
                raise CanonicalizationFailure("no integer solution: C_L is not unimodular")
            x.append(int(s))
        return np.array(x, dtype=np.int64)

    def chord_solution(self, gamma) -> np.ndarray:
        gamma = np.asarray(gamma, dtype=np.int64).ravel()
        if gamma.size != self.ell:
            raise ValueError(f"gamma has length {gamma.size}, expected {self.ell}")
        if self.mode == "empty":
            return np.zeros(0, dtype=np.int64)
        if self.mode == "identity":
            return gamma.copy()
        if self.mode == "exact":
            return self._exact_solve(gamma)
        x = np.rint(self._lu.solve(gamma.astype(float))).astype(np.int64)
        if np.array_equal(self.CL @ x, gamma):
            return x
        log.info("rounded LU solution failed exact check; using exact inverse")
        return self._exact_solve(gamma)

    def apply(self, gamma) -> np.ndarray:
        """Integer ``k`` of length m with ``C k == gamma`` exactly."""
        x = self.chord_solution(gamma)
        k = np.zeros(self.C.m, dtype=np.int64)
        k[self.chords] = x
        if not np.array_equal(self.C.matrix @ k, np.asarray(gamma, dtype=np.int64).ravel()):
            raise CanonicalizationFailure("C k != gamma after solving on the chord block")
        return k


def apply_pseudoinverse(C: CycleBasisMatrix, gamma) -> np.ndarray:
    return PseudoinverseApplier(C).apply(gamma)
