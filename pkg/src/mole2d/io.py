"""Plain-text SE(2) pose-graph files and export of bootstrapped guesses.

Two formats are read:

* g2o:  ``VERTEX_SE2 id x y theta`` and
  ``EDGE_SE2 i j dx dy dth I11 I12 I13 I22 I23 I33``
* TORO: ``VERTEX2 id x y theta`` and
  ``EDGE2 i j dx dy dth Ixx Ixy Iyy Itt Ixt Iyt``

Information entries are stored internally in g2o order. Only the
orientation entry (``I33`` / ``Itt``) feeds the orientation variance.
External vertex ids are mapped to ``0..N-1`` in increasing id order, so the
smallest id becomes the reference node.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .angles import wrap
from .errors import Disconnected, FormatError, MalformedLine, NonpositiveInformation
from .graph import PoseGraph, build_graph

log = logging.getLogger(__name__)

G2O = "g2o"
TORO = "toro"
POSITION_MODES = ("odometry", "linear")

# TORO order (xx xy yy tt xt yt) -> g2o order (xx xy xt yy yt tt)
_TORO_TO_G2O = (0, 1, 4, 2, 5, 3)


@dataclass(frozen=True, eq=False)
class PoseGraph2D:
    """SE(2) pose graph with its derived orientation sub-problem.

    ``ids[i]`` is the external id of internal node ``i``; ``poses`` is
    ``N x 3`` (x, y, theta); ``tails``/``heads`` are internal indices;
    ``delta`` is ``m x 3`` (dx, dy, dth as read); ``information`` is ``m x 6``
    in g2o order.
    """

    ids: tuple
    poses: np.ndarray
    tails: np.ndarray
    heads: np.ndarray
    delta: np.ndarray
    information: np.ndarray
    orientation: PoseGraph = field(repr=False)

    @property
    def node_count(self) -> int:
        return len(self.ids)

    @property
    def m(self) -> int:
        return len(self.tails)

    def index_of(self, external_id: int) -> int:
        return self.ids.index(external_id)


def _orientation_graph(N, tails, heads, delta, info) -> PoseGraph:
    var = 1.0 / info[:, 5]
    return build_graph(N, zip(tails.tolist(), heads.tolist(), wrap(delta[:, 2]).tolist(), var.tolist()))


def make_pose_graph_2d(ids, poses, tails, heads, delta, information) -> PoseGraph2D:
    """Assemble a PoseGraph2D from internal-index arrays and validate it."""
    ids = tuple(int(i) for i in ids)
    poses = np.asarray(poses, dtype=float).reshape(len(ids), 3)
    tails = np.asarray(tails, dtype=np.int64)
    heads = np.asarray(heads, dtype=np.int64)
    delta = np.asarray(delta, dtype=float).reshape(len(tails), 3)
    information = np.asarray(information, dtype=float).reshape(len(tails), 6)
    bad = np.flatnonzero(~(information[:, 5] > 0))
    if bad.size:
        raise NonpositiveInformation(f"edge {int(bad[0])} has non-positive orientation information")
    g = _orientation_graph(len(ids), tails, heads, delta, information)
    return PoseGraph2D(ids, poses, tails, heads, delta, information, g)


def _floats(tokens, lineno, line):
    try:
        vals = [float(t) for t in tokens]
    except ValueError:
        raise MalformedLine(lineno, line, "non-numeric field") from None
    if not all(math.isfinite(v) for v in vals):
        raise MalformedLine(lineno, line, "non-finite field")
    return vals


def _int(token, lineno, line):
    try:
        return int(token)
    except ValueError:
        raise MalformedLine(lineno, line, "vertex id is not an integer") from None


def _parse(text: str, vertex_tag: str, edge_tag: str, toro: bool) -> PoseGraph2D:
    vertices = {}
    edges = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens or tokens[0].startswith("#"):
            continue
        tag = tokens[0]
        if tag == vertex_tag:
            if len(tokens) != 5:
                raise MalformedLine(lineno, line, f"{vertex_tag} needs 4 fields")
            vid = _int(tokens[1], lineno, line)
            if vid in vertices:
                raise MalformedLine(lineno, line, f"vertex {vid} declared twice")
            vertices[vid] = _floats(tokens[2:], lineno, line)
        elif tag == edge_tag:
            if len(tokens) != 12:
                raise MalformedLine(lineno, line, f"{edge_tag} needs 11 fields")
            i, j = _int(tokens[1], lineno, line), _int(tokens[2], lineno, line)
            vals = _floats(tokens[3:], lineno, line)
            info = vals[3:]
            if toro:
                info = [info[k] for k in _TORO_TO_G2O]
            if not info[5] > 0:
                raise NonpositiveInformation(f"line {lineno}: orientation information must be positive")
            edges.append((i, j, vals[:3], info))
        else:
            log.warning("line %d: ignoring unknown record %r", lineno, tag)
    if not edges and not vertices:
        raise FormatError("file holds no vertices and no edges")
    for i, j, _, _ in edges:
        for vid in (i, j):
            if vid not in vertices:
                log.warning("vertex %d used by an edge but never declared; creating it at the origin", vid)
                vertices[vid] = [0.0, 0.0, 0.0]
    ids = sorted(vertices)
    index = {vid: k for k, vid in enumerate(ids)}
    if len(ids) < 2:
        raise Disconnected("a pose graph needs at least two vertices")
    poses = np.array([vertices[v] for v in ids], dtype=float)
    tails = np.array([index[e[0]] for e in edges], dtype=np.int64)
    heads = np.array([index[e[1]] for e in edges], dtype=np.int64)
    delta = np.array([e[2] for e in edges], dtype=float).reshape(-1, 3)
    info = np.array([e[3] for e in edges], dtype=float).reshape(-1, 6)
    return make_pose_graph_2d(ids, poses, tails, heads, delta, info)


def parse_g2o(text: str) -> PoseGraph2D:
    return _parse(text, "VERTEX_SE2", "EDGE_SE2", toro=False)


def parse_toro(text: str) -> PoseGraph2D:
    return _parse(text, "VERTEX2", "EDGE2", toro=True)


def parse(text: str, fmt: str = G2O) -> PoseGraph2D:
    if fmt == G2O:
        return parse_g2o(text)
    if fmt == TORO:
        return parse_toro(text)
    raise ValueError(f"unknown format {fmt!r}")


def read(path, fmt: str = G2O) -> PoseGraph2D:
    with open(path) as fh:
        return parse(fh.read(), fmt)


def _num(x) -> str:
    # repr gives the shortest string that parses back to the same double
    return repr(float(x))


def write_g2o(g2: PoseGraph2D, poses=None) -> str:
    poses = g2.poses if poses is None else np.asarray(poses, dtype=float)
    out = []
    for vid, (x, y, t) in zip(g2.ids, poses):
        out.append(f"VERTEX_SE2 {vid} {_num(x)} {_num(y)} {_num(t)}")
    for e in range(g2.m):
        i, j = g2.ids[g2.tails[e]], g2.ids[g2.heads[e]]
        fields = " ".join(_num(v) for v in np.concatenate([g2.delta[e], g2.information[e]]))
        out.append(f"EDGE_SE2 {i} {j} {fields}")
    return "\n".join(out) + "\n"


def write_toro(g2: PoseGraph2D, poses=None) -> str:
    poses = g2.poses if poses is None else np.asarray(poses, dtype=float)
    back = np.argsort(_TORO_TO_G2O)
    out = []
    for vid, (x, y, t) in zip(g2.ids, poses):
        out.append(f"VERTEX2 {vid} {_num(x)} {_num(y)} {_num(t)}")
    for e in range(g2.m):
        i, j = g2.ids[g2.tails[e]], g2.ids[g2.heads[e]]
        info = g2.information[e][back]
        fields = " ".join(_num(v) for v in np.concatenate([g2.delta[e], info]))
        out.append(f"EDGE2 {i} {j} {fields}")
    return "\n".join(out) + "\n"


def from_instance(inst) -> PoseGraph2D:
    """SE(2) view of a synthetic instance (positions and translations default to zero)."""
    g = inst.graph
    N = g.node_count
    theta = np.concatenate([[0.0], inst.theta_true])
    pos = np.zeros((N, 2)) if inst.positions is None else np.asarray(inst.positions, dtype=float)
    trans = np.zeros((g.m, 2)) if inst.translations is None else np.asarray(inst.translations, dtype=float)
    poses = np.column_stack([pos, theta])
    delta = np.column_stack([trans, g.measurements])
    txy = 1.0 / inst.translation_sigma**2
    info = np.zeros((g.m, 6))
    info[:, 0] = txy
    info[:, 3] = txy
    info[:, 5] = 1.0 / g.variances
    return make_pose_graph_2d(range(N), poses, g.tails, g.heads, delta, info)


# --- truth sidecar ----------------------------------------------------------


def write_truth(inst, gamma=None, ids=None) -> str:
    """``TRUTH_THETA id theta`` per node plus one ``TRUTH_GAMMA`` line."""
    theta = np.concatenate([[0.0], inst.theta_true])
    ids = range(theta.size) if ids is None else ids
    lines = [f"TRUTH_THETA {vid} {_num(t)}" for vid, t in zip(ids, theta)]
    gamma = [] if gamma is None else np.asarray(gamma, dtype=np.int64).tolist()
    lines.append(" ".join(["TRUTH_GAMMA"] + [str(v) for v in gamma]))
    return "\n".join(lines) + "\n"


def parse_truth(text: str):
    """Returns ``({id: theta}, gamma)``."""
    theta, gamma = {}, None
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens or tokens[0].startswith("#"):
            continue
        if tokens[0] == "TRUTH_THETA" and len(tokens) == 3:
            theta[_int(tokens[1], lineno, line)] = _floats(tokens[2:], lineno, line)[0]
        elif tokens[0] == "TRUTH_GAMMA":
            gamma = np.array([_int(t, lineno, line) for t in tokens[1:]], dtype=np.int64)
        else:
            raise MalformedLine(lineno, line, "unknown truth record")
    return theta, gamma


# --- positions from orientations ---------------------------------------------


def _full_theta(g2: PoseGraph2D, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size == g2.node_count - 1:
        theta = np.concatenate([[0.0], theta])
    if theta.size != g2.node_count:
        raise ValueError(f"expected {g2.node_count - 1} or {g2.node_count} orientations, got {theta.size}")
    return theta


def _rotate(theta, d):
    c, s = np.cos(theta), np.sin(theta)
    return np.column_stack([c * d[:, 0] - s * d[:, 1], s * d[:, 0] + c * d[:, 1]])


def solve_positions_given_orientations(g2: PoseGraph2D, theta) -> np.ndarray:
    """Weighted linear least-squares positions with node 0 at the origin.

    Each edge predicts ``p_j - p_i = R(theta_i) [dx, dy]``; its residual is
    weighted by the edge's position information block rotated into the world
    frame. Returns an ``N x 2`` array.
    """
    th = _full_theta(g2, theta)
    N, m = g2.node_count, g2.m
    ncomp, _ = connected_components(
        sp.coo_matrix((np.ones(m), (g2.tails, g2.heads)), shape=(N, N)), directed=False
    )
    if ncomp != 1:
        raise Disconnected("position graph is not connected")
    I = g2.information
    omega = np.stack([np.stack([I[:, 0], I[:, 1]], 1), np.stack([I[:, 1], I[:, 3]], 1)], 1)  # m x 2 x 2
    if np.any(np.linalg.det(omega) <= 0) or np.any(omega[:, 0, 0] <= 0):
        raise NonpositiveInformation("position information block is not positive definite")
    c, s = np.cos(th[g2.tails]), np.sin(th[g2.tails])
    R = np.stack([np.stack([c, -s], 1), np.stack([s, c], 1)], 1)
    W = R @ omega @ R.transpose(0, 2, 1)
    pred = _rotate(th[g2.tails], g2.delta[:, :2])
    # unknowns: (x, y) of nodes 1..N-1, interleaved
    rows, cols, vals = [], [], []
    rhs = np.zeros(2 * (N - 1))
    for a in range(2):
        for b in range(2):
            w = W[:, a, b]
            for u, su in ((g2.heads, 1.0), (g2.tails, -1.0)):
                for v, sv in ((g2.heads, 1.0), (g2.tails, -1.0)):
                    keep = (u > 0) & (v > 0)
                    rows.append(2 * (u[keep] - 1) + a)
                    cols.append(2 * (v[keep] - 1) + b)
                    vals.append(su * sv * w[keep])
            wp = w * pred[:, b]
            for u, su in ((g2.heads, 1.0), (g2.tails, -1.0)):
                keep = u > 0
                np.add.at(rhs, 2 * (u[keep] - 1) + a, su * wp[keep])
    H = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(2 * (N - 1), 2 * (N - 1)))
    x = spla.splu(H).solve(rhs)
    return np.vstack([[0.0, 0.0], x.reshape(N - 1, 2)])


def integrate_odometry(g2: PoseGraph2D, theta) -> np.ndarray:
    """Chain positions along a breadth-first spanning tree from node 0."""
    th = _full_theta(g2, theta)
    N = g2.node_count
    pred = _rotate(th[g2.tails], g2.delta[:, :2])
    adj = [[] for _ in range(N)]
    for e, (t, h) in enumerate(zip(g2.tails.tolist(), g2.heads.tolist())):
        adj[t].append((e, h, 1.0))
        adj[h].append((e, t, -1.0))
    pos = np.full((N, 2), np.nan)
    pos[0] = 0.0
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for e, v, sign in adj[u]:
            if np.isnan(pos[v, 0]):
                pos[v] = pos[u] + sign * pred[e]
                queue.append(v)
    if np.isnan(pos).any():
        raise Disconnected("position graph is not connected")
    return pos


def bootstrapped_poses(g2: PoseGraph2D, theta, position_mode: str = "odometry") -> np.ndarray:
    th = wrap(_full_theta(g2, theta))
    if position_mode == "odometry":
        pos = integrate_odometry(g2, th)
    elif position_mode == "linear":
        pos = solve_positions_given_orientations(g2, th)
    else:
        raise ValueError(f"position_mode must be one of {POSITION_MODES}")
    return np.column_stack([pos, th])


def write_bootstrapped(g2: PoseGraph2D, hypothesis, position_mode: str = "odometry") -> str:
    """g2o text whose vertices carry the hypothesis orientations; edges are unchanged."""
    theta = hypothesis.theta_wrapped if hasattr(hypothesis, "theta_wrapped") else hypothesis
    return write_g2o(g2, bootstrapped_poses(g2, theta, position_mode))
