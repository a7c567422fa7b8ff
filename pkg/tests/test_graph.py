import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mole2d.errors import Disconnected, NonFinite, NonpositiveVariance, OdometricPathMissing, SelfLoop
from mole2d.graph import (
    MIN_UNCERTAINTY,
    ODOMETRIC,
    build_graph,
    incidence_matrices,
    relative_rotations,
    spanning_tree,
    tree_weight,
)

from conftest import random_instance


def test_minimal_graph():
    g = build_graph(2, [(0, 1, 0.5, 0.01)])
    assert (g.n, g.m, g.cyclomatic) == (1, 1, 0)


def test_fig1_dimensions(fig1):
    assert (fig1.n, fig1.m, fig1.cyclomatic) == (7, 9, 2)


def test_disconnected():
    with pytest.raises(Disconnected):
        build_graph(4, [(0, 1, 0.1, 0.1), (2, 3, 0.1, 0.1)])


def test_validation_errors():
    with pytest.raises(SelfLoop):
        build_graph(2, [(0, 1, 0.1, 0.1), (1, 1, 0.1, 0.1)])
    with pytest.raises(NonpositiveVariance):
        build_graph(2, [(0, 1, 0.1, 0.0)])
    with pytest.raises(NonFinite):
        build_graph(2, [(0, 1, float("nan"), 0.1)])
    with pytest.raises(ValueError):
        build_graph(1, [])


def test_wrap_on_ingest():
    g = build_graph(2, [(0, 1, 4.0, 0.1), (1, 0, 0.1, 0.1)])
    assert g.measurements[0] == pytest.approx(4.0 - 2 * np.pi)
    assert g.wrapped_on_ingest == (0,)


def test_parallel_edges_allowed():
    g = build_graph(2, [(0, 1, 0.1, 0.1), (0, 1, 0.12, 0.1)])
    assert g.cyclomatic == 1


def test_fig1_incidence(fig1):
    full, red = incidence_matrices(fig1)
    assert full.shape == (8, 9) and red.shape == (7, 9)
    assert full[0, 0] == -1 and full[1, 0] == 1
    assert np.all(full.sum(axis=0) == 0)
    assert np.linalg.matrix_rank(red) == 7
    # edge 7 of the figure runs G -> C
    assert full[6, 6] == -1 and full[2, 6] == 1


def test_incidence_small():
    full, red = incidence_matrices(build_graph(2, [(0, 1, 0.1, 0.1)]))
    assert full.tolist() == [[-1], [1]] and red.tolist() == [[1]]
    _, red = incidence_matrices(build_graph(3, [(0, 1, 0.1, 0.1), (1, 2, 0.1, 0.1)]))
    assert red.tolist() == [[1, -1], [0, 1]]


def test_sparse_incidence_matches_dense(fig1):
    full, red = incidence_matrices(fig1)
    sf, sr = incidence_matrices(fig1, sparse=True)
    assert np.array_equal(sf.toarray(), full) and np.array_equal(sr.toarray(), red)


def test_fig1_odometric_chords(fig1):
    t = spanning_tree(fig1, ODOMETRIC)
    assert sorted(t.chords.tolist()) == [6, 8]
    assert sorted(t.tree_edges) == [0, 1, 2, 3, 4, 5, 7]
    assert sorted(t.edge_ordering.tolist()) == list(range(9))
    assert set(t.edge_ordering[:7].tolist()) == t.tree_edges


def test_tree_graph_has_no_chords():
    g = build_graph(4, [(0, 1, 0.1, 0.1), (1, 2, 0.1, 0.1), (2, 3, 0.1, 0.1)])
    for strategy in (ODOMETRIC, MIN_UNCERTAINTY):
        assert spanning_tree(g, strategy).chords.size == 0


def test_triangle_mst():
    g = build_graph(3, [(0, 1, 0.1, 0.1), (1, 2, 0.1, 0.2), (2, 0, 0.1, 0.3)])
    t = spanning_tree(g, MIN_UNCERTAINTY)
    assert sorted(t.tree_edges) == [0, 1]


def test_mst_tie_smallest_id():
    g = build_graph(3, [(0, 1, 0.1, 0.1), (1, 2, 0.1, 0.1), (2, 0, 0.1, 0.1)])
    assert sorted(spanning_tree(g, MIN_UNCERTAINTY).tree_edges) == [0, 1]


def test_odometric_missing():
    g = build_graph(3, [(0, 2, 0.1, 0.1), (2, 1, 0.1, 0.1)])
    with pytest.raises(OdometricPathMissing):
        spanning_tree(g, ODOMETRIC)


@given(st.integers(0, 10_000))
def test_graph_invariants(seed):
    g = random_instance(seed).graph
    _, red = incidence_matrices(g)
    assert np.linalg.matrix_rank(red) == g.n
    assert g.cyclomatic == g.m - g.n
    odo = spanning_tree(g, ODOMETRIC)
    mst = spanning_tree(g, MIN_UNCERTAINTY)
    assert len(mst.tree_edges) == g.n and len(odo.tree_edges) == g.n
    assert tree_weight(g, mst) <= tree_weight(g, odo) + 1e-12
    assert np.all(np.abs(g.measurements) <= np.pi)


def test_relative_rotations(fig1):
    theta = np.arange(1, 8) * 0.1
    rel = relative_rotations(fig1, theta)
    full = np.concatenate([[0.0], theta])
    assert np.allclose(rel, full[fig1.heads] - full[fig1.tails])
