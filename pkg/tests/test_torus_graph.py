import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torusdimer.torus_graph import (Edge, GraphError, HomologyClass,
                                    TorusGraph, build_square_torus, dual_graph,
                                    embedded_isomorphic, load_graph,
                                    reverse_graph, save_graph,
                                    segment_crossings, temperleyan)


def test_square_torus_counts(square2):
    assert square2.n_vertices == 4
    assert len(square2.edges) == 16
    assert square2.n_faces == 4
    assert square2.tau == 1j


def test_square_torus_shear_modulus():
    g = build_square_torus(4, (1, 4))
    assert g.tau == (1 + 4j) / 4
    assert g.n_vertices == 16
    assert g.n_faces == 16


def test_twin_involution(square2):
    for k in range(len(square2.edges)):
        t = square2.twin[k]
        assert t != k and square2.twin[t] == k
        e, te = square2.edges[k], square2.edges[t]
        assert (e.tail, e.head) == (te.head, te.tail)
        assert e.crossing == (-te.crossing[0], -te.crossing[1])


def test_face_boundaries_contractible(square2):
    for orbit in square2.faces:
        a, b = square2.walk_crossing_sum(orbit)
        assert (a, b) == (0, 0)


def test_homology_class_algebra():
    c = HomologyClass.from_crossing(3, -2)
    assert (c.r, c.s) == (-2, 3)
    assert c.crossing() == (3, -2)
    assert (-c).crossing() == (-3, 2)
    assert (c + c).crossing() == (6, -4)
    # the two basis classes intersect once, positively
    a = HomologyClass.from_crossing(1, 0)
    b = HomologyClass.from_crossing(0, 1)
    assert a.intersection(b) == 1
    assert b.intersection(a) == -1
    assert a.intersection(a) == 0


@given(st.integers(-20, 20), st.integers(-20, 20))
def test_from_crossing_round_trip(a, b):
    c = HomologyClass.from_crossing(a, b)
    assert c.crossing() == (a, b)
    assert c.is_zero() == (a == 0 and b == 0)


def test_horizontal_walk_class():
    g = build_square_torus(4, (1, 4))
    # one full row of eastward steps winds horizontally once
    walk = []
    v = 0
    for _ in range(4):
        eid = next(k for k in g.positive_out[v]
                   if g.edges[k].crossing[1] == 0 and
                   g.edges[k].head != v)
        nxt = g.edges[eid].head
        walk.append(eid)
        v = nxt
    cls = g.walk_class(walk)
    assert (cls.r, cls.s) == (0, 1)


def test_segment_crossing_additivity():
    # splitting a segment at any point preserves the crossing count
    rng = np.random.default_rng(1)
    for _ in range(200):
        x, y = rng.uniform(size=2)
        dx, dy = rng.uniform(-2, 2, size=2)
        t = rng.uniform()
        whole = segment_crossings(x, y, dx, dy)
        first = segment_crossings(x, y, t * dx, t * dy)
        second = segment_crossings(x + t * dx, y + t * dy,
                                   (1 - t) * dx, (1 - t) * dy)
        assert whole == (first[0] + second[0], first[1] + second[1])


def test_rejects_degenerate_parameters():
    with pytest.raises(GraphError):
        build_square_torus(1, (0, 1))
    with pytest.raises(GraphError):
        build_square_torus(4, (0, 0))
    with pytest.raises(GraphError):
        build_square_torus(4, (0, -2))


def test_rejects_negative_conductance():
    with pytest.raises(GraphError):
        build_square_torus(2, (0, 2), conductance=lambda p, q, t: -1.0)


def test_rejects_contractible_self_loop():
    with pytest.raises(GraphError):
        TorusGraph(1j, [(0.5, 0.5)],
                   [Edge(0, 0, 1.0, (0, 0)), Edge(0, 0, 1.0, (0, 0))])


def rose_graph(c_b=1.0):
    """One vertex, two non-contractible loops (horizontal and vertical)."""
    return TorusGraph(1j, [(0.1, 0.1)],
                      [Edge(0, 0, 1.0, (1, 0)), Edge(0, 0, 1.0, (-1, 0)),
                       Edge(0, 0, c_b, (0, 1)), Edge(0, 0, c_b, (0, -1))],
                      label="rose")


def test_rose_graph_is_cellular():
    g = rose_graph()
    assert g.n_vertices == 1 and g.n_faces == 1


def test_rejects_unpaired_edges():
    with pytest.raises(GraphError):
        TorusGraph(1j, [(0.1, 0.1)],
                   [Edge(0, 0, 1.0, (1, 0)), Edge(0, 0, 1.0, (0, -1))])


def test_save_load_round_trip(tmp_path, square2_random):
    path = tmp_path / "g.tg"
    save_graph(square2_random, path)
    g2 = load_graph(path)
    assert g2.tau == square2_random.tau
    assert g2.positions == square2_random.positions
    assert all(e1 == e2 for e1, e2 in zip(g2.edges, square2_random.edges))
    # serialization is repr-exact, so a second round trip is byte-identical
    path2 = tmp_path / "g2.tg"
    save_graph(g2, path2)
    assert path.read_text() == path2.read_text()


def test_load_rejects_malformed(tmp_path):
    bad = tmp_path / "bad.tg"
    bad.write_text("v 0 0.1 0.1\n")
    with pytest.raises(GraphError, match="torus header"):
        load_graph(bad)
    bad.write_text("torus 0.0 1.0\nv 0 0.1 0.1\ne 0 0 nonsense 1 0\n")
    with pytest.raises(GraphError, match="line 3"):
        load_graph(bad)
    bad.write_text("torus 0.0 1.0\nv 0 0.1 0.1\ne 0 0 -2.0 1 0\n")
    with pytest.raises(GraphError, match="negative conductance"):
        load_graph(bad)


def test_dual_graph_counts(square2):
    d = dual_graph(square2)
    assert d.n_vertices == square2.n_faces
    assert len(d.edges) == len(square2.edges)
    assert all(e.conductance == 1.0 for e in d.edges)


@pytest.mark.parametrize("n,shift", [(2, (0, 2)), (3, (2, 2)), (4, (1, 4))])
def test_dual_of_dual_isomorphic(n, shift):
    g = build_square_torus(n, shift)
    dd = dual_graph(dual_graph(g))
    assert embedded_isomorphic(g, dd)


def test_reverse_graph_moves_conductance(square2_random):
    g = square2_random
    r = reverse_graph(g)
    for k, e in enumerate(g.edges):
        assert r.edges[g.twin[k]].conductance == e.conductance
        assert r.edges[g.twin[k]].tail == e.head


def test_temperleyan_counts(tg2):
    assert tg2.n_black == tg2.n_white == 8
    # primal-side weights inherit conductances, dual side is unweighted
    for be in tg2.edges:
        if be.black < tg2.graph.n_vertices:
            assert be.weight > 0
        else:
            assert be.weight == 1.0


def test_temperleyan_rejects_degenerate_co_face():
    with pytest.raises(GraphError, match="degenerate co-face"):
        temperleyan(rose_graph())


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 5), st.integers(2, 4), st.integers(-2, 2))
def test_square_torus_invariants(n, sy, sx):
    g = build_square_torus(n, (sx, sy))
    assert g.n_vertices == n * sy
    assert g.n_faces == n * sy
    assert len(g.edges) == 4 * n * sy
    assert g.n_vertices - len(g.edges) // 2 + g.n_faces == 0
