import numpy as np
import pytest
from hypothesis import given

from helpers import graphs
from gtlogic.graphs import (
    LabeledGraph,
    disjoint_copies,
    disjoint_union,
    enumerate_graphs,
    exhaustive_arrays,
    load_graph,
    save_graph,
    word_graph,
)


def test_word_graph():
    g = word_graph("p0")
    assert g.n == 1 and g.edges == ()
    g = word_graph("p0 p1")
    assert g.edges == ((0, 1),)
    assert g.labels == (frozenset({0}), frozenset({1}))
    g = word_graph([1, 0, 1, 1, 0])
    assert len(g.edges) == 4
    with pytest.raises(ValueError):
        word_graph([])


def test_invariants_enforced():
    with pytest.raises(ValueError):
        LabeledGraph(0, (), ())
    with pytest.raises(ValueError):
        LabeledGraph(2, ((0, 2),), ())
    with pytest.raises(ValueError):
        LabeledGraph(2, (), (frozenset({5}),))


def test_disjoint_copies_counts():
    g = LabeledGraph(3, ((0, 1), (1, 2), (2, 2)), (frozenset({0, 2}),))
    assert disjoint_copies(g, 1) == g
    h = disjoint_copies(g, 3)
    assert h.n == 9 and len(h.edges) == 9
    assert h.labels[0] == frozenset({0, 2, 3, 5, 6, 8})
    for u, v in h.edges:
        assert u // 3 == v // 3


def test_disjoint_union():
    g = disjoint_union(word_graph("p0 p1"), LabeledGraph(1, ((0, 0),), ()))
    assert g.n == 3 and g.edges == ((0, 1), (2, 2))
    assert g.labels == (frozenset({0}), frozenset({1}))


@pytest.mark.parametrize("n,labels,count", [(1, 1, 4), (2, 1, 64), (2, 2, 256), (3, 2, 1 << 15)])
def test_exhaustive_counts(n, labels, count):
    A, L = exhaustive_arrays(n, labels)
    assert len(A) == count
    keys = {(a.tobytes(), l.tobytes()) for a, l in zip(A, L)}
    assert len(keys) == count


def test_enumerate_stream():
    gs = list(enumerate_graphs(1, 1))
    assert len(gs) == 4
    assert len(set(gs)) == 4
    assert len(list(enumerate_graphs(2, 1, n_min=2))) == 64


def test_exhaustive_guard():
    with pytest.raises(ValueError):
        next(enumerate_graphs(4, 1))
    with pytest.raises(ValueError):
        next(enumerate_graphs(2, 3))


def test_random_replays():
    a = list(enumerate_graphs(5, 2, mode="random", seed=7, count=100))
    b = list(enumerate_graphs(5, 2, mode="random", seed=7, count=100))
    assert a == b
    c = list(enumerate_graphs(5, 2, mode="random", seed=8, count=100))
    assert a != c


@given(graphs())
def test_json_round_trip(g):
    assert LabeledGraph.from_json(g.to_json()) == g


def test_file_round_trip(tmp_path):
    g = word_graph("p1 p0 p1")
    save_graph(g, tmp_path / "g.json")
    assert load_graph(tmp_path / "g.json") == g


@given(graphs())
def test_arrays_round_trip(g):
    assert LabeledGraph.from_arrays(g.adjacency(), g.label_matrix()) == g
    assert np.array_equal(g.adjacency().sum(), len(g.edges))
