from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import brute_game, formulas, graphs, naive_bisim_relation
from gtlogic.bisim import (
    BudgetExceeded,
    GameConfig,
    bounded_equivalent,
    check_global,
    check_graded_bisim,
    check_ratio,
    graded_partition,
    label_ratio,
    play_game,
)
from gtlogic.graphs import LabeledGraph, disjoint_copies, enumerate_graphs, word_graph
from gtlogic.logic import eval_formula, within

UNLAB = ()


def cycle(n, labels=UNLAB):
    return LabeledGraph(n, tuple((i, (i + 1) % n) for i in range(n)), labels)


def isolated(n, p_count):
    return LabeledGraph(n, (), (frozenset(range(p_count)),))


def test_cycles_share_one_class():
    p = graded_partition(cycle(2), cycle(3))
    assert p.n_classes == 1
    assert p.counts == ((2, 3),)


def test_isolated_multiplicities():
    p = graded_partition(isolated(1, 1), isolated(2, 2))
    assert p.n_classes == 1 and p.counts == ((1, 2),)


def test_isomorphic_graphs_pair_up():
    g = LabeledGraph(3, ((0, 1), (1, 2)), (frozenset({0}),))
    h = LabeledGraph(3, ((2, 1), (1, 0)), (frozenset({2}),))
    p = graded_partition(g, h)
    for v, w in ((0, 2), (1, 1), (2, 0)):
        assert p.cls(1, v) == p.cls(2, w)


@settings(max_examples=500, deadline=None)
@given(graphs(n_max=6), graphs(n_max=6))
def test_refinement_matches_naive_fixed_point(g1, g2):
    p = graded_partition(g1, g2)
    Z = naive_bisim_relation(g1, g2)
    for a in range(g1.n):
        for b in range(g2.n):
            assert (p.cls(1, a) == p.cls(2, b)) == ((a, b) in Z)


@settings(deadline=None)
@given(graphs(n_max=5), formulas(glob=False))
def test_gml_invariance(g, f):
    p = graded_partition(g, g)
    val = eval_formula(g, f)
    for a in range(g.n):
        for b in range(g.n):
            if p.cls(1, a) == p.cls(1, b):
                assert val[a] == val[b]


@settings(deadline=None)
@given(graphs(n_max=4), graphs(n_max=4), formulas())
def test_gml_g_invariance_under_global(g1, g2, f):
    if not within(f, "GML+G"):
        return
    a, b = eval_formula(g1, f), eval_formula(g2, f)
    for v1 in range(g1.n):
        for v2 in range(g2.n):
            if check_global(g1, v1, g2, v2):
                assert a[v1] == b[v2]


@settings(deadline=None)
@given(graphs(n_max=4), formulas(dia=False))
def test_pl_g_invariance_under_label_ratio(g, f):
    h = disjoint_copies(g, 2)
    a, b = eval_formula(g, f), eval_formula(h, f)
    assert label_ratio(g, 0, h, 0) is not None
    if within(f, "PL+G"):
        assert a[0] == b[0]


@pytest.mark.parametrize("q", [1, 2, 3])
def test_disjoint_copies_ratio(q):
    g = LabeledGraph(4, ((0, 1), (1, 2), (2, 0), (3, 3)), (frozenset({0, 3}), frozenset({1})))
    h = disjoint_copies(g, q)
    for v in range(g.n):
        w = check_ratio(g, v, h, v + (q - 1) * g.n)
        assert w is not None and w.q == Fraction(1, q)
    p1, pq = graded_partition(g, g), graded_partition(h, h)
    assert sorted(c[0] * q for c in p1.counts) == sorted(c[0] for c in pq.counts)


def test_ratio_definition_examples():
    # two classes (p-vertices and unlabeled vertices)
    def mk(p, other):
        return LabeledGraph(p + other, (), (frozenset(range(p)),))

    assert check_ratio(mk(2, 3), 0, mk(4, 6), 0).q == Fraction(1, 2)
    assert check_ratio(mk(1, 2), 0, mk(2, 3), 0) is None
    assert check_ratio(mk(1, 2), 0, mk(1, 0), 0) is None


def test_global_needs_class_realized_both_ways():
    g = LabeledGraph(2, (), (frozenset({0}),))
    h = LabeledGraph(1, (), (frozenset({0}),))
    assert check_graded_bisim(g, 0, h, 0)
    assert not check_global(g, 0, h, 0)


def test_label_ratio():
    g = word_graph([0, 1])
    h = word_graph([0, 1, 1, 0])
    assert label_ratio(g, 0, h, 3).q == Fraction(1, 2)
    assert label_ratio(g, 0, h, 1) is None
    assert label_ratio(g, 0, word_graph([0, 1, 1]), 0) is None


def test_game_zero_rounds_is_label_check():
    g = word_graph([0, 1])
    for v in range(2):
        for w in range(2):
            assert play_game(g, v, g, w, GameConfig(3, 0)) == (v == w)


def test_paths_distinguished_at_two_rounds():
    one, two = LabeledGraph(2, ((0, 1),), ()), LabeledGraph(3, ((0, 1), (1, 2)), ())
    assert play_game(one, 0, two, 0, GameConfig(1, 1))
    assert not play_game(one, 0, two, 0, GameConfig(1, 2))
    assert brute_game(one, 0, two, 0, 1, 1)
    assert not brute_game(one, 0, two, 0, 1, 2)


def test_grades_matter():
    star1 = LabeledGraph(2, ((0, 1),), ())
    star2 = LabeledGraph(3, ((0, 1), (0, 2)), ())
    assert play_game(star1, 0, star2, 0, GameConfig(1, 3))
    assert not play_game(star1, 0, star2, 0, GameConfig(2, 1))


def test_up_moves():
    # same down behaviour, the second target has two predecessors
    g = LabeledGraph(2, ((0, 1),), ())
    h = LabeledGraph(3, ((0, 2), (1, 2)), ())
    assert play_game(g, 1, h, 2, GameConfig(2, 2, "down-only"))
    assert play_game(g, 1, h, 2, GameConfig(2, 2, "up-ungraded-down-graded"))
    assert not play_game(g, 1, h, 2, GameConfig(2, 1, "up-down"))
    assert not play_game(g, 0, h, 2, GameConfig(1, 1, "up-ungraded-down-graded"))


@settings(max_examples=150, deadline=None)
@given(graphs(n_max=3, labels=1), graphs(n_max=3, labels=1), st.integers(0, 2), st.integers(0, 2),
       st.sampled_from(["down-only", "up-down", "up-ungraded-down-graded"]))
def test_game_matches_brute_force(g1, g2, c, rounds, variant):
    for v1 in range(g1.n):
        for v2 in range(g2.n):
            want = brute_game(g1, v1, g2, v2, c, rounds, variant)
            assert play_game(g1, v1, g2, v2, GameConfig(c, rounds, variant)) == want


@settings(max_examples=200, deadline=None)
@given(graphs(n_max=5), graphs(n_max=5), st.integers(1, 3), st.integers(0, 3))
def test_down_game_matches_capped_refinement(g1, g2, c, rounds):
    for v1 in range(g1.n):
        for v2 in range(g2.n):
            assert play_game(g1, v1, g2, v2, GameConfig(c, rounds)) == bounded_equivalent(
                g1, v1, g2, v2, c, rounds)


@settings(max_examples=100, deadline=None)
@given(graphs(n_max=4), graphs(n_max=4), st.integers(0, 3), st.integers(0, 3))
def test_bisimilar_implies_duplicator_wins(g1, g2, c, rounds):
    for v1 in range(g1.n):
        for v2 in range(g2.n):
            if check_graded_bisim(g1, v1, g2, v2):
                assert play_game(g1, v1, g2, v2, GameConfig(c, rounds))


def test_budget_guard():
    g = LabeledGraph(12, tuple((i, j) for i in range(12) for j in range(12)), ())
    with pytest.raises(BudgetExceeded):
        play_game(g, 0, g, 0, GameConfig(6, 6), budget=10_000)


def test_exhaustive_small_refinement_is_stable():
    # stability: same class implies same label row and same successor class counts
    for g in enumerate_graphs(2, 1):
        p = graded_partition(g, g)
        adj, lab = g.adjacency(), g.label_matrix()
        for a in range(g.n):
            for b in range(g.n):
                if p.cls(1, a) != p.cls(1, b):
                    continue
                assert np.array_equal(lab[a], lab[b])
                ca = sorted(p.cls(1, x) for x in np.flatnonzero(adj[a]))
                cb = sorted(p.cls(1, x) for x in np.flatnonzero(adj[b]))
                assert ca == cb
