import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import formulas, graphs, naive_holds
from gtlogic import logic
from gtlogic.graphs import LabeledGraph, permute
from gtlogic.logic import (
    And,
    Dia,
    Glob,
    Not,
    ParseError,
    Prop,
    Top,
    depth,
    eval_formula,
    fragment_of,
    parse,
    subformulas,
    to_text,
    within,
)

DEAD_END_FREE = "glob=0 (dia<1 top)"


def test_parse_trivial():
    assert parse("top") == Top()
    assert parse("!(p0 & p1)") == Not(And(Prop(0), Prop(1)))
    assert parse("  dia   p3 ") == Dia(1, Prop(3))
    assert parse("glob>=2 p0") == Glob(2, Prop(0))


def test_parse_dead_end_example():
    # no vertex without a successor exists: <G>_{=0} dia_{<1} top
    inner = Not(Dia(1, Top()))
    assert parse(DEAD_END_FREE) == Not(Glob(1, inner))


def test_parse_grade_zero_is_top():
    assert parse("dia>=0 p0") == Top()
    assert parse("glob>=0 (dia<1 top)") == Top()
    assert parse("dia<0 p0") == Not(Top())


def test_parse_sugar():
    a, b = Prop(0), Prop(1)
    assert parse("(p0 | p1)") == Not(And(Not(a), Not(b)))
    assert parse("(p0 -> p1)") == Not(And(a, Not(b)))
    assert parse("dia=2 p0") == And(Dia(2, a), Not(Dia(3, a)))
    assert parse("glob<3 p1") == Not(Glob(3, b))


@pytest.mark.parametrize("text,pos", [("(p0 p1)", 4), ("p0 & p1", 3), ("dia>=", 3), ("(p0 & p1", 8), ("x", 0)])
def test_parse_errors_report_position(text, pos):
    with pytest.raises(ParseError) as e:
        parse(text)
    assert e.value.pos == pos


def test_grade_limit():
    parse("dia>=64 p0")
    with pytest.raises(ParseError):
        parse("dia>=65 p0")


@given(formulas())
def test_text_round_trip(f):
    assert parse(to_text(f)) == f


def test_fragment_examples():
    assert fragment_of(parse("(p0 & !p1)")) == "PL"
    assert fragment_of(parse("glob>=3 p0")) == "PL+GC"
    assert fragment_of(parse("dia>=2 glob p0")) == "GML+G"
    assert fragment_of(parse("dia dia p0")) == "ML"
    assert fragment_of(parse(DEAD_END_FREE)) == "ML+G"
    # =1 needs grade 2 for the upper bound
    assert fragment_of(parse("dia=1 p0")) == "GML"


@given(formulas())
def test_fragment_is_minimal(f):
    tag = fragment_of(f)
    assert within(f, tag)
    assert sum(within(f, t) for t in logic.FRAGMENTS) == sum(
        1 for t in logic.FRAGMENTS if _le(tag, t)
    )


def _le(a, b):
    lr = {"PL": 0, "ML": 1, "GML": 2}
    gr = {"": 0, "+G": 1, "+GC": 2}
    sa, sb = a.split("+"), b.split("+")
    ga = "+" + sa[1] if len(sa) > 1 else ""
    gb = "+" + sb[1] if len(sb) > 1 else ""
    return lr[sa[0]] <= lr[sb[0]] and gr[ga] <= gr[gb]


@given(formulas())
def test_subformulas_children_first(f):
    order = subformulas(f)
    pos = {g: i for i, g in enumerate(order)}
    assert len(pos) == len(order)
    assert order[-1] == f
    for g in order:
        for c in logic.children(g):
            assert pos[c] < pos[g]


def test_depth():
    assert depth(Top()) == 0
    assert depth(parse("!(p0 & dia p1)")) == 3


def test_eval_examples():
    g = LabeledGraph(1, (), (frozenset({0}),))
    assert eval_formula(g, Prop(0)).tolist() == [1]
    g2 = LabeledGraph(2, (), ())
    assert eval_formula(g2, parse(DEAD_END_FREE)).tolist() == [0, 0]
    cyc = LabeledGraph(2, ((0, 1), (1, 0)), ())
    assert eval_formula(cyc, parse(DEAD_END_FREE)).tolist() == [1, 1]


def test_eval_unknown_prop():
    with pytest.raises(ValueError):
        eval_formula(LabeledGraph(1, (), (frozenset(),)), Prop(3))


@settings(max_examples=300, deadline=None)
@given(graphs(), formulas())
def test_eval_matches_naive(g, f):
    got = eval_formula(g, f).tolist()
    assert got == [int(naive_holds(g, v, f)) for v in range(g.n)]


@settings(deadline=None)
@given(graphs(), formulas(), st.integers(1, 4), st.sampled_from([Dia, Glob]))
def test_grade_monotone(g, f, k, kind):
    hi = eval_formula(g, kind(k + 1, f))
    lo = eval_formula(g, kind(k, f))
    assert np.all(hi <= lo)


@settings(deadline=None)
@given(graphs(), formulas(), st.randoms(use_true_random=False))
def test_isomorphism_invariance(g, f, rnd):
    perm = list(range(g.n))
    rnd.shuffle(perm)
    h = permute(g, perm)
    a, b = eval_formula(g, f), eval_formula(h, f)
    assert all(a[v] == b[perm[v]] for v in range(g.n))


def test_batch_matches_single():
    rng = random.Random(3)
    gs = [LabeledGraph(4, tuple((rng.randrange(4), rng.randrange(4)) for _ in range(6)),
                       (frozenset({rng.randrange(4)}), frozenset())) for _ in range(20)]
    f = parse("(dia>=2 p0 | glob=1 !p1)")
    A = np.stack([g.adjacency() for g in gs])
    L = np.stack([g.label_matrix() for g in gs])
    batch = logic.eval_batch(A, L, f)
    for g, row in zip(gs, batch):
        assert row.tolist() == eval_formula(g, f).tolist()
