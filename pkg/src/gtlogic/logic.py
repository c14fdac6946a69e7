"""Formulas of graded modal logic with (counting) global modality.

Node kinds are Top, Prop, Not, And, Dia (local, grade k >= 1) and Glob
(global, grade k >= 1).  Disjunction, implication and the <k / =k grades are
parser sugar.  Propositions are named p0, p1, ... and column i of a label
matrix holds p_i.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

GRADE_LIMIT = 64


@dataclass(frozen=True)
class Top:
    pass


@dataclass(frozen=True)
class Prop:
    index: int


@dataclass(frozen=True)
class Not:
    child: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Dia:
    grade: int
    child: "Formula"


@dataclass(frozen=True)
class Glob:
    grade: int
    child: "Formula"


Formula = Union[Top, Prop, Not, And, Dia, Glob]


def children(f):
    if isinstance(f, (Top, Prop)):
        return ()
    if isinstance(f, And):
        return (f.left, f.right)
    return (f.child,)


def subformulas(f) -> list:
    """Post-order, duplicates removed: children always precede parents."""
    out, seen = [], set()

    def walk(g):
        if g in seen:
            return
        for c in children(g):
            walk(c)
        seen.add(g)
        out.append(g)

    walk(f)
    return out


def depth(f) -> int:
    cs = children(f)
    return 0 if not cs else 1 + max(depth(c) for c in cs)


def modal_depth(f) -> int:
    cs = children(f)
    inner = max((modal_depth(c) for c in cs), default=0)
    return inner + (1 if isinstance(f, (Dia, Glob)) else 0)


def max_prop(f) -> int:
    return max((g.index for g in subformulas(f) if isinstance(g, Prop)), default=-1)


def grades(f, kind) -> list:
    return [g.grade for g in subformulas(f) if isinstance(g, kind)]


def max_grade(f) -> int:
    return max(grades(f, Dia) + grades(f, Glob), default=1)


# -- sugar --------------------------------------------------------------------

def Or(a, b):
    return Not(And(Not(a), Not(b)))


def Implies(a, b):
    return Not(And(a, Not(b)))


def Iff(a, b):
    return And(Implies(a, b), Implies(b, a))


def at_least(kind, k, f):
    return Top() if k == 0 else kind(k, f)


def less_than(kind, k, f):
    return Not(at_least(kind, k, f))


def exactly(kind, k, f):
    upper = Not(kind(k + 1, f))
    return upper if k == 0 else And(kind(k, f), upper)


# -- parser -------------------------------------------------------------------

class ParseError(ValueError):
    def __init__(self, msg, pos):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


_TOKEN = re.compile(r"\s*(?:(top)\b|p(\d+)\b|(dia|glob)(?:(>=|<|=)(\d+))?\b|(<->|->|[!&|()]))")


def _tokens(text):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected input {text[pos:pos + 8]!r}", pos)
        start = m.start() + (len(m.group(0)) - len(m.group(0).lstrip()))
        if m.group(1):
            out.append(("top", None, start))
        elif m.group(2) is not None:
            out.append(("prop", int(m.group(2)), start))
        elif m.group(3):
            op = m.group(4) or ">="
            k = int(m.group(5)) if m.group(5) is not None else 1
            out.append((m.group(3), (op, k), start))
        else:
            out.append((m.group(6), None, start))
        pos = m.end()
    out.append(("end", None, len(text)))
    return out


class _Parser:
    def __init__(self, text):
        self.toks = _tokens(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None):
        tok = self.toks[self.i]
        if kind and tok[0] != kind:
            raise ParseError(f"expected {kind!r}, got {tok[0]!r}", tok[2])
        self.i += 1
        return tok

    def formula(self):
        kind, val, pos = self.peek()
        if kind == "top":
            self.take()
            return Top()
        if kind == "prop":
            self.take()
            return Prop(val)
        if kind == "!":
            self.take()
            return Not(self.formula())
        if kind in ("dia", "glob"):
            self.take()
            op, k = val
            if k > GRADE_LIMIT:
                raise ParseError(f"grade {k} exceeds limit {GRADE_LIMIT}", pos)
            node = Dia if kind == "dia" else Glob
            child = self.formula()
            if op == ">=":
                return at_least(node, k, child)
            if op == "<":
                return less_than(node, k, child)
            return exactly(node, k, child)
        if kind == "(":
            self.take()
            left = self.formula()
            op = self.peek()[0]
            if op == ")":
                self.take()
                return left
            if op not in ("&", "|", "->", "<->"):
                raise ParseError(f"expected a binary connective, got {op!r}", self.peek()[2])
            self.take()
            right = self.formula()
            self.take(")")
            if op == "&":
                return And(left, right)
            if op == "|":
                return Or(left, right)
            if op == "<->":
                return Iff(left, right)
            return Implies(left, right)
        raise ParseError(f"unexpected token {kind!r}", pos)


def parse(text: str):
    p = _Parser(text)
    f = p.formula()
    if p.peek()[0] != "end":
        raise ParseError("trailing input", p.peek()[2])
    return f


def to_text(f) -> str:
    if isinstance(f, Top):
        return "top"
    if isinstance(f, Prop):
        return f"p{f.index}"
    if isinstance(f, Not):
        return "!" + to_text(f.child)
    if isinstance(f, And):
        return f"({to_text(f.left)} & {to_text(f.right)})"
    name = "dia" if isinstance(f, Dia) else "glob"
    op = "" if f.grade == 1 else f">={f.grade}"
    return f"{name}{op} {to_text(f.child)}"


# -- fragments ----------------------------------------------------------------

FRAGMENTS = ("PL", "PL+G", "PL+GC", "ML", "ML+G", "ML+GC", "GML", "GML+G", "GML+GC")


def fragment_of(f) -> str:
    dias = grades(f, Dia)
    globs = grades(f, Glob)
    local = "PL" if not dias else ("ML" if max(dias) == 1 else "GML")
    glob = "" if not globs else ("+G" if max(globs) == 1 else "+GC")
    return local + glob


def within(f, fragment: str) -> bool:
    """Is f in the given fragment (lattice order, not just the minimal tag)?"""
    tag = fragment_of(f)
    lrank = {"PL": 0, "ML": 1, "GML": 2}
    grank = {"": 0, "+G": 1, "+GC": 2}

    def split(t):
        for suffix in ("+GC", "+G"):
            if t.endswith(suffix):
                return t[: -len(suffix)], suffix
        return t, ""

    l1, g1 = split(tag)
    l2, g2 = split(fragment)
    return lrank[l1] <= lrank[l2] and grank[g1] <= grank[g2]


# -- model checking -----------------------------------------------------------

def eval_batch(adj: np.ndarray, labels: np.ndarray, f) -> np.ndarray:
    """Truth values over a batch: adj (B,n,n) 0/1, labels (B,n,L) 0/1 -> (B,n)."""
    adj = np.asarray(adj, dtype=np.int64)
    labels = np.asarray(labels)
    B, n = labels.shape[0], labels.shape[1]
    need = max_prop(f)
    if need >= labels.shape[2]:
        raise ValueError(f"unknown proposition p{need}")
    val = {}
    for g in subformulas(f):
        if isinstance(g, Top):
            v = np.ones((B, n), dtype=bool)
        elif isinstance(g, Prop):
            v = labels[:, :, g.index].astype(bool)
        elif isinstance(g, Not):
            v = ~val[g.child]
        elif isinstance(g, And):
            v = val[g.left] & val[g.right]
        elif isinstance(g, Dia):
            cnt = np.einsum("buv,bv->bu", adj, val[g.child].astype(np.int64))
            v = cnt >= g.grade
        else:
            cnt = val[g.child].sum(axis=1, keepdims=True)
            v = np.broadcast_to(cnt >= g.grade, (B, n)).copy()
        val[g] = v
    return val[f].astype(np.uint8)


def eval_formula(g, f) -> np.ndarray:
    """Truth value of f at every vertex of a LabeledGraph."""
    return eval_batch(g.adjacency()[None], g.label_matrix()[None], f)[0]


eval = eval_formula  # noqa: A001  the operation's public name
