"""Shared strategies and independent oracles for the test suite."""
import math
from fractions import Fraction
from itertools import combinations

from hypothesis import strategies as st

import gtlogic.floatfmt as ff
import gtlogic.floatfmt.core as ffcore
import gtlogic.nn as nnm

from gtlogic.graphs import LabeledGraph
from gtlogic.logic import And, Dia, Glob, Not, Prop, Top


def formulas(labels=2, max_grade=3, dia=True, glob=True, max_leaves=8):
    leaves = st.one_of(st.just(Top()), st.integers(0, labels - 1).map(Prop))

    def extend(inner):
        opts = [inner.map(Not), st.tuples(inner, inner).map(lambda t: And(*t))]
        if dia:
            opts.append(st.tuples(st.integers(1, max_grade), inner).map(lambda t: Dia(*t)))
        if glob:
            opts.append(st.tuples(st.integers(1, max_grade), inner).map(lambda t: Glob(*t)))
        return st.one_of(*opts)

    return st.recursive(leaves, extend, max_leaves=max_leaves)


@st.composite
def graphs(draw, n_min=1, n_max=5, labels=2):
    n = draw(st.integers(n_min, n_max))
    edges = draw(st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))))
    labs = tuple(frozenset(draw(st.sets(st.integers(0, n - 1)))) for _ in range(labels))
    return LabeledGraph(n, tuple(edges), labs)


def naive_holds(g, v, f):
    """Direct recursive reading of the semantics, no memoization."""
    if isinstance(f, Top):
        return True
    if isinstance(f, Prop):
        return v in g.labels[f.index]
    if isinstance(f, Not):
        return not naive_holds(g, v, f.child)
    if isinstance(f, And):
        return naive_holds(g, v, f.left) and naive_holds(g, v, f.right)
    if isinstance(f, Dia):
        return sum(1 for a, b in g.edges if a == v and naive_holds(g, b, f.child)) >= f.grade
    if isinstance(f, Glob):
        return sum(1 for u in range(g.n) if naive_holds(g, u, f.child)) >= f.grade
    raise TypeError(f)


def _perfect_matching(left, right, ok):
    """Bipartite perfect matching by augmenting paths."""
    if len(left) != len(right):
        return False
    match = {}

    def augment(x, seen):
        for j, y in enumerate(right):
            if j in seen or not ok(x, y):
                continue
            seen.add(j)
            if j not in match or augment(match[j], seen):
                match[j] = x
                return True
        return False

    return all(augment(x, set()) for x in left)


def naive_bisim_relation(g1, g2):
    """Greatest graded bisimulation between g1 and g2 as a set of pairs.

    Starts from all label-equal pairs and deletes pairs whose successor lists
    admit no bijection inside the relation (graded forth and back).
    """
    ell = max(g1.label_count, g2.label_count)
    h1, h2 = g1.with_label_count(ell), g2.with_label_count(ell)
    lab = lambda g, v: tuple(v in s for s in g.labels)  # noqa: E731
    Z = {(a, b) for a in range(g1.n) for b in range(g2.n) if lab(h1, a) == lab(h2, b)}
    changed = True
    while changed:
        changed = False
        for a, b in sorted(Z):
            if not _perfect_matching(g1.successors(a), g2.successors(b), lambda x, y: (x, y) in Z):
                Z.discard((a, b))
                changed = True
    return Z


def brute_game(g1, v1, g2, v2, c, rounds, variant="down-only"):
    """Explicit game tree: spoiler set, duplicator set, spoiler pick, duplicator pick."""
    ell = max(g1.label_count, g2.label_count)
    m1 = g1.with_label_count(ell).label_matrix()
    m2 = g2.with_label_count(ell).label_matrix()
    if (m1[v1] != m2[v2]).any():
        return False
    if rounds == 0:
        return True
    moves = [(g1.successors(v1), g2.successors(v2))]
    if variant == "up-down":
        moves.append((g1.predecessors(v1), g2.predecessors(v2)))
    for n1, n2 in moves:
        for side in (1, 2):
            mine, other = (n1, n2) if side == 1 else (n2, n1)
            for k in range(1, c + 1):
                for S in combinations(mine, k):
                    answered = False
                    for T in combinations(other, k):
                        if all(any(_brute_pos(g1, g2, side, x, y, c, rounds - 1, variant)
                                   for x in S) for y in T):
                            answered = True
                            break
                    if not answered:
                        return False
    if variant == "up-ungraded-down-graded":
        P1, P2 = g1.predecessors(v1), g2.predecessors(v2)
        for x in P1:
            if not any(brute_game(g1, x, g2, y, c, rounds - 1, variant) for y in P2):
                return False
        for y in P2:
            if not any(brute_game(g1, x, g2, y, c, rounds - 1, variant) for x in P1):
                return False
    return True


def _brute_pos(g1, g2, side, x, y, c, rounds, variant):
    # x is on the spoiler's side, y on the other one
    if side == 1:
        return brute_game(g1, x, g2, y, c, rounds, variant)
    return brute_game(g1, y, g2, x, c, rounds, variant)


# -- scalar reference forward pass -------------------------------------------------

class ExactScalar:
    """Plain Fraction arithmetic; exp only where it is rational."""

    def c(self, x):
        return Fraction(x)

    def add(self, a, b):
        return a + b

    def mul(self, a, b):
        return a * b

    def div(self, a, b):
        return a / b

    def total(self, xs):
        return sum(xs, Fraction(0))

    def act(self, name, z):
        if name == "identity":
            return z
        if name == "relu":
            return max(z, Fraction(0))
        if name == "heaviside":
            return Fraction(1) if z > 0 else Fraction(0)
        return min(max(z, Fraction(0)), Fraction(1))

    def sqrt(self, k):
        r = math.isqrt(k)
        assert r * r == k
        return Fraction(r)

    def attention(self, kind, row):
        if kind == "unique-hard":
            best = max(row)
            i = row.index(best)
            return [Fraction(int(j == i)) for j in range(len(row))]
        if kind == "softmax":
            assert len(set(row)) == 1
        best = max(row)
        k = sum(1 for v in row if v == best)
        return [Fraction(1, k) if v == best else Fraction(0) for v in row]

    def eq(self, a, b):
        return a == b

    def maximum(self, xs):
        return max(xs)

    def positive(self, y):
        return y > 0


class FloatScalar:
    """Scalar float-format arithmetic from the floatfmt reference functions."""

    def __init__(self, fmt):
        self.fmt = fmt

    def c(self, x):
        return ff.round_real(self.fmt, Fraction(x))

    def add(self, a, b):
        return ff.add(self.fmt, a, b)

    def mul(self, a, b):
        return ff.mul(self.fmt, a, b)

    def div(self, a, b):
        return ff.div(self.fmt, a, b)

    def total(self, xs):
        return ff.sum_increasing(self.fmt, list(xs)) if xs else self.fmt.zero

    def act(self, name, z):
        fmt = self.fmt
        if name == "identity" or z.is_nan:
            return z
        pos = not z.is_zero and z.sign == 0
        if name == "relu":
            return z if pos else fmt.zero
        if name == "heaviside":
            return fmt.one if pos else fmt.zero
        if not pos:
            return fmt.zero
        return fmt.one if ff.decode(fmt, z) >= 1 else z

    def sqrt(self, k):
        return ff.sqrt(self.fmt, self.c(k))

    def attention(self, kind, row):
        if kind == "softmax":
            return ff.softmax_row(self.fmt, row)
        if kind == "average-hard":
            return ff.ah_row(self.fmt, row)
        if kind == "average-hard-direct":
            return ff.ah_row(self.fmt, row, mode="direct-round")
        return ff.uh_row_float(self.fmt, row)

    def eq(self, a, b):
        if a.is_nan or b.is_nan:
            return a.is_nan and b.is_nan
        return ff.decode(self.fmt, a) == ff.decode(self.fmt, b)

    def maximum(self, xs):
        if any(v.is_nan for v in xs):
            return ff.NAN
        return ffcore.max_value(self.fmt, xs)

    def positive(self, y):
        return not y.is_nan and not y.is_zero and y.sign == 0


def _ref_linear(A, x, W, b=None):
    din, dout = W.shape
    out = []
    for j in range(dout):
        s = A.total([A.mul(x[i], A.c(W[i, j])) for i in range(din)])
        out.append(s if b is None else A.add(s, A.c(b[j])))
    return out


def ref_mlp(A, m, x):
    for p in m.layers:
        z = _ref_linear(A, x, p.W, p.b)
        acts = [p.act] * len(z) if isinstance(p.act, str) else list(p.act)
        x = [A.act(a, v) for a, v in zip(acts, z)]
    return x


def ref_head(A, h, kind, X):
    n = len(X)
    Q = [_ref_linear(A, x, h.W_Q) for x in X]
    K = [_ref_linear(A, x, h.W_K) for x in X]
    V = [_ref_linear(A, x, h.W_V) for x in X]
    s = A.sqrt(h.d_h)
    out = []
    for u in range(n):
        row = [A.div(A.total([A.mul(Q[u][k], K[v][k]) for k in range(h.d_h)]), s) for v in range(n)]
        att = A.attention(kind, row)
        out.append([A.total([A.mul(att[v], V[v][j]) for v in range(n)]) for j in range(h.d_h)])
    return out


def ref_attention(A, sa, X):
    heads = [ref_head(A, h, sa.kind, X) for h in sa.heads]
    cat = [sum((hd[u] for hd in heads), []) for u in range(len(X))]
    return [_ref_linear(A, row, sa.W_O) for row in cat]


def _ref_agg(A, agg, rows, d):
    if agg == "const-zero" or not rows:
        return [A.c(0)] * d
    if agg.startswith("set-"):
        kept = []
        for r in rows:
            if not any(all(A.eq(a, b) for a, b in zip(r, k)) for k in kept):
                kept.append(r)
        rows, agg = kept, agg[4:]
    if agg == "sum":
        return [A.total([r[j] for r in rows]) for j in range(d)]
    return [A.maximum([r[j] for r in rows]) for j in range(d)]


def ref_layer(A, layer, g, X):
    d = len(X[0])
    vadd = lambda a, b: [A.add(x, y) for x, y in zip(a, b)]  # noqa: E731

    def mp(m):
        return [ref_mlp(A, m.com, X[v] + _ref_agg(A, m.agg, [X[u] for u in g.successors(v)], d))
                for v in range(g.n)]

    if isinstance(layer, nnm.TransformerLayer):
        S = ref_attention(A, layer.sa, X)
        X1 = [vadd(x, s) for x, s in zip(X, S)]
        return [vadd(x, ref_mlp(A, layer.ff, x)) for x in X1]
    if isinstance(layer, nnm.GPSLayer):
        S = ref_attention(A, layer.sa, X)
        M = mp(layer.mp)
        T = [vadd(vadd(x, s), vadd(x, m)) for x, s, m in zip(X, S, M)]
        return [vadd(t, ref_mlp(A, layer.ff, t)) for t in T]
    if isinstance(layer, nnm.MPLayer):
        return [vadd(x, m) for x, m in zip(X, mp(layer.mp))]
    if isinstance(layer, nnm.MPReadoutLayer):
        H = [vadd(x, m) for x, m in zip(X, mp(layer.mp))]
        r = ref_mlp(A, layer.readout.mlp, _ref_agg(A, layer.readout.agg, H, d))
        return [vadd(h, r) for h in H]
    if isinstance(layer, nnm.BasicGPSLayer):
        Hd = ref_head(A, layer.head, layer.kind, X)
        out = []
        for v in range(g.n):
            nb = _ref_agg(A, "sum", [X[u] for u in g.successors(v)], d)
            z = vadd(_ref_linear(A, X[v], layer.C), _ref_linear(A, nb, layer.A))
            z = vadd(z, Hd[v])
            z = [A.add(a, A.c(b)) for a, b in zip(z, layer.b)]
            out.append([A.act(layer.act, v_) for v_ in z])
        return out
    raise TypeError(layer)


def ref_network(A, net, g):
    """Classifier outputs per vertex, scalar route."""
    g = g.with_label_count(net.ell)
    lab = g.label_matrix()
    X = [ref_mlp(A, net.initial, [A.c(int(b)) for b in lab[v]]) for v in range(g.n)]
    for layer in net.layers:
        X = ref_layer(A, layer, g, X)
    return [ref_mlp(A, net.classifier, x)[0] for x in X]
