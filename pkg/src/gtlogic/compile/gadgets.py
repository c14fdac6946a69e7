"""Small relu gadgets: propositional MLPs, float threshold tests, MLP splitting.

Column programs are lists of affine maps over a fixed column layout; every
relu layer is written with an explicit ``keep`` set so unrelated columns
pass through unchanged (all compiled values are nonnegative).
"""
from __future__ import annotations

from fractions import Fraction

from .. import floatfmt as ff
from ..logic import And, Not, Prop, Top, depth, fragment_of, subformulas
from ..nn.model import MLP, Perceptron, identity, zeros


class CompileError(ValueError):
    pass


class Affine:
    """x -> x W + b on d_in -> d_out columns, built entry by entry."""

    def __init__(self, d_in, d_out=None):
        d_out = d_in if d_out is None else d_out
        self.W = zeros(d_in, d_out)
        self.b = zeros(d_out)

    @property
    def d_in(self):
        return self.W.shape[0]

    @property
    def d_out(self):
        return self.W.shape[1]

    def keep(self, cols):
        for c in cols:
            self.W[c, c] = Fraction(1)
        return self

    def add(self, src, dst, w=1):
        self.W[src, dst] += Fraction(w)
        return self

    def bias(self, dst, v):
        self.b[dst] += Fraction(v)
        return self

    def perceptron(self, act="relu") -> Perceptron:
        return Perceptron(self.W.copy(), self.b.copy(), act)


def identity_layer(d) -> Perceptron:
    return Perceptron(identity(d), zeros(d), "identity")


def check_representable(fmt, weights):
    for w in weights:
        if ff.decode(fmt, ff.round_real(fmt, Fraction(w))) != Fraction(w):
            raise CompileError(f"weight {w} is not representable in {fmt}")


# -- propositional logic ------------------------------------------------------------

def compile_pl_to_mlp(f, backend="exact", ell=None) -> MLP:
    """Relu MLP computing the truth value of a PL formula from the label bits.

    Columns are the subformulas in post-order.  The first layer projects the
    propositions and the constant column, each following layer evaluates one
    more level of connectives, and an identity layer reads off the root.
    Hence the MLP has depth(f) + 2 perceptrons and width len(subformulas).
    """
    if fragment_of(f) != "PL":
        raise CompileError(f"not a PL formula: fragment {fragment_of(f)}")
    subs = subformulas(f)
    col = {g: i for i, g in enumerate(subs)}
    props = [g.index for g in subs if isinstance(g, Prop)]
    ell = max(props, default=-1) + 1 if ell is None else ell
    if props and max(props) >= ell:
        raise CompileError("formula uses more propositions than the input width")
    d = len(subs)
    level = {g: depth(g) for g in subs}
    first = Affine(ell, d)
    for g in subs:
        if isinstance(g, Prop):
            first.add(g.index, col[g])
        elif isinstance(g, Top):
            first.bias(col[g], 1)
    layers = [first.perceptron("relu")]
    for lv in range(1, depth(f) + 1):
        A = Affine(d)
        A.keep(col[g] for g in subs if level[g] < lv)
        for g in subs:
            if level[g] != lv:
                continue
            _connective(A, g, col)
        layers.append(A.perceptron("relu"))
    out = Affine(d, 1).add(col[f], 0)
    layers.append(out.perceptron("identity"))
    check_backend_weights(backend, layers)
    return MLP(layers)


def _connective(A: Affine, g, col, src=0, dst=0):
    j = dst + col[g]
    if isinstance(g, Not):
        A.add(src + col[g.child], j, -1).bias(j, 1)
    elif isinstance(g, And):
        A.add(src + col[g.left], j).add(src + col[g.right], j).bias(j, -1)
    else:
        raise CompileError(f"not a connective: {type(g).__name__}")


def check_backend_weights(backend, layers):
    fmt = _format_of(backend)
    if fmt is None:
        return
    for p in layers:
        check_representable(fmt, list(p.W.flat) + list(p.b.flat))


def _format_of(backend):
    if isinstance(backend, ff.FloatFormat):
        return backend
    if isinstance(backend, dict) and "float" in backend:
        return ff.FloatFormat(int(backend["float"]["p"]), int(backend["float"]["q"]))
    return None


# -- float threshold tests --------------------------------------------------------

def amplify_factors(fmt) -> list:
    """Powers of two, each representable, whose product is 1 / f_min."""
    target = 1 / fmt.unit
    big = Fraction(1)
    while ff.decode(fmt, ff.round_real(fmt, big * 2)) == big * 2 and big * 2 <= target:
        big *= 2
    out, rest = [], target
    while rest > 1:
        step = min(big, rest)
        out.append(step)
        rest /= step
    return out


def _halving(fmt, F, sign) -> Fraction:
    """1 if F - sign * max_finite stays finite, else 1/2 (weight and bias halved)."""
    edge = ff.round_real(fmt, F - sign * ff.decode(fmt, fmt.max_finite))
    if edge.is_finite:
        return Fraction(1)
    half = F / 2
    check_representable(fmt, [half])
    return Fraction(1, 2)


def _value(fmt, F) -> Fraction:
    if isinstance(F, ff.FloatValue):
        if not F.is_finite:
            raise CompileError("threshold must be finite")
        return ff.decode(fmt, F)
    F = Fraction(F)
    check_representable(fmt, [F])
    return F


def _test_tail(fmt, width, cols) -> list:
    """Layers turning y in {0} U [f, inf) into 1 - [y > 0] on ``cols``."""
    f = fmt.unit
    layers = []
    A = Affine(width)
    for c in cols:
        A.add(c, c, -1).bias(c, f)
    layers.append(A.perceptron("relu"))
    for k in amplify_factors(fmt):
        A = Affine(width)
        for c in cols:
            A.add(c, c, k)
        layers.append(A.perceptron("relu"))
    return layers


def threshold_ge_mlp(fmt, F, d, i) -> MLP:
    """Float relu MLP on d inputs returning 1 iff x_i >= F, else 0."""
    if not 0 <= i < d:
        raise CompileError("column out of range")
    F = _value(fmt, F)
    h = _halving(fmt, F, -1)
    first = Affine(d, 1).add(i, 0, -h).bias(0, h * F)
    layers = [first.perceptron("relu")] + _test_tail(fmt, 1, [0])
    layers.append(identity_layer(1))
    return MLP(layers)


def threshold_eq_mlp(fmt, F, d, i) -> MLP:
    """Float relu MLP on d inputs returning 1 iff x_i = F, else 0."""
    if not 0 <= i < d:
        raise CompileError("column out of range")
    F = _value(fmt, F)
    h = min(_halving(fmt, F, -1), _halving(fmt, F, 1))
    first = Affine(d, 2).add(i, 0, -h).bias(0, h * F).add(i, 1, h).bias(1, -h * F)
    layers = [first.perceptron("relu")] + _test_tail(fmt, 2, [0, 1])
    both = Affine(2, 1).add(0, 0).add(1, 0).bias(0, -1)
    layers.append(both.perceptron("relu"))
    layers.append(identity_layer(1))
    return MLP(layers)


# -- splitting ------------------------------------------------------------------------

def split_mlp(m: MLP) -> list:
    """Chain of simple MLPs whose composition agrees with m on the prefix.

    A k-layer relu MLP with input/output d and hidden widths up to d_h
    becomes k - 1 simple MLPs of input/output width max(d, d_h); inputs and
    outputs are zero-padded on the right.
    """
    k = len(m.layers)
    if k < 2:
        raise CompileError("splitting needs at least two layers")
    for p in m.layers[:-1]:
        if p.act != "relu":
            raise CompileError("splitting needs relu hidden layers")
    if m.layers[-1].act != "identity":
        raise CompileError("splitting needs an identity output layer")
    if k == 2 and m.is_simple:
        return [m]
    w = max(max(p.d_in, p.d_out) for p in m.layers)
    out = []
    for t in range(k - 1):
        first = _pad(m.layers[t], w, w)
        if t < k - 2:
            second = identity_layer(w)
        else:
            second = _pad(m.layers[-1], w, w)
        out.append(MLP([first, second]))
    return out


def _pad(p: Perceptron, d_in, d_out) -> Perceptron:
    W = zeros(d_in, d_out)
    b = zeros(d_out)
    W[: p.d_in, : p.d_out] = p.W
    b[: p.d_out] = p.b
    act = p.act
    if not isinstance(act, str):
        act = tuple(act) + ("identity",) * (d_out - p.d_out)
    return Perceptron(W, b, act)


__all__ = [
    "Affine", "CompileError", "amplify_factors", "check_representable", "compile_pl_to_mlp",
    "identity_layer", "split_mlp", "threshold_eq_mlp", "threshold_ge_mlp",
]
