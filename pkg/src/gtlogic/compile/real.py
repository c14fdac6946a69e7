"""GML+G to basic GPS networks over exact rationals, and basic to proper GPS."""
from __future__ import annotations

from fractions import Fraction

from ..logic import And, Dia, Glob, Not, Prop, Top, fragment_of, max_prop, subformulas, to_text
from ..nn.model import (
    MLP,
    Attention,
    AttentionHead,
    BasicGPSLayer,
    GPSLayer,
    MessagePassing,
    Network,
    Perceptron,
    zeros,
)
from .gadgets import Affine, CompileError
from .report import CompilationReport, attach, desugar


def compile_gmlg_to_gps_real(f, attention="softmax", ell=None) -> Network:
    """Basic GPS network with d identical heaviside layers, d = number of subformulas.

    After layer j the j-th column holds the truth value of the j-th subformula.
    """
    f = desugar(f)
    frag = fragment_of(f)
    if frag not in ("PL", "ML", "GML", "PL+G", "ML+G", "GML+G"):
        raise CompileError(f"formula in {frag} is outside GML+G")
    if attention not in ("softmax", "average-hard"):
        raise CompileError(f"unsupported attention {attention!r}")
    subs = subformulas(f)
    col = {g: i for i, g in enumerate(subs)}
    d = len(subs)
    ell = max(max_prop(f) + 1, 1) if ell is None else ell
    C, A, b, V = zeros(d, d), zeros(d, d), zeros(d), zeros(d, d)
    for g in subs:
        j = col[g]
        if isinstance(g, Prop):
            C[j, j] = Fraction(1)
        elif isinstance(g, Top):
            b[j] = Fraction(1)
        elif isinstance(g, Not):
            C[col[g.child], j] = Fraction(-1)
            b[j] = Fraction(1)
        elif isinstance(g, And):
            C[col[g.left], j] += 1
            C[col[g.right], j] += 1
            b[j] = Fraction(-1)
        elif isinstance(g, Dia):
            A[col[g.child], j] = Fraction(1)
            b[j] = Fraction(1 - g.grade)
        elif isinstance(g, Glob):
            if g.grade != 1:
                raise CompileError("counting global modality needs GML+GC")
            V[col[g.child], j] = Fraction(1)
    P = Affine(ell, d)
    for g in subs:
        if isinstance(g, Prop):
            if g.index >= ell:
                raise CompileError("formula uses more propositions than the alphabet")
            P.add(g.index, col[g])
    head = AttentionHead(zeros(d, d), zeros(d, d), V)
    layers = [BasicGPSLayer(C.copy(), A.copy(), b.copy(), head, attention, "heaviside") for _ in range(d)]
    cls = Affine(d, 1).add(col[f], 0)
    net = Network("BasicGPS", ell, d, MLP([P.perceptron("identity")]), layers,
                  MLP([cls.perceptron("identity")]), "exact")
    rep = CompilationReport(
        fragment=frag, target="BasicGPS", backend="exact", layer_count=d, hidden_dim=d,
        layer_map={to_text(g): [col[g]] for g in subs},
        columns={to_text(g): col[g] for g in subs}, attention=attention)
    return attach(net, rep)


def basic_to_gps(net: Network) -> Network:
    """Equivalent GPS network of hidden dimension 2d.

    Features are (x1, x2) with x2 = 0 between layers.  Attention writes H(x1)
    into the second half, message passing writes x1 C + a1 A + b there, and
    the feed-forward part applies the activation to the second half while
    cancelling the doubled first half.
    """
    if net.kind != "BasicGPS":
        raise CompileError("expects a BasicGPS network")
    d = net.d
    layers = []
    for L in net.layers:
        h = L.head
        if h.d_h != d:
            raise CompileError("basic GPS heads must have d_h = d")
        mats = []
        for W in (h.W_Q, h.W_K, h.W_V):
            E = zeros(2 * d, d)
            E[:d, :] = W
            mats.append(E)
        W_O = zeros(d, 2 * d)
        for i in range(d):
            W_O[i, d + i] = Fraction(1)
        sa = Attention([AttentionHead(*mats)], W_O, L.kind)
        com = Affine(4 * d, 2 * d)
        for a in range(d):
            for c in range(d):
                if L.C[a, c]:
                    com.add(a, d + c, L.C[a, c])
                if L.A[a, c]:
                    com.add(2 * d + a, d + c, L.A[a, c])
        for c in range(d):
            com.bias(d + c, L.b[c])
        mp = MessagePassing(MLP([com.perceptron("identity")]), "sum")
        first = Affine(2 * d, 3 * d)
        for i in range(d):
            first.add(d + i, i)          # act(s2)
            first.add(i, d + i)          # s1
            first.add(d + i, 2 * d + i)  # s2
        acts = (L.act,) * d + ("identity",) * (2 * d)
        second = Affine(3 * d, 2 * d)
        for i in range(d):
            second.add(i, i).add(d + i, i, -1)
            second.add(2 * d + i, d + i, -1)
        ff = MLP([first.perceptron(acts), second.perceptron("identity")])
        layers.append(GPSLayer(sa, mp, ff))
    P = net.initial.layers
    last = P[-1]
    W = zeros(last.d_in, 2 * d)
    W[:, :d] = last.W
    bb = zeros(2 * d)
    bb[:d] = last.b
    act = last.act if isinstance(last.act, str) else tuple(last.act) + ("identity",) * d
    init = MLP(list(P[:-1]) + [Perceptron(W, bb, act)])
    first = net.classifier.layers[0]
    W = zeros(2 * d, first.d_out)
    W[:d, :] = first.W
    cls = MLP([Perceptron(W, first.b.copy(), first.act)] + list(net.classifier.layers[1:]))
    out = Network("GPS", net.ell, 2 * d, init, layers, cls, net.backend)
    if "compilation" in net.meta:
        rep = dict(net.meta["compilation"])
        rep.update(target="GPS", hidden_dim=2 * d)
        out.meta["compilation"] = rep
    return out
