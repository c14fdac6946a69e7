"""Shifted layers and step realization.

A layer of dimension 2d (transformer) or 3d (GPS) works on halves or thirds
of its feature vector.  The feed-forward part remembers the source region in
passthrough units and emits its negation at the end, so the skip connection
cancels the source and the result lands in the target region.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from ..nn.model import (
    MLP,
    Attention,
    AttentionHead,
    GPSLayer,
    MessagePassing,
    MPLayer,
    TransformerLayer,
    zeros,
)
from .gadgets import Affine, CompileError


def _acts(items):
    """Per-unit activation list, collapsed to a string when uniform."""
    flat = []
    for a, n in items:
        flat.extend([a] * n if isinstance(a, str) else list(a))
    return flat[0] if flat and len(set(flat)) == 1 else tuple(flat)


def zero_attention(total, kind="softmax") -> Attention:
    h = AttentionHead(zeros(total, 1), zeros(total, 1), zeros(total, 1))
    return Attention([h], zeros(1, total), kind)


def passthrough_ff(total, d, read, cancel, tgt, m: MLP | None = None, nonneg=False,
                   half_from=None) -> MLP:
    """Feed-forward MLP on ``total`` columns built from regions of width d.

    The output is -s on every cancel region and, on the target region,
    m(s_read) (or s_read when m is None, plus s_half_from / 2 if given).
    """
    regions = list(dict.fromkeys(list(cancel) + ([read] if m is None else [])
                                 + ([half_from] if half_from is not None else [])))
    signs = (1,) if nonneg else (1, -1)
    units = [(r, i, s) for r in regions for i in range(d) for s in signs]
    npass = len(units)
    mls = [] if m is None else list(m.layers)
    L = max(2, len(mls))
    layers = []
    prev_mu = None
    for t in range(1, L):
        mp = mls[t - 1] if mls else None
        mu = mp.d_out if mp is not None else 0
        d_in = total if t == 1 else npass + prev_mu
        A = Affine(d_in, npass + mu)
        for u, (r, i, s) in enumerate(units):
            A.add(r + i if t == 1 else u, u, s if t == 1 else 1)
        if mp is not None:
            for a in range(mp.d_in):
                for b in range(mu):
                    w = mp.W[a, b]
                    if w:
                        A.add((read + a) if t == 1 else npass + a, npass + b, w)
            for b in range(mu):
                A.bias(npass + b, mp.b[b])
        layers.append(A.perceptron(_acts([("relu", npass)] + ([(mp.act, mu)] if mp else []))))
        prev_mu = mu
    out = Affine(npass + prev_mu, total)
    for u, (r, i, s) in enumerate(units):
        if r in cancel:
            out.add(u, r + i, -s)
        if m is None and r == read:
            out.add(u, tgt + i, s)
        if r == half_from:
            out.add(u, tgt + i, Fraction(s, 2))
    out_act = "identity"
    if len(mls) == 1:
        for b in range(mls[0].d_out):
            out.add(npass + b, tgt + b)
    elif len(mls) >= 2:
        last = mls[-1]
        for a in range(last.d_in):
            for b in range(last.d_out):
                if last.W[a, b]:
                    out.add(npass + a, tgt + b, last.W[a, b])
        for b in range(last.d_out):
            out.bias(tgt + b, last.b[b])
        if last.act != "identity":
            acts = ["identity"] * total
            la = [last.act] * last.d_out if isinstance(last.act, str) else list(last.act)
            acts[tgt: tgt + last.d_out] = la
            out_act = _acts([(tuple(acts), total)])
    layers.append(out.perceptron(out_act))
    return MLP(layers)


def shift_mlp_transformer(m: MLP, direction="right", nonneg=False, kind="softmax") -> TransformerLayer:
    """Transformer layer of dimension 2d mapping (x, 0) to (0, m(x)) (right) or back (left)."""
    d = m.d_in
    if m.d_out != d:
        raise CompileError("shifting needs a d -> d MLP")
    src, tgt = (0, d) if direction == "right" else (d, 0)
    ff = passthrough_ff(2 * d, d, src, [src], tgt, m, nonneg)
    return TransformerLayer(zero_attention(2 * d, kind), ff)


def _copy_com(total, d, src, dsts, nonneg) -> MLP:
    """Simple COM (2 total -> total) writing x_src into each region in dsts."""
    signs = (1,) if nonneg else (1, -1)
    units = [(i, s) for i in range(d) for s in signs]
    A = Affine(2 * total, len(units))
    B = Affine(len(units), total)
    for u, (i, s) in enumerate(units):
        A.add(src + i, u, s)
        for r in dsts:
            B.add(u, r + i, s)
    return MLP([A.perceptron("relu"), B.perceptron("identity")])


def _embed_com(com: MLP, total, d, src, dst) -> MLP:
    """COM acting on (x_src, a_src) with its output written to region dst."""
    first = com.layers[0]
    A = Affine(2 * total, first.d_out)
    for a in range(d):
        for b in range(first.d_out):
            if first.W[a, b]:
                A.add(src + a, b, first.W[a, b])
            if first.W[d + a, b]:
                A.add(total + src + a, b, first.W[d + a, b])
    A.b = first.b.copy()
    layers = [A.perceptron(first.act)]
    if len(com.layers) == 1:
        B = Affine(first.d_out, total)
        for b in range(first.d_out):
            B.add(b, dst + b)
        layers.append(B.perceptron("identity"))
        return MLP(layers)
    layers.extend(com.layers[1:-1])
    last = com.layers[-1]
    B = Affine(last.d_in, total)
    for a in range(last.d_in):
        for b in range(last.d_out):
            if last.W[a, b]:
                B.add(a, dst + b, last.W[a, b])
    for b in range(last.d_out):
        B.bias(dst + b, last.b[b])
    act = last.act
    if act != "identity":
        acts = ["identity"] * total
        acts[dst: dst + last.d_out] = [act] * last.d_out if isinstance(act, str) else list(act)
        act = _acts([(tuple(acts), total)])
    layers.append(B.perceptron(act))
    return MLP(layers)


def _embed_attention(sa: Attention, total, d, src, dsts) -> Attention:
    heads = []
    for h in sa.heads:
        mats = []
        for W in (h.W_Q, h.W_K, h.W_V):
            E = zeros(total, h.d_h)
            E[src: src + d, :] = W
            mats.append(E)
        heads.append(AttentionHead(*mats))
    W_O = zeros(sa.W_O.shape[0], total)
    for r in dsts:
        W_O[:, r: r + d] = sa.W_O
    return Attention(heads, W_O, sa.kind)


def shift_via_gps(part, direction="right", nonneg=False, kind="softmax") -> GPSLayer:
    """GPS layer of dimension 3d that shifts an MLP, message-passing or transformer part.

    Regions are (left, middle, right); right shifts read the left third and
    write the right third, left shifts the reverse.
    """
    if isinstance(part, MLP):
        d = part.d_in
    elif isinstance(part, (MessagePassing, MPLayer)):
        d = (part.mp if isinstance(part, MPLayer) else part).d
    elif isinstance(part, TransformerLayer):
        d = part.sa.d
    else:
        raise CompileError(f"cannot shift a {type(part).__name__}")
    total = 3 * d
    src, mid, tgt = (0, d, 2 * d) if direction == "right" else (2 * d, d, 0)
    if isinstance(part, MLP):
        if part.d_out != d:
            raise CompileError("shifting needs a d -> d MLP")
        mp = MessagePassing(_copy_com(total, d, src, [mid], nonneg), "sum")
        ff = passthrough_ff(total, d, mid, [src, mid], tgt, part, nonneg)
        return GPSLayer(zero_attention(total, kind), mp, ff)
    if isinstance(part, (MessagePassing, MPLayer)):
        inner = part.mp if isinstance(part, MPLayer) else part
        mp = MessagePassing(_embed_com(inner.com, total, d, src, mid), inner.agg)
        half = src if isinstance(part, MPLayer) else None
        ff = passthrough_ff(total, d, mid, [src, mid], tgt, None, nonneg, half_from=half)
        return GPSLayer(zero_attention(total, kind), mp, ff)
    sa = _embed_attention(part.sa, total, d, src, [mid, tgt])
    mp = MessagePassing(_copy_com(total, d, src, [mid, tgt], nonneg), "sum")
    ff = passthrough_ff(total, d, mid, [src, mid], tgt, part.ff, nonneg)
    return GPSLayer(sa, mp, ff)


# -- steps ---------------------------------------------------------------------------

@dataclass
class HeadSpec:
    """One attention head over state columns: sparse W_Q, W_K, W_V columns and a target column."""

    q: dict
    k: dict
    v: dict
    out: int


@dataclass
class DiaSpec:
    child: int
    grade: int
    out: int


@dataclass
class Step:
    """new_state = program(state + heads(state)), or a message-passing update.

    ``inplace`` steps add the head outputs and do nothing else (no shift).
    """

    labels: list
    program: list = field(default_factory=list)
    heads: list = field(default_factory=list)
    dias: list = field(default_factory=list)
    inplace: bool = False


def _heads(specs, total, src, out_offsets, kind) -> Attention:
    heads = []
    W_O = zeros(len(specs), total)
    for n, h in enumerate(specs):
        mats = []
        for spec in (h.q, h.k, h.v):
            E = zeros(total, 1)
            for c, w in spec.items():
                E[src + c, 0] = Fraction(w)
            mats.append(E)
        heads.append(AttentionHead(*mats))
        for off in out_offsets:
            W_O[n, off + h.out] = Fraction(1)
    return Attention(heads, W_O, kind)


def _program_mlp(r: Affine) -> MLP:
    D = r.d_out
    return MLP([r.perceptron("relu"), Affine(D).keep(range(D)).perceptron("identity")])


def _zero_simple(total) -> MLP:
    return MLP([Affine(total).perceptron("relu"), Affine(total).perceptron("identity")])


def _dia_com(total, D, src, dst, dias) -> MLP:
    """Simple COM: passthrough of the state plus relu(a - c + 1) - relu(a - c) per diamond."""
    A = Affine(2 * total, D + 2 * len(dias))
    B = Affine(D + 2 * len(dias), total)
    for i in range(D):
        A.add(src + i, i)
        B.add(i, dst + i)
    for n, s in enumerate(dias):
        u = D + 2 * n
        A.add(total + src + s.child, u).bias(u, 1 - s.grade)
        A.add(total + src + s.child, u + 1).bias(u + 1, -s.grade)
        B.add(u, dst + s.out, 1).add(u + 1, dst + s.out, -1)
    return MLP([A.perceptron("relu"), B.perceptron("identity")])


def realize_gt(steps, D, kind):
    """Transformer layers of dimension 2D; returns (layers, per-step layer indices, final offset)."""
    total, src = 2 * D, 0
    layers, where = [], []
    for st in steps:
        idx = []
        if st.dias:
            raise CompileError("transformers cannot realize message passing")
        if st.inplace:
            sa = _heads(st.heads, total, src, [src], kind)
            idx.append(len(layers))
            layers.append(TransformerLayer(sa, _zero_simple(total)))
            where.append(idx)
            continue
        for t, r in enumerate(st.program):
            tgt = D - src
            sa = _heads(st.heads, total, src, [src], kind) if (t == 0 and st.heads) else zero_attention(total, kind)
            ff = passthrough_ff(total, D, src, [src], tgt, _program_mlp(r), nonneg=True)
            idx.append(len(layers))
            layers.append(TransformerLayer(sa, ff))
            src = tgt
        where.append(idx)
    return layers, where, src


def realize_gps(steps, D, kind):
    """GPS layers of dimension 3D alternating between the outer thirds."""
    total, src, mid = 3 * D, 0, D
    layers, where = [], []
    for st in steps:
        idx = []
        if st.inplace:
            raise CompileError("in-place steps are transformer only")
        if st.dias:
            tgt = 2 * D - src
            mp = MessagePassing(_dia_com(total, D, src, mid, st.dias), "sum")
            ff = passthrough_ff(total, D, mid, [src, mid], tgt, None, nonneg=True)
            idx.append(len(layers))
            layers.append(GPSLayer(zero_attention(total, kind), mp, ff))
            src = tgt
        for t, r in enumerate(st.program):
            tgt = 2 * D - src
            first = t == 0 and st.heads
            sa = _heads(st.heads, total, src, [mid], kind) if first else zero_attention(total, kind)
            mp = MessagePassing(_copy_com(total, D, src, [mid], True), "sum")
            ff = passthrough_ff(total, D, mid, [src, mid], tgt, _program_mlp(r), nonneg=True)
            idx.append(len(layers))
            layers.append(GPSLayer(sa, mp, ff))
            src = tgt
        where.append(idx)
    return layers, where, src
