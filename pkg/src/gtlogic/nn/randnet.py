"""Random network descriptions for invariance experiments and tests."""
from __future__ import annotations

from fractions import Fraction

import numpy as np

from .model import (
    MLP,
    Attention,
    AttentionHead,
    BasicGPSLayer,
    GPSLayer,
    MessagePassing,
    MPLayer,
    MPReadoutLayer,
    Network,
    Perceptron,
    Readout,
    TransformerLayer,
)


def _weights(rng, shape, scale=4, denom=4, sparsity=0.0):
    """Small dyadic weights k/denom with |k| <= scale, exact in every backend."""
    k = rng.integers(-scale, scale + 1, size=shape)
    if sparsity:
        k = np.where(rng.random(shape) < sparsity, 0, k)
    out = np.empty(shape, dtype=object)
    for idx in np.ndindex(*shape):
        out[idx] = Fraction(int(k[idx]), denom)
    return out


def random_mlp(rng, d_in, d_out, hidden=(), act="relu", last="identity", **kw) -> MLP:
    dims = [d_in, *hidden, d_out]
    layers = []
    for i in range(len(dims) - 1):
        a = last if i == len(dims) - 2 else act
        layers.append(Perceptron(_weights(rng, (dims[i], dims[i + 1]), **kw), _weights(rng, (dims[i + 1],), **kw), a))
    return MLP(layers)


def random_attention(rng, d, d_h=1, heads=1, kind="softmax", zero_qk=False, **kw) -> Attention:
    hs = []
    for _ in range(heads):
        q = _weights(rng, (d, d_h), **kw)
        k = _weights(rng, (d, d_h), **kw)
        if zero_qk:
            q, k = q * 0, k * 0
        hs.append(AttentionHead(q, k, _weights(rng, (d, d_h), **kw)))
    return Attention(hs, _weights(rng, (heads * d_h, d), **kw), kind)


def random_network(rng: np.random.Generator, kind="GPS", ell=2, d=3, layers=2, attention="softmax",
                   agg="sum", backend="f64", d_h=1, heads=1, hidden=(4,), zero_qk=False, **kw) -> Network:
    P = random_mlp(rng, ell, d, hidden, **kw)
    C = random_mlp(rng, d, 1, hidden, **kw)
    Ls = []
    for _ in range(layers):
        if kind == "GT":
            Ls.append(TransformerLayer(random_attention(rng, d, d_h, heads, attention, zero_qk, **kw),
                                       random_mlp(rng, d, d, hidden, **kw)))
        elif kind == "GPS":
            Ls.append(GPSLayer(random_attention(rng, d, d_h, heads, attention, zero_qk, **kw),
                               MessagePassing(random_mlp(rng, 2 * d, d, hidden, **kw), agg),
                               random_mlp(rng, d, d, hidden, **kw)))
        elif kind == "GNN":
            Ls.append(MPLayer(MessagePassing(random_mlp(rng, 2 * d, d, hidden, **kw), agg)))
        elif kind in ("GNN+G", "GNN+GC"):
            ragg = "set-sum" if kind == "GNN+G" else "sum"
            Ls.append(MPReadoutLayer(MessagePassing(random_mlp(rng, 2 * d, d, hidden, **kw), agg),
                                     Readout(random_mlp(rng, d, d, hidden, **kw), ragg)))
        elif kind == "BasicGPS":
            att = random_attention(rng, d, d, 1, attention, zero_qk, **kw)
            Ls.append(BasicGPSLayer(_weights(rng, (d, d), **kw), _weights(rng, (d, d), **kw),
                                    _weights(rng, (d,), **kw), att.heads[0], attention, "heaviside"))
        else:
            raise ValueError(f"unknown kind {kind!r}")
    return Network(kind, ell, d, P, Ls, C, backend)
