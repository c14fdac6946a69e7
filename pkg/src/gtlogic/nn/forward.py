"""Forward passes over a batch of same-size graphs.

Feature arrays have shape (B, n, d); adjacency is a (B, n, n) boolean array
with adj[b, u, v] meaning the edge u -> v.  Single-graph entry points wrap
the batched ones with B = 1.
"""
from __future__ import annotations

import numpy as np

from .backends import Backend, FloatBackend, backend_from_spec
from .model import (
    MLP,
    Attention,
    AttentionHead,
    BasicGPSLayer,
    GPSLayer,
    MPLayer,
    MPReadoutLayer,
    MessagePassing,
    Network,
    Readout,
    TransformerLayer,
)

CHUNK_ELEMENTS = 1 << 21


class AlphabetMismatch(ValueError):
    pass


def _mat(bk: Backend, W):
    cache = bk.__dict__.setdefault("_mat_cache", {})
    hit = cache.get(id(W))
    if hit is not None and hit[0] is W:
        return hit[1]
    if len(cache) > 50000:
        cache.clear()
    out = bk.matrix(W)
    cache[id(W)] = (W, out)
    return out


def _plan(bk: FloatBackend, W):
    cache = bk.__dict__.setdefault("_plan_cache", {})
    hit = cache.get(id(W))
    if hit is not None and hit[0] is W:
        return hit[1]
    if len(cache) > 50000:
        cache.clear()
    out = bk.weight_plan(_mat(bk, W))
    cache[id(W)] = (W, out)
    return out


def _linear(bk, x, W, b=None, strict=None):
    if isinstance(bk, FloatBackend) and not (bk.strict if strict is None else strict):
        y = bk.matmul_plan(x, _plan(bk, W))
    else:
        kw = {} if strict is None else {"strict": strict}
        y = bk.matmul(x, _mat(bk, W), **kw)
    return y if b is None else bk.add(y, _mat(bk, b))


def _activate(bk, act, z):
    if isinstance(act, str):
        return bk.activate(act, z)
    out = z
    for name in set(act):
        if name == "identity":
            continue
        cols = np.array([a == name for a in act])
        out = bk.where(cols, bk.activate(name, z), out)
    return out


def mlp_forward(bk: Backend, m: MLP, x):
    for p in m.layers:
        x = _activate(bk, p.act, _linear(bk, x, p.W, p.b))
    return x


def head_forward(bk: Backend, h: AttentionHead, kind: str, x):
    Q = _linear(bk, x, h.W_Q)
    K = _linear(bk, x, h.W_K)
    V = _linear(bk, x, h.W_V)
    logits = bk.matmul(Q, bk.swapaxes(K, -1, -2))
    s = bk.sqrt_const(h.d_h)
    if s is None:
        if not np.all(bk.equal(logits, bk.zeros(logits.shape))):
            raise ValueError("exact backend needs a square head dimension")
    else:
        logits = bk.div(logits, s)
    att = bk.attention_rows(logits, kind)
    # vertex-indexed sum: always the ascending multiset sum
    return bk.matmul(att, V, strict=False)


def attention_forward(bk: Backend, sa: Attention, x):
    outs = [head_forward(bk, h, sa.kind, x) for h in sa.heads]
    H = outs[0] if len(outs) == 1 else bk.concat(outs, -1)
    return _linear(bk, H, sa.W_O)


def _dedupe_mask(bk, x, mask):
    """Drop vertices whose feature row equals an earlier row in the same mask.

    mask (B, m, n) selects vertices per target row; keeps first occurrences.
    """
    n = x.shape[-2]
    eq = np.all(bk.equal(bk.expand(x, -2), bk.expand(x, -3)), axis=-1)  # (B, n, n)
    earlier = eq & np.tril(np.ones((n, n), bool), -1)  # earlier[b, v, w]: w < v equal
    killed = np.einsum("bmw,bvw->bmv", mask.astype(np.int64), earlier.astype(np.int64)) > 0
    return mask & ~killed


def aggregate(bk: Backend, agg: str, mask, x):
    """AGG over the rows of x selected by mask (B, m, n) -> (B, m, d)."""
    B, n, d = x.shape
    m = mask.shape[1]
    if agg == "const-zero":
        return bk.zeros((B, m, d))
    if agg.startswith("set-"):
        mask = _dedupe_mask(bk, x, mask)
        agg = agg[4:]
    full = bk.broadcast_to(bk.expand(x, 1), (B, m, n, d))
    sel = np.broadcast_to(mask[..., None], (B, m, n, d))
    if agg == "sum":
        return bk.msum(bk.where(sel, full, bk.empty_fill((B, m, n, d))), 2)
    if agg == "max":
        r = bk.max(bk.where(sel, full, bk.neg_inf_fill((B, m, n, d))), 2)
        some = np.broadcast_to(mask.any(axis=2)[..., None], (B, m, d))
        return bk.where(some, r, bk.zeros((B, m, d)))
    raise ValueError(f"unknown aggregation {agg!r}")


def mp_forward(bk: Backend, mp: MessagePassing, adj, x):
    a = aggregate(bk, mp.agg, adj, x)
    return mlp_forward(bk, mp.com, bk.concat([x, a], -1))


def readout_forward(bk: Backend, r: Readout, x):
    B, n, d = x.shape
    mask = np.ones((B, 1, n), bool)
    a = aggregate(bk, r.agg, mask, x)  # (B, 1, d)
    y = mlp_forward(bk, r.mlp, a)
    return bk.broadcast_to(y, (B, n, y.shape[-1]))


def layer_forward(bk: Backend, layer, adj, x):
    if isinstance(layer, TransformerLayer):
        x1 = bk.add(x, attention_forward(bk, layer.sa, x))
        return bk.add(x1, mlp_forward(bk, layer.ff, x1))
    if isinstance(layer, GPSLayer):
        a = bk.add(x, attention_forward(bk, layer.sa, x))
        m = bk.add(x, mp_forward(bk, layer.mp, adj, x))
        s = bk.add(a, m)
        return bk.add(s, mlp_forward(bk, layer.ff, s))
    if isinstance(layer, MPLayer):
        return bk.add(x, mp_forward(bk, layer.mp, adj, x))
    if isinstance(layer, MPReadoutLayer):
        h = bk.add(x, mp_forward(bk, layer.mp, adj, x))
        return bk.add(h, readout_forward(bk, layer.readout, h))
    if isinstance(layer, BasicGPSLayer):
        nb = aggregate(bk, "sum", adj, x)
        z = bk.add(_linear(bk, x, layer.C), _linear(bk, nb, layer.A))
        z = bk.add(z, head_forward(bk, layer.head, layer.kind, x))
        z = bk.add(z, _mat(bk, layer.b))
        return bk.activate(layer.act, z)
    raise TypeError(f"unknown layer {type(layer).__name__}")


# -- whole networks ------------------------------------------------------------------

def resolve_backend(net: Network, backend=None) -> Backend:
    if backend is None:
        return backend_from_spec(net.backend)
    if isinstance(backend, (str, dict)):
        backend = backend_from_spec(backend)
    fmt = net.float_format
    if fmt is not None and not (isinstance(backend, FloatBackend) and backend.fmt == fmt):
        raise ValueError(f"network needs the {fmt} backend")
    return backend


def _width(net: Network) -> int:
    w = max(net.d, net.ell, 1)
    for layer in net.layers:
        for m in _mlps(layer):
            w = max([w] + [max(p.d_in, p.d_out) for p in m.layers])
    return w


def _mlps(layer):
    if isinstance(layer, TransformerLayer):
        return [layer.ff]
    if isinstance(layer, GPSLayer):
        return [layer.ff, layer.mp.com]
    if isinstance(layer, MPLayer):
        return [layer.mp.com]
    if isinstance(layer, MPReadoutLayer):
        return [layer.mp.com, layer.readout.mlp]
    return []


def forward_arrays(net: Network, adj, lab, backend=None, trace=False):
    """Classifier outputs (B, n) as backend values, plus optional per-layer features."""
    bk = resolve_backend(net, backend)
    adj = np.asarray(adj).astype(bool)
    lab = np.asarray(lab)
    if lab.shape[-1] > net.ell:
        raise AlphabetMismatch(f"graph uses {lab.shape[-1]} labels, network expects {net.ell}")
    if lab.shape[-1] < net.ell:
        pad = np.zeros(lab.shape[:-1] + (net.ell - lab.shape[-1],), lab.dtype)
        lab = np.concatenate([lab, pad], -1)
    x = mlp_forward(bk, net.initial, bk.from_bits(lab))
    feats = [x] if trace else None
    for layer in net.layers:
        x = layer_forward(bk, layer, adj, x)
        if trace:
            feats.append(x)
    y = mlp_forward(bk, net.classifier, x)[..., 0]
    return (y, feats) if trace else y


def classify_arrays(net: Network, adj, lab, backend=None) -> np.ndarray:
    """Bits [y > 0] for a batch, evaluated in memory-bounded chunks."""
    bk = resolve_backend(net, backend)
    adj = np.asarray(adj)
    B, n = adj.shape[0], adj.shape[1]
    w = _width(net)
    step = max(1, CHUNK_ELEMENTS // max(1, n * max(n, w) * w))
    out = np.zeros((B, n), np.uint8)
    for s in range(0, B, step):
        y = forward_arrays(net, adj[s:s + step], lab[s:s + step], bk)
        out[s:s + step] = bk.positive(y)
    return out


def network_forward(net: Network, g, backend=None, trace=False):
    """Classifier output column (n, 1) on one graph, as backend values."""
    bk = resolve_backend(net, backend)
    res = forward_arrays(net, g.adjacency()[None], g.label_matrix()[None], bk, trace)
    if trace:
        y, feats = res
        return bk.take(y, 0), [bk.take(f, 0) for f in feats]
    return bk.take(res, 0)


def classify(net: Network, g, backend=None) -> np.ndarray:
    return classify_arrays(net, g.adjacency()[None], g.label_matrix()[None], backend)[0]


def output_values(net: Network, g, backend=None) -> list:
    """Classifier outputs as Python values (Fraction, float or FloatValue)."""
    bk = resolve_backend(net, backend)
    return list(bk.to_values(network_forward(net, g, bk)))

