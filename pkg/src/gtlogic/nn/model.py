"""Network descriptions and their file format.

Weights are exact rationals (numpy object arrays of Fraction).  Matrices act
on row vectors: a perceptron maps x (1 x d_in) to act(x W + b) with W of
shape (d_in, d_out); attention matrices are (d, d_h) and W_O is
(heads * d_h, d).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Union

import numpy as np

from ..floatfmt import FloatFormat, decode, parse_bits, round_real

ACTIVATIONS = ("relu", "identity", "heaviside", "trunc-relu")
AGGREGATIONS = ("sum", "max", "set-sum", "set-max", "const-zero")
NETWORK_KINDS = ("GT", "GPS", "GNN", "GNN+G", "GNN+GC", "BasicGPS")


def frac_matrix(rows, shape=None) -> np.ndarray:
    a = np.empty(np.shape(rows) if shape is None else shape, dtype=object)
    src = np.asarray(rows, dtype=object) if shape is None else None
    for idx in np.ndindex(*a.shape):
        a[idx] = Fraction(src[idx]) if src is not None else Fraction(0)
    return a


def zeros(*shape) -> np.ndarray:
    return frac_matrix(None, shape)


def identity(d) -> np.ndarray:
    a = zeros(d, d)
    for i in range(d):
        a[i, i] = Fraction(1)
    return a


@dataclass(eq=False)
class Perceptron:
    W: np.ndarray
    b: np.ndarray
    act: Union[str, tuple] = "relu"

    def __post_init__(self):
        self.W = frac_matrix(self.W)
        self.b = frac_matrix(self.b)
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[1],):
            raise ValueError(f"perceptron shapes W{self.W.shape} b{self.b.shape} disagree")
        acts = (self.act,) if isinstance(self.act, str) else tuple(self.act)
        if isinstance(self.act, (list, tuple)):
            self.act = tuple(self.act)
            if len(self.act) != self.W.shape[1]:
                raise ValueError("one activation per unit required")
        for a in acts:
            if a not in ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")

    @property
    def d_in(self):
        return self.W.shape[0]

    @property
    def d_out(self):
        return self.W.shape[1]


@dataclass(eq=False)
class MLP:
    layers: List[Perceptron]

    def __post_init__(self):
        if not self.layers:
            raise ValueError("an MLP needs at least one layer")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.d_out != b.d_in:
                raise ValueError("MLP layer dimensions do not chain")

    @property
    def d_in(self):
        return self.layers[0].d_in

    @property
    def d_out(self):
        return self.layers[-1].d_out

    @property
    def is_simple(self) -> bool:
        return (len(self.layers) == 2 and self.layers[0].act == "relu"
                and self.layers[1].act == "identity")

    @classmethod
    def linear(cls, W, b=None, act="identity"):
        W = frac_matrix(W)
        b = zeros(W.shape[1]) if b is None else b
        return cls([Perceptron(W, b, act)])


@dataclass(eq=False)
class AttentionHead:
    W_Q: np.ndarray
    W_K: np.ndarray
    W_V: np.ndarray

    def __post_init__(self):
        self.W_Q, self.W_K, self.W_V = map(frac_matrix, (self.W_Q, self.W_K, self.W_V))
        if not (self.W_Q.shape == self.W_K.shape == self.W_V.shape):
            raise ValueError("W_Q, W_K, W_V must share a shape")

    @property
    def d(self):
        return self.W_Q.shape[0]

    @property
    def d_h(self):
        return self.W_Q.shape[1]


@dataclass(eq=False)
class Attention:
    heads: List[AttentionHead]
    W_O: np.ndarray
    kind: str = "softmax"

    def __post_init__(self):
        self.W_O = frac_matrix(self.W_O)
        if self.kind not in ("softmax", "average-hard", "average-hard-direct", "unique-hard"):
            raise ValueError(f"unknown attention kind {self.kind!r}")
        width = sum(h.d_h for h in self.heads)
        if self.W_O.shape[0] != width:
            raise ValueError("W_O rows must equal the concatenated head width")
        if len({h.d for h in self.heads}) > 1:
            raise ValueError("heads must share the model dimension")

    @property
    def d(self):
        return self.W_O.shape[1]


@dataclass(eq=False)
class MessagePassing:
    com: MLP  # (2d -> d), input is (x_v, AGG)
    agg: str = "sum"

    def __post_init__(self):
        if self.agg not in AGGREGATIONS:
            raise ValueError(f"unknown aggregation {self.agg!r}")
        if self.com.d_in != 2 * self.com.d_out:
            raise ValueError("COM must map 2d to d")

    @property
    def d(self):
        return self.com.d_out


@dataclass(eq=False)
class Readout:
    mlp: MLP
    agg: str = "sum"  # "sum" counts, "set-sum" is the non-counting variant


@dataclass(eq=False)
class TransformerLayer:
    sa: Attention
    ff: MLP


@dataclass(eq=False)
class GPSLayer:
    sa: Attention
    mp: MessagePassing
    ff: MLP


@dataclass(eq=False)
class BasicGPSLayer:
    """act(x C + (sum of successor rows) A + H(x) + b), no skip connection."""

    C: np.ndarray
    A: np.ndarray
    b: np.ndarray
    head: AttentionHead
    kind: str = "softmax"
    act: str = "heaviside"

    def __post_init__(self):
        self.C, self.A, self.b = map(frac_matrix, (self.C, self.A, self.b))


@dataclass(eq=False)
class MPLayer:
    mp: MessagePassing


@dataclass(eq=False)
class MPReadoutLayer:
    mp: MessagePassing
    readout: Readout


Layer = Union[TransformerLayer, GPSLayer, BasicGPSLayer, MPLayer, MPReadoutLayer]

_ALLOWED = {
    "GT": (TransformerLayer,),
    "GPS": (GPSLayer,),
    "BasicGPS": (BasicGPSLayer,),
    "GNN": (MPLayer,),
    "GNN+G": (MPLayer, MPReadoutLayer),
    "GNN+GC": (MPLayer, MPReadoutLayer),
}


@dataclass(eq=False)
class Network:
    kind: str
    ell: int
    d: int
    initial: MLP
    layers: list
    classifier: MLP
    backend: object = "exact"  # "exact" | "f64" | {"float": {"p":, "q":}}
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in NETWORK_KINDS:
            raise ValueError(f"unknown network kind {self.kind!r}")
        if self.initial.d_in != self.ell or self.initial.d_out != self.d:
            raise ValueError("initial MLP must map ell to d")
        if self.classifier.d_in != self.d or self.classifier.d_out != 1:
            raise ValueError("classifier must map d to 1")
        for layer in self.layers:
            if not isinstance(layer, _ALLOWED[self.kind]):
                raise ValueError(f"{type(layer).__name__} not allowed in a {self.kind}")
            if self.kind == "GNN+G" and isinstance(layer, MPReadoutLayer) and layer.readout.agg == "sum":
                raise ValueError("GNN+G readouts must be set-based")

    @property
    def float_format(self) -> Optional[FloatFormat]:
        if isinstance(self.backend, dict):
            return FloatFormat(int(self.backend["float"]["p"]), int(self.backend["float"]["q"]))
        return None


# -- serialization -----------------------------------------------------------------

class _Codec:
    def __init__(self, backend):
        self.backend = backend
        self.fmt = None
        if isinstance(backend, dict):
            self.fmt = FloatFormat(int(backend["float"]["p"]), int(backend["float"]["q"]))

    def enc(self, x: Fraction) -> str:
        if self.backend == "exact":
            return f"{x.numerator}/{x.denominator}"
        if self.backend == "f64":
            f = float(x)
            if Fraction(f) != x:
                raise ValueError(f"{x} is not a binary64 value")
            return f.hex()
        v = round_real(self.fmt, x)
        if not v.is_finite or decode(self.fmt, v) != x:
            raise ValueError(f"{x} is not representable in {self.fmt}")
        return v.bits(self.fmt)

    def dec(self, s: str) -> Fraction:
        if self.backend == "exact":
            return Fraction(s)
        if self.backend == "f64":
            return Fraction(float.fromhex(s))
        return decode(self.fmt, parse_bits(self.fmt, s))

    def mat(self, a):
        if a.ndim == 1:
            return [self.enc(x) for x in a]
        return [[self.enc(x) for x in row] for row in a]

    def unmat(self, rows, shape=None):
        arr = np.asarray(rows, dtype=object)
        out = np.empty(arr.shape if shape is None else shape, dtype=object)
        for idx in np.ndindex(*out.shape):
            out[idx] = self.dec(arr[idx])
        return out


def _mlp_to(c, m: MLP):
    return [{"W": c.mat(p.W), "shape": list(p.W.shape), "b": c.mat(p.b),
             "act": p.act if isinstance(p.act, str) else list(p.act)} for p in m.layers]


def _mlp_from(c, rows):
    return MLP([Perceptron(c.unmat(r["W"], tuple(r["shape"])), c.unmat(r["b"], (r["shape"][1],)),
                           r["act"] if isinstance(r["act"], str) else tuple(r["act"])) for r in rows])


def _head_to(c, h):
    return {k: c.mat(getattr(h, k)) for k in ("W_Q", "W_K", "W_V")} | {"shape": list(h.W_Q.shape)}


def _head_from(c, d):
    shp = tuple(d["shape"])
    return AttentionHead(*(c.unmat(d[k], shp) for k in ("W_Q", "W_K", "W_V")))


def _sa_to(c, sa):
    return {"heads": [_head_to(c, h) for h in sa.heads], "W_O": c.mat(sa.W_O),
            "W_O_shape": list(sa.W_O.shape), "kind": sa.kind}


def _sa_from(c, d):
    return Attention([_head_from(c, h) for h in d["heads"]], c.unmat(d["W_O"], tuple(d["W_O_shape"])), d["kind"])


def _mp_to(c, mp):
    return {"com": _mlp_to(c, mp.com), "agg": mp.agg}


def _mp_from(c, d):
    return MessagePassing(_mlp_from(c, d["com"]), d["agg"])


def _layer_to(c, layer):
    if isinstance(layer, TransformerLayer):
        return {"type": "transformer", "sa": _sa_to(c, layer.sa), "ff": _mlp_to(c, layer.ff)}
    if isinstance(layer, GPSLayer):
        return {"type": "gps", "sa": _sa_to(c, layer.sa), "mp": _mp_to(c, layer.mp), "ff": _mlp_to(c, layer.ff)}
    if isinstance(layer, BasicGPSLayer):
        return {"type": "basic-gps", "C": c.mat(layer.C), "A": c.mat(layer.A), "b": c.mat(layer.b),
                "d": layer.C.shape[0], "head": _head_to(c, layer.head), "kind": layer.kind, "act": layer.act}
    if isinstance(layer, MPLayer):
        return {"type": "mp", "mp": _mp_to(c, layer.mp)}
    if isinstance(layer, MPReadoutLayer):
        return {"type": "mp-readout", "mp": _mp_to(c, layer.mp),
                "readout": {"mlp": _mlp_to(c, layer.readout.mlp), "agg": layer.readout.agg}}
    raise TypeError(layer)


def _layer_from(c, d):
    t = d["type"]
    if t == "transformer":
        return TransformerLayer(_sa_from(c, d["sa"]), _mlp_from(c, d["ff"]))
    if t == "gps":
        return GPSLayer(_sa_from(c, d["sa"]), _mp_from(c, d["mp"]), _mlp_from(c, d["ff"]))
    if t == "basic-gps":
        n = d["d"]
        return BasicGPSLayer(c.unmat(d["C"], (n, n)), c.unmat(d["A"], (n, n)), c.unmat(d["b"], (n,)),
                             _head_from(c, d["head"]), d["kind"], d["act"])
    if t == "mp":
        return MPLayer(_mp_from(c, d["mp"]))
    if t == "mp-readout":
        r = d["readout"]
        return MPReadoutLayer(_mp_from(c, d["mp"]), Readout(_mlp_from(c, r["mlp"]), r["agg"]))
    raise ValueError(f"unknown layer type {t!r}")


def network_to_dict(net: Network) -> dict:
    c = _Codec(net.backend)
    return {
        "kind": net.kind,
        "backend": net.backend,
        "ell": net.ell,
        "d": net.d,
        "initial_mlp": _mlp_to(c, net.initial),
        "layers": [_layer_to(c, layer) for layer in net.layers],
        "classifier": _mlp_to(c, net.classifier),
        "meta": net.meta,
    }


def network_from_dict(d: dict) -> Network:
    c = _Codec(d["backend"])
    return Network(d["kind"], int(d["ell"]), int(d["d"]), _mlp_from(c, d["initial_mlp"]),
                   [_layer_from(c, x) for x in d["layers"]], _mlp_from(c, d["classifier"]),
                   d["backend"], d.get("meta", {}))


def save_network(net: Network, path):
    with open(path, "w") as fh:
        json.dump(network_to_dict(net), fh)


def load_network(path) -> Network:
    with open(path) as fh:
        return network_from_dict(json.load(fh))
