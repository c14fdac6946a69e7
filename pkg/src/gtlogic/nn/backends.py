"""Numeric backends with a shared, vectorized operation surface.

Every backend works on arrays of its own value type (RatArray for exact,
float64 for double, int codes for a float format) and sums along an axis in
a canonical order, so results never depend on how vertices are presented.
"""
from __future__ import annotations

import numpy as np

from ..floatfmt import FloatFormat, decode, ones_sum, round_real, tables_for
from ..floatfmt import div as fdiv
from . import rational as R
from .rational import RatArray

ATTENTION_KINDS = ("softmax", "average-hard", "average-hard-direct", "unique-hard")


class ExactTranscendental(ValueError):
    """exp (or a softmax needing it) on an argument with no rational image."""


class Backend:
    name = "abstract"

    def spec(self):
        """The backend field of a network file."""
        raise NotImplementedError

    # ops every backend provides: const, matrix, zeros, from_bits, add, sub,
    # mul, div, neg, relu, heaviside, trunc_relu, msum, lsum, max, matmul,
    # where, concat, expand, equal, positive, attention_rows, to_values
    def activate(self, name, x):
        if name == "identity":
            return x
        if name == "relu":
            return self.relu(x)
        if name == "heaviside":
            return self.heaviside(x)
        if name == "trunc-relu":
            return self.trunc_relu(x)
        raise ValueError(f"unknown activation {name!r}")

    def attention_rows(self, logits, kind):
        if kind == "softmax":
            return self.softmax(logits)
        if kind == "average-hard":
            return self.average_hard(logits, direct=False)
        if kind == "average-hard-direct":
            return self.average_hard(logits, direct=True)
        if kind == "unique-hard":
            return self.unique_hard(logits)
        raise ValueError(f"unknown attention kind {kind!r}")


# -- exact -----------------------------------------------------------------------

class ExactBackend(Backend):
    name = "exact"

    def spec(self):
        return "exact"

    def const(self, x):
        return RatArray.from_values([x])[0]

    def matrix(self, W):
        return RatArray.from_values(np.asarray(W, dtype=object))

    def zeros(self, shape):
        return RatArray.zeros(shape)

    def full(self, shape, value):
        return RatArray.full(shape, value)

    def from_bits(self, bits):
        bits = np.asarray(bits, dtype=np.int64)
        return RatArray(bits, np.ones_like(bits))

    add = staticmethod(R.add)
    sub = staticmethod(R.sub)
    mul = staticmethod(R.mul)
    div = staticmethod(R.div)
    neg = staticmethod(R.neg)

    def relu(self, x):
        keep = x.positive() | x.is_nan()
        return RatArray.where(keep, x, RatArray.zeros(x.shape))

    def heaviside(self, x):
        one = RatArray(np.where(x.positive(), 1, 0), np.ones(x.shape, np.int64))
        return RatArray.where(x.is_nan(), x, one)

    def trunc_relu(self, x):
        y = self.relu(x)
        big = R.compare(y, RatArray.full(y.shape, 1)) > 0
        return RatArray.where(big & ~y.is_nan(), RatArray.full(y.shape, 1), y)

    def exp(self, x):
        zero = x.is_finite() & (x.num == 0)
        ninf = (x.den == 0) & (x.num < 0)
        if not np.all(zero | ninf | x.is_nan()):
            raise ExactTranscendental("exact backend: exp only at 0 and -inf")
        one = RatArray(np.where(zero, 1, 0), np.ones(x.shape, np.int64))
        return RatArray.where(x.is_nan(), x, one)

    def sqrt_const(self, k: int):
        if not R.is_square(k):
            return None
        return self.const(int(round(k ** 0.5)))

    def msum(self, x, axis=-1):
        return R.total(x, axis)

    lsum = msum

    def max(self, x, axis=-1):
        x = x.moveaxis(axis, -1)
        acc = x[..., 0]
        for j in range(1, x.shape[-1]):
            acc = R.maximum(acc, x[..., j])
        return acc

    def matmul(self, a, b, strict=False):
        return R.matmul(a, b)

    where = staticmethod(RatArray.where)
    concat = staticmethod(RatArray.concat)

    def expand(self, x, axis):
        return x.expand(axis)

    def broadcast_to(self, x, shape):
        return x.broadcast_to(shape)

    def swapaxes(self, x, a, b):
        return x.swapaxes(a, b)

    def take(self, x, idx):
        return x[idx]

    def equal(self, a, b):
        return a.equal(b)

    def positive(self, x):
        return x.positive()

    def is_nan(self, x):
        return x.is_nan()

    def empty_fill(self, shape):
        return RatArray.zeros(shape)

    def neg_inf_fill(self, shape):
        return RatArray(np.full(shape, -1, np.int64), np.zeros(shape, np.int64))

    def to_values(self, x):
        return x.to_values()

    def softmax(self, logits):
        # exact only when every row is constant (exp(0) = 1 everywhere)
        first = logits[..., :1].broadcast_to(logits.shape)
        if not np.all(logits.equal(first) | logits.is_nan()):
            raise ExactTranscendental("exact backend: softmax over unequal logits")
        return self.average_hard(logits, direct=False)

    def average_hard(self, logits, direct):
        mx = self.max(logits, -1).expand(-1).broadcast_to(logits.shape)
        hit = logits.equal(mx)
        cnt = hit.sum(axis=-1, keepdims=True)
        w = RatArray(np.where(hit, 1, 0), np.broadcast_to(cnt, logits.shape))
        w = R._normalize(w.num, w.den)
        nan = np.any(logits.is_nan(), axis=-1, keepdims=True) & np.ones(logits.shape, bool)
        return RatArray.where(nan, RatArray(np.zeros(logits.shape, np.int64), np.zeros(logits.shape, np.int64)), w)

    def unique_hard(self, logits):
        mx = self.max(logits, -1).expand(-1).broadcast_to(logits.shape)
        hit = logits.equal(mx)
        first = np.cumsum(hit, axis=-1) == 1
        bits = (hit & first).astype(np.int64)
        out = RatArray(bits, np.ones(logits.shape, np.int64))
        nan = np.any(logits.is_nan(), axis=-1, keepdims=True) & np.ones(logits.shape, bool)
        return RatArray.where(nan, RatArray(np.zeros(logits.shape, np.int64), np.zeros(logits.shape, np.int64)), out)


# -- double ----------------------------------------------------------------------

class DoubleBackend(Backend):
    name = "f64"
    TOLERANCE = 1e-9

    def spec(self):
        return "f64"

    def const(self, x):
        return np.float64(float(x))

    def matrix(self, W):
        return np.vectorize(float, otypes=[np.float64])(np.asarray(W, dtype=object)) if np.size(W) else np.zeros(np.shape(W))

    def zeros(self, shape):
        return np.zeros(shape)

    def full(self, shape, value):
        return np.full(shape, float(value))

    def from_bits(self, bits):
        return np.asarray(bits, dtype=np.float64)

    def add(self, a, b):
        return np.add(a, b)

    def sub(self, a, b):
        return np.subtract(a, b)

    def mul(self, a, b):
        return np.multiply(a, b)

    def div(self, a, b):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.divide(a, b)

    def neg(self, a):
        return -a

    def relu(self, x):
        return np.where(np.isnan(x), x, np.maximum(x, 0.0))

    def heaviside(self, x):
        return np.where(np.isnan(x), x, (x > 0).astype(np.float64))

    def trunc_relu(self, x):
        return np.where(np.isnan(x), x, np.clip(x, 0.0, 1.0))

    def exp(self, x):
        with np.errstate(over="ignore"):
            return np.exp(x)

    def sqrt_const(self, k: int):
        return np.float64(np.sqrt(k))

    def msum(self, x, axis=-1):
        x = np.sort(np.moveaxis(np.asarray(x, dtype=np.float64), axis, -1), axis=-1)
        if x.shape[-1] == 0:
            return np.zeros(x.shape[:-1])
        with np.errstate(invalid="ignore"):
            return np.cumsum(x, axis=-1)[..., -1]

    def lsum(self, x, axis=-1):
        x = np.moveaxis(np.asarray(x, dtype=np.float64), axis, -1)
        if x.shape[-1] == 0:
            return np.zeros(x.shape[:-1])
        with np.errstate(invalid="ignore"):
            return np.cumsum(x, axis=-1)[..., -1]

    def max(self, x, axis=-1):
        return np.max(x, axis=axis)

    def matmul(self, a, b, strict=False):
        with np.errstate(invalid="ignore", over="ignore"):
            prod = np.expand_dims(a, -1) * np.expand_dims(b, -3)
        return self.lsum(prod, -2) if strict else self.msum(prod, -2)

    def where(self, mask, a, b):
        return np.where(mask, a, b)

    def concat(self, items, axis=-1):
        return np.concatenate(items, axis)

    def expand(self, x, axis):
        return np.expand_dims(x, axis)

    def broadcast_to(self, x, shape):
        return np.broadcast_to(x, shape)

    def swapaxes(self, x, a, b):
        return np.swapaxes(x, a, b)

    def take(self, x, idx):
        return x[idx]

    def equal(self, a, b):
        return (a == b) | (np.isnan(a) & np.isnan(b))

    def positive(self, x):
        return x > 0

    def is_nan(self, x):
        return np.isnan(x)

    def empty_fill(self, shape):
        return np.zeros(shape)

    def neg_inf_fill(self, shape):
        return np.full(shape, -np.inf)

    def to_values(self, x):
        return np.asarray(x, dtype=object)

    def _nan_rows(self, logits, out):
        nan = np.any(np.isnan(logits), axis=-1, keepdims=True)
        return np.where(nan, np.nan, out)

    def softmax(self, logits):
        b = np.max(logits, axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", over="ignore"):
            e = np.exp(logits - b)
            den = self.msum(e, -1)[..., None]
            return self._nan_rows(logits, e / den)

    def average_hard(self, logits, direct):
        b = np.max(logits, axis=-1, keepdims=True)
        hit = logits == b
        cnt = hit.sum(axis=-1, keepdims=True)
        return self._nan_rows(logits, hit / cnt)

    def unique_hard(self, logits):
        b = np.max(logits, axis=-1, keepdims=True)
        hit = logits == b
        first = hit & (np.cumsum(hit, axis=-1) == 1)
        return self._nan_rows(logits, first.astype(np.float64))


# -- float format ------------------------------------------------------------------

class FloatBackend(Backend):
    """Values are codes of the vectorized float engine.

    strict=True sums width-d dot products left to right and keeps the
    ascending multiset sum for vertex-indexed sums only.
    """

    name = "float"

    def __init__(self, fmt: FloatFormat, strict: bool = False):
        self.fmt = fmt
        self.strict = strict
        self.T = tables_for(fmt)
        self._const = {}
        self._count_den = {}

    def spec(self):
        return {"float": {"p": self.fmt.p, "q": self.fmt.q}}

    def const(self, x):
        key = x if not isinstance(x, float) else ("f", x)
        if key not in self._const:
            if isinstance(x, float) and x != x:
                self._const[key] = self.T.NAN
            else:
                self._const[key] = self.T.encode(round_real(self.fmt, x))
        return self.T.dtype(self._const[key])

    def matrix(self, W):
        W = np.asarray(W, dtype=object)
        out = np.empty(W.shape, dtype=self.T.dtype)
        for idx, v in np.ndenumerate(W):
            out[idx] = self.const(v)
        return out

    def zeros(self, shape):
        return np.full(shape, self.T.PZ, dtype=self.T.dtype)

    def full(self, shape, value):
        return np.full(shape, self.const(value), dtype=self.T.dtype)

    def from_bits(self, bits):
        bits = np.asarray(bits)
        return np.where(bits != 0, self.T.one, self.T.PZ).astype(self.T.dtype)

    def add(self, a, b):
        return self.T.add(a, b)

    def sub(self, a, b):
        return self.T.sub(a, b)

    def mul(self, a, b):
        return self.T.mul(a, b)

    def div(self, a, b):
        return self.T.div(a, b)

    def neg(self, a):
        return self.T.neg(a)

    def relu(self, x):
        return self.T.relu(x)

    def heaviside(self, x):
        return self.T.heaviside(x)

    def trunc_relu(self, x):
        return self.T.trunc_relu(x)

    def exp(self, x):
        return self.T.exp(x)

    def sqrt_const(self, k: int):
        return self.T.sqrt(self.const(k))

    def msum(self, x, axis=-1):
        return self.T.msum(x, axis)

    def lsum(self, x, axis=-1):
        return self.T.lsum(x, axis)

    def max(self, x, axis=-1):
        # NaN has the largest code, so it propagates
        x = np.asarray(x)
        return np.where(np.any(x == self.T.NAN, axis=axis), self.T.NAN, np.max(x, axis=axis)).astype(self.T.dtype)

    def matmul(self, a, b, strict=None):
        strict = self.strict if strict is None else strict
        prod = self.T.mul(np.expand_dims(a, -1), np.expand_dims(b, -3))
        return self.T.lsum(prod, -2) if strict else self.T.msum(prod, -2)

    def weight_plan(self, Wc):
        """Gather plan for a constant weight matrix of codes (d_in, d_out)."""
        T = self.T
        Wc = np.asarray(Wc)
        nz = (Wc != T.PZ) & (Wc != T.NZ)
        r = max(1, int(nz.sum(0).max()) if nz.size else 1)
        d_out = Wc.shape[1]
        idx = np.zeros((r, d_out), np.int64)
        wp = np.full((r, d_out), T.PZ, T.dtype)
        valid = np.zeros((r, d_out), bool)
        for j in range(d_out):
            rows = np.nonzero(nz[:, j])[0]
            idx[: len(rows), j] = rows
            wp[: len(rows), j] = Wc[rows, j]
            valid[: len(rows), j] = True
        return idx, wp, valid, (Wc == T.PZ).astype(np.int64), (Wc == T.NZ).astype(np.int64), ~nz.any(0)

    def matmul_plan(self, x, plan):
        """x @ W for a constant W, equal to the ascending multiset sum of all products.

        Only nonzero weights are multiplied and summed; products with zero
        weights are ±0 or NaN, which can change only the sign of a zero
        result or turn it into NaN, and both effects are patched in.
        """
        T = self.T
        idx, wp, valid, pzw, nzw, empty = plan
        x = np.asarray(x)
        prod = np.where(valid, T.mul(x[..., idx], wp), T.EMPTY)
        s = T.msum(prod, -2)
        bad = (~T.is_fin[x]).astype(np.int64)
        neg = T.neg_sign[x]
        nan_col = (bad @ (pzw + nzw)) > 0
        pos_zero = ((~neg).astype(np.int64) @ pzw + neg.astype(np.int64) @ nzw) > 0
        s = np.where((s == T.NZ) & pos_zero, T.PZ, s)
        s = np.where(empty & ~pos_zero, T.NZ, s)
        return np.where(nan_col, T.NAN, s).astype(T.dtype)

    def where(self, mask, a, b):
        return np.where(mask, a, b).astype(self.T.dtype)

    def concat(self, items, axis=-1):
        return np.concatenate(items, axis)

    def expand(self, x, axis):
        return np.expand_dims(x, axis)

    def broadcast_to(self, x, shape):
        return np.broadcast_to(x, shape)

    def swapaxes(self, x, a, b):
        return np.swapaxes(x, a, b)

    def take(self, x, idx):
        return x[idx]

    def equal(self, a, b):
        return self.T.canonical(a) == self.T.canonical(b)

    def positive(self, x):
        return (np.asarray(x) > self.T.PZ) & (np.asarray(x) <= self.T.PINF)

    def is_nan(self, x):
        return np.asarray(x) == self.T.NAN

    def empty_fill(self, shape):
        return np.full(shape, self.T.EMPTY, dtype=self.T.dtype)

    def neg_inf_fill(self, shape):
        return np.full(shape, self.T.NINF, dtype=self.T.dtype)

    def to_values(self, x):
        x = np.asarray(x)
        out = np.empty(x.shape, dtype=object)
        for idx, c in np.ndenumerate(x):
            out[idx] = self.T.decode(c)
        return out

    def _nan_rows(self, logits, out):
        nan = np.any(np.asarray(logits) == self.T.NAN, axis=-1, keepdims=True)
        return np.where(nan, self.T.NAN, out).astype(self.T.dtype)

    def softmax(self, logits):
        T = self.T
        b = np.max(logits, axis=-1, keepdims=True)
        e = T.exp(T.sub(logits, b))
        den = T.msum(e, -1)[..., None]
        return self._nan_rows(logits, T.div(e, den))

    def _count_weight(self, k, direct):
        key = (k, direct)
        if key not in self._count_den:
            if direct:
                den = round_real(self.fmt, k)
                if not den.is_finite:
                    den = self.fmt.max_finite
            else:
                den = ones_sum(self.fmt, k)
            self._count_den[key] = self.T.encode(fdiv(self.fmt, self.fmt.one, den))
        return self._count_den[key]

    def average_hard(self, logits, direct):
        T = self.T
        c = T.canonical(logits)
        b = np.max(c, axis=-1, keepdims=True)
        hit = c == b
        cnt = hit.sum(axis=-1)
        w = np.zeros(cnt.shape, dtype=T.dtype)
        for k in np.unique(cnt):
            w[cnt == k] = self._count_weight(int(k), direct)
        out = np.where(hit, w[..., None], T.PZ).astype(T.dtype)
        return self._nan_rows(logits, out)

    def unique_hard(self, logits):
        T = self.T
        c = T.canonical(logits)
        b = np.max(c, axis=-1, keepdims=True)
        hit = c == b
        first = hit & (np.cumsum(hit, axis=-1) == 1)
        out = np.where(first, T.one, T.PZ).astype(T.dtype)
        return self._nan_rows(logits, out)

    def value(self, code):
        return decode(self.fmt, self.T.decode(code))


def backend_from_spec(spec, strict: bool = False) -> Backend:
    if spec == "exact":
        return ExactBackend()
    if spec == "f64":
        return DoubleBackend()
    if isinstance(spec, dict) and "float" in spec:
        return FloatBackend(FloatFormat(int(spec["float"]["p"]), int(spec["float"]["q"])), strict=strict)
    if isinstance(spec, FloatFormat):
        return FloatBackend(spec, strict=strict)
    raise ValueError(f"unknown backend {spec!r}")


EXACT = ExactBackend()
DOUBLE = DoubleBackend()
