"""Vectorized exact rationals with +-inf and NaN.

Values are numerator/denominator integer arrays, normalized so that
den > 0 and gcd(num, den) = 1 for finite entries; +inf is 1/0, -inf is -1/0
and NaN is 0/0.  Arithmetic runs on int64 while magnitude bounds prove it
safe and switches to Python integers (object arrays) otherwise, so results
are always exact.
"""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

_SAFE = 1 << 62


def _maxabs(a) -> int:
    return int(np.max(np.abs(a))) if a.size else 0


def _is_obj(*arrs) -> bool:
    return any(a.dtype == object for a in arrs)


def _lift(*arrs):
    return tuple(a.astype(object) for a in arrs)


def _lower(a):
    """Back to int64 when every entry fits comfortably."""
    if a.dtype == object and (a.size == 0 or _maxabs(a) < (1 << 40)):
        return a.astype(np.int64)
    return a


class RatArray:
    __slots__ = ("num", "den")

    def __init__(self, num, den):
        self.num = np.asarray(num)
        self.den = np.asarray(den)
        if self.num.dtype != object:
            self.num = self.num.astype(np.int64)
        if self.den.dtype != object:
            self.den = self.den.astype(np.int64)

    # -- construction ---------------------------------------------------------
    @classmethod
    def from_values(cls, values) -> "RatArray":
        """From an array-like of Fraction / int / float (incl. +-inf, nan)."""
        obj = np.asarray(values, dtype=object)
        num = np.empty(obj.shape, dtype=object)
        den = np.empty(obj.shape, dtype=object)
        for idx, v in np.ndenumerate(obj):
            if isinstance(v, float) and (v != v or v in (float("inf"), float("-inf"))):
                num[idx], den[idx] = (0 if v != v else (1 if v > 0 else -1)), 0
            else:
                f = Fraction(v)
                num[idx], den[idx] = f.numerator, f.denominator
        return cls(_lower(num), _lower(den))

    @classmethod
    def zeros(cls, shape) -> "RatArray":
        return cls(np.zeros(shape, np.int64), np.ones(shape, np.int64))

    @classmethod
    def full(cls, shape, value) -> "RatArray":
        v = cls.from_values([value])
        return cls(np.broadcast_to(v.num[0], shape).copy(), np.broadcast_to(v.den[0], shape).copy())

    def to_values(self) -> np.ndarray:
        out = np.empty(self.shape, dtype=object)
        for idx in np.ndindex(*self.shape):
            n, d = int(self.num[idx]), int(self.den[idx])
            if d == 0:
                out[idx] = float("nan") if n == 0 else float("inf") * n
            else:
                out[idx] = Fraction(n, d)
        return out

    # -- structure ------------------------------------------------------------
    @property
    def shape(self):
        return self.num.shape

    @property
    def ndim(self):
        return self.num.ndim

    def __getitem__(self, idx) -> "RatArray":
        return RatArray(self.num[idx], self.den[idx])

    def reshape(self, *shape) -> "RatArray":
        return RatArray(self.num.reshape(*shape), self.den.reshape(*shape))

    def expand(self, axis) -> "RatArray":
        return RatArray(np.expand_dims(self.num, axis), np.expand_dims(self.den, axis))

    def broadcast_to(self, shape) -> "RatArray":
        return RatArray(np.broadcast_to(self.num, shape), np.broadcast_to(self.den, shape))

    def moveaxis(self, a, b) -> "RatArray":
        return RatArray(np.moveaxis(self.num, a, b), np.moveaxis(self.den, a, b))

    def swapaxes(self, a, b) -> "RatArray":
        return RatArray(np.swapaxes(self.num, a, b), np.swapaxes(self.den, a, b))

    @staticmethod
    def concat(items, axis=-1) -> "RatArray":
        obj = _is_obj(*[x.num for x in items], *[x.den for x in items])
        conv = (lambda a: a.astype(object)) if obj else (lambda a: a)
        return RatArray(np.concatenate([conv(x.num) for x in items], axis),
                        np.concatenate([conv(x.den) for x in items], axis))

    @staticmethod
    def where(mask, a: "RatArray", b: "RatArray") -> "RatArray":
        n1, d1, n2, d2 = a.num, a.den, b.num, b.den
        if _is_obj(n1, d1, n2, d2):
            n1, d1, n2, d2 = _lift(n1, d1, n2, d2)
        return RatArray(np.where(mask, n1, n2), np.where(mask, d1, d2))

    # -- predicates -------------------------------------------------------------
    def is_nan(self):
        return (self.den == 0) & (self.num == 0)

    def is_finite(self):
        return self.den != 0

    def positive(self):
        return self.num > 0

    def negative(self):
        return self.num < 0

    def equal(self, other: "RatArray"):
        return (self.num == other.num) & (self.den == other.den)

    def all_integer(self) -> bool:
        return bool(np.all(self.den == 1))


def _normalize(num, den) -> RatArray:
    num, den = np.asarray(num), np.asarray(den)
    fin = den != 0
    if num.dtype == object or den.dtype == object:
        num, den = _lift(num, den)
    g = np.gcd(num, den)
    g = np.where(fin & (g != 0), g, 1)
    num = num // g
    den = den // g
    # specials: sign-only numerator
    num = np.where(fin, num, np.sign(num))
    return RatArray(_lower(num), _lower(den))


def _prep_mul(a, b):
    """Return a, b cast so that a * b cannot overflow."""
    if a.dtype == object or b.dtype == object:
        return _lift(a, b)
    if _maxabs(a) * _maxabs(b) >= _SAFE:
        return _lift(a, b)
    return a, b


def add(x: RatArray, y: RatArray) -> RatArray:
    xn, xd, yn, yd = x.num, x.den, y.num, y.den
    if not _is_obj(xn, xd, yn, yd):
        bx, by = _maxabs(xn), _maxabs(yn)
        dx, dy = _maxabs(xd), _maxabs(yd)
        if bx * dy + by * dx >= _SAFE or dx * dy >= _SAFE:
            xn, xd, yn, yd = _lift(xn, xd, yn, yd)
    else:
        xn, xd, yn, yd = _lift(xn, xd, yn, yd)
    if np.all(xd == 1) and np.all(yd == 1):
        return RatArray(_lower(xn + yn), np.ones(np.broadcast_shapes(xn.shape, yn.shape), np.int64))
    num = xn * yd + yn * xd
    den = xd * yd
    out = _normalize(num, den)
    xf, yf = xd != 0, yd != 0
    if np.all(xf) and np.all(yf):
        return out
    # specials: inf + finite = inf, inf + -inf = nan, nan absorbs
    xs = np.where(xf, 0, np.sign(xn) + 2 * (xn == 0))  # 2 marks nan
    ys = np.where(yf, 0, np.sign(yn) + 2 * (yn == 0))
    xs, ys = np.broadcast_arrays(xs, ys)
    nan = (xs == 2) | (ys == 2) | ((xs * ys) == -1)
    inf_sign = np.where(xs != 0, xs, ys)
    spec = ~(np.broadcast_to(xf, nan.shape) & np.broadcast_to(yf, nan.shape))
    num = np.where(spec, np.where(nan, 0, inf_sign), out.num)
    den = np.where(spec, 0, out.den)
    return RatArray(num, den)


def neg(x: RatArray) -> RatArray:
    return RatArray(-x.num, x.den)


def sub(x: RatArray, y: RatArray) -> RatArray:
    return add(x, neg(y))


def mul(x: RatArray, y: RatArray) -> RatArray:
    xn, yn = _prep_mul(x.num, y.num)
    xd, yd = _prep_mul(x.den, y.den)
    if xn.dtype == object or xd.dtype == object:
        xn, yn, xd, yd = _lift(xn, yn, xd, yd)
    out = _normalize(xn * yn, xd * yd)
    if np.all(x.den != 0) and np.all(y.den != 0):
        return out
    # 0 * inf -> nan; sign(inf) * sign(other) otherwise
    special = (np.asarray(xd) == 0) | (np.asarray(yd) == 0)
    nan = (x.is_nan() | y.is_nan()) | (special & ((x.num == 0) | (y.num == 0)))
    sign = np.sign(x.num) * np.sign(y.num)
    num = np.where(special, np.where(nan, 0, sign), out.num)
    den = np.where(special, 0, out.den)
    return RatArray(num, den)


def reciprocal(x: RatArray) -> RatArray:
    fin = x.den != 0
    zero = fin & (x.num == 0)
    sign = np.sign(x.num)
    num = np.where(fin & ~zero, sign * x.den, np.where(zero, 1, 0))
    den = np.where(fin & ~zero, np.abs(x.num), np.where(zero, 0, np.where(x.num == 0, 0, 1)))
    # +-inf -> 0 (den 1); nan stays 0/0
    return RatArray(num, den)


def div(x: RatArray, y: RatArray) -> RatArray:
    return mul(x, reciprocal(y))


def compare(x: RatArray, y: RatArray):
    """Sign of x - y (nan compares as 0)."""
    d = sub(x, y)
    return np.sign(d.num)


def maximum(x: RatArray, y: RatArray) -> RatArray:
    c = compare(x, y)
    out = RatArray.where(c >= 0, x, y)
    nan = x.is_nan() | y.is_nan()
    if np.any(nan):
        out = RatArray(np.where(nan, 0, out.num), np.where(nan, 0, out.den))
    return out


def total(x: RatArray, axis=-1) -> RatArray:
    """Exact sum along an axis (order-free)."""
    x = x.moveaxis(axis, -1)
    k = x.shape[-1]
    if k == 0:
        return RatArray.zeros(x.shape[:-1])
    if x.num.dtype != object and x.den.dtype != object and np.all(x.den == 1):
        if _maxabs(x.num) * k < _SAFE:
            return RatArray(x.num.sum(axis=-1), np.ones(x.shape[:-1], np.int64))
    acc = x[..., 0]
    for j in range(1, k):
        acc = add(acc, x[..., j])
    return acc


def _lcm_fold(den, axis):
    """Least common multiple along an axis, exact."""
    den = np.moveaxis(den, axis, -1)
    if den.shape[-1] == 0:
        return np.ones(den.shape[:-1], np.int64)
    acc = den[..., 0]
    for j in range(1, den.shape[-1]):
        nxt = den[..., j]
        if acc.dtype != object and nxt.dtype != object and _maxabs(acc) * _maxabs(nxt) >= _SAFE:
            acc, nxt = _lift(acc, nxt)
        acc = np.lcm(acc, nxt)
    return acc


def matmul(a: RatArray, b: RatArray) -> RatArray:
    """a (..., i, k) @ b (..., k, j) with exact sums."""
    if np.any(a.den == 0) or np.any(b.den == 0):
        prod = mul(a.expand(-1), b.expand(-3))  # (..., i, k, j)
        return total(prod, axis=-2)
    la = _lcm_fold(a.den, -1)  # (..., i)
    lb = _lcm_fold(b.den, -2)  # (..., j)
    an = a.num * (la[..., None] // a.den)
    bn = b.num * (lb[..., None, :] // b.den)
    k = a.shape[-1]
    if an.dtype != object and bn.dtype != object and _maxabs(an) * _maxabs(bn) * max(k, 1) >= _SAFE:
        an, bn = _lift(an, bn)
    if an.dtype == object or bn.dtype == object:
        an, bn = _lift(an, bn)
    num = np.matmul(an, bn)
    la_, lb_ = la[..., :, None], lb[..., None, :]
    if la_.dtype != object and lb_.dtype != object and _maxabs(la_) * _maxabs(lb_) >= _SAFE:
        la_, lb_ = _lift(la_, lb_)
    den = la_ * lb_
    den = np.broadcast_to(den, num.shape)
    return _normalize(num, den)


def is_square(n: int) -> bool:
    if n < 0:
        return False
    r = math.isqrt(n)
    return r * r == n
