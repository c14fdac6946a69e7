"""Scalar reference arithmetic for the parametric float formats F(p, q).

A finite value has a sign bit, q exponent bits e and p significand bits s and
denotes (-1)^sign * (s / a) * 2^(e - bias) with a = 2^(p-1), bias = 2^(q-1).
Normalized strings have the leading significand bit set (any exponent),
subnormal strings have it clear and e = 0.  s = 0, e = 1^q is reserved for
the infinities.  NaN has no bit pattern.

Every finite value is an integer multiple N of the unit u = 2^(-bias-p+1);
this module works on those integers wherever it can.  Everything here is
exact (Fraction / int); the vectorized engine in ``tables`` is checked
against it.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Iterable, Sequence, Union

Real = Union[Fraction, int, float]  # floats only ever as +-inf

INF = math.inf


@dataclass(frozen=True)
class FloatFormat:
    p: int
    q: int

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError("p and q must be positive")

    @property
    def a(self) -> int:
        return 1 << (self.p - 1)

    @property
    def bias(self) -> int:
        return 1 << (self.q - 1)

    @property
    def emax(self) -> int:
        return (1 << self.q) - 1

    @property
    def unit(self) -> Fraction:
        # value of the integer grid step: every finite value is N * unit
        return Fraction(1, 1 << (self.bias + self.p - 1))

    @property
    def scale_bits(self) -> int:
        return self.bias + self.p - 1

    @property
    def max_n(self) -> int:
        return (2 * self.a - 1) << self.emax

    @property
    def next_n(self) -> int:
        # first grid value above max_n in unbounded-exponent space
        return (2 * self.a) << self.emax

    @cached_property
    def grid(self) -> tuple:
        """Sorted integers N >= 0 of all non-negative finite values."""
        out = list(range(2 * self.a))
        for e in range(1, self.emax + 1):
            out.extend(s << e for s in range(self.a, 2 * self.a))
        return tuple(out)

    @property
    def n_finite(self) -> int:
        return 2 * len(self.grid)  # counts +0 and -0 separately

    @cached_property
    def f_min(self) -> "FloatValue":
        return from_n(self, 1)

    @cached_property
    def max_finite(self) -> "FloatValue":
        return from_n(self, self.max_n)

    @cached_property
    def one(self) -> "FloatValue":
        return round_real(self, 1)

    @cached_property
    def zero(self) -> "FloatValue":
        return FloatValue.finite(0, 0, 0)

    def values(self, with_inf=True) -> list:
        """All values in ascending order (-0 before +0), NaN excluded."""
        pos = [from_n(self, n) for n in self.grid[1:]]
        neg = [negate(v) for v in reversed(pos)]
        out = neg + [FloatValue.finite(1, 0, 0), FloatValue.finite(0, 0, 0)] + pos
        if with_inf:
            out = [NEG_INF] + out + [POS_INF]
        return out

    def to_json(self):
        return {"p": self.p, "q": self.q}

    def __str__(self):
        return f"F({self.p},{self.q})"


@dataclass(frozen=True)
class FloatValue:
    kind: str  # "fin", "pinf", "ninf", "nan"
    sign: int = 0
    e: int = 0
    s: int = 0

    @staticmethod
    def finite(sign, e, s):
        return FloatValue("fin", sign, e, s)

    @property
    def is_nan(self):
        return self.kind == "nan"

    @property
    def is_inf(self):
        return self.kind in ("pinf", "ninf")

    @property
    def is_finite(self):
        return self.kind == "fin"

    @property
    def is_zero(self):
        return self.kind == "fin" and self.s == 0

    def n(self) -> int:
        """Signed grid integer of a finite value."""
        mag = self.s << self.e
        return -mag if self.sign else mag

    def bits(self, fmt: FloatFormat) -> str:
        if self.kind == "nan":
            return "nan"
        if self.kind == "pinf":
            return "+inf"
        if self.kind == "ninf":
            return "-inf"
        return f"{self.sign}|{self.e:0{fmt.q}b}|{self.s:0{fmt.p}b}"

    def __repr__(self):
        if self.kind != "fin":
            return {"nan": "NaN", "pinf": "+inf", "ninf": "-inf"}[self.kind]
        return f"FloatValue({'-' if self.sign else '+'}s={self.s},e={self.e})"


POS_INF = FloatValue("pinf", 0)
NEG_INF = FloatValue("ninf", 1)
NAN = FloatValue("nan")


def check_valid(fmt: FloatFormat, v: FloatValue) -> None:
    if v.kind != "fin":
        return
    if not (0 <= v.e <= fmt.emax and 0 <= v.s < 2 * fmt.a):
        raise ValueError(f"field out of range: {v!r}")
    if v.s < fmt.a and v.e != 0:
        raise ValueError(f"not normalized or subnormal: {v!r}")


def parse_bits(fmt: FloatFormat, text: str) -> FloatValue:
    t = text.strip()
    if t == "nan":
        return NAN
    if t == "+inf":
        return POS_INF
    if t == "-inf":
        return NEG_INF
    parts = t.split("|")
    if len(parts) != 3 or len(parts[1]) != fmt.q or len(parts[2]) != fmt.p:
        raise ValueError(f"bad bit string for {fmt}: {text!r}")
    sign, e, s = int(parts[0], 2), int(parts[1], 2), int(parts[2], 2)
    if e == fmt.emax and s == 0:
        return NEG_INF if sign else POS_INF
    v = FloatValue.finite(sign, e, s)
    check_valid(fmt, v)
    return v


def from_n(fmt: FloatFormat, n: int, neg_zero: bool = False) -> FloatValue:
    """Value for a signed grid integer that is known to be representable."""
    sign = 1 if (n < 0 or (n == 0 and neg_zero)) else 0
    m = abs(n)
    if m < 2 * fmt.a:
        return FloatValue.finite(sign, 0, m)
    e = m.bit_length() - fmt.p
    if (m >> e) << e != m or e > fmt.emax:
        raise ValueError(f"{n} is not on the grid of {fmt}")
    return FloatValue.finite(sign, e, m >> e)


def negate(v: FloatValue) -> FloatValue:
    if v.kind == "nan":
        return v
    if v.kind == "pinf":
        return NEG_INF
    if v.kind == "ninf":
        return POS_INF
    return FloatValue.finite(1 - v.sign, v.e, v.s)


def decode(fmt: FloatFormat, v: FloatValue) -> Real:
    if v.kind == "nan":
        raise ValueError("no real denotation")
    if v.kind == "pinf":
        return INF
    if v.kind == "ninf":
        return -INF
    return v.n() * fmt.unit


def _significand_parity(fmt: FloatFormat, n: int) -> int:
    if n < 2 * fmt.a:
        return n & 1
    return (n >> (n.bit_length() - fmt.p)) & 1


def round_real(fmt: FloatFormat, x: Real) -> FloatValue:
    """Nearest value, ties to even, unbounded exponent then overflow to inf.

    Works by bracketing x between neighbouring grid integers with bisect on
    the enumerated grid, which is deliberately a different route from the
    shift-based rounding of the vectorized engine.
    """
    if isinstance(x, float):
        if math.isnan(x):
            return NAN
        if math.isinf(x):
            return POS_INF if x > 0 else NEG_INF
        x = Fraction(x)
    x = Fraction(x)
    if x == 0:
        return FloatValue.finite(0, 0, 0)
    neg = x < 0
    y = abs(x) / fmt.unit
    if y >= fmt.next_n:
        return NEG_INF if neg else POS_INF
    grid = fmt.grid
    i = bisect.bisect_left(grid, y)
    if i < len(grid) and grid[i] == y:
        return from_n(fmt, -grid[i] if neg else grid[i], neg_zero=neg)
    lo = grid[i - 1]
    hi = grid[i] if i < len(grid) else fmt.next_n
    dlo, dhi = y - lo, hi - y
    if dlo < dhi:
        pick = lo
    elif dhi < dlo:
        pick = hi
    else:
        pick = hi if (_significand_parity(fmt, hi) == 0 and _significand_parity(fmt, lo) == 1) else lo
    if pick >= fmt.next_n:
        return NEG_INF if neg else POS_INF
    return from_n(fmt, -pick if neg else pick, neg_zero=neg)


def _sign_of(v: FloatValue) -> int:
    return v.sign


def add(fmt: FloatFormat, a: FloatValue, b: FloatValue) -> FloatValue:
    if a.is_nan or b.is_nan:
        return NAN
    if a.is_inf or b.is_inf:
        if a.is_inf and b.is_inf and a.kind != b.kind:
            return NAN
        return a if a.is_inf else b
    exact = a.n() + b.n()
    if exact == 0:
        # -0 + -0 keeps its sign; any other exact zero is a cancellation
        if a.is_zero and b.is_zero and a.sign and b.sign:
            return FloatValue.finite(1, 0, 0)
        return FloatValue.finite(0, 0, 0)
    return round_real(fmt, exact * fmt.unit)


def sub(fmt: FloatFormat, a: FloatValue, b: FloatValue) -> FloatValue:
    return add(fmt, a, negate(b))


def mul(fmt: FloatFormat, a: FloatValue, b: FloatValue) -> FloatValue:
    if a.is_nan or b.is_nan:
        return NAN
    sign = _sign_of(a) ^ _sign_of(b)
    if a.is_inf or b.is_inf:
        if a.is_zero or b.is_zero:
            return NAN
        return NEG_INF if sign else POS_INF
    if a.is_zero or b.is_zero:
        return FloatValue.finite(sign, 0, 0)
    return round_real(fmt, decode(fmt, a) * decode(fmt, b))


def div(fmt: FloatFormat, a: FloatValue, b: FloatValue) -> FloatValue:
    if a.is_nan or b.is_nan:
        return NAN
    sign = _sign_of(a) ^ _sign_of(b)
    if a.is_inf:
        if b.is_inf:
            return NAN
        return NEG_INF if sign else POS_INF
    if b.is_inf:
        return FloatValue.finite(sign, 0, 0)
    if b.is_zero:
        if a.is_zero:
            return NAN
        return NEG_INF if sign else POS_INF
    if a.is_zero:
        return FloatValue.finite(sign, 0, 0)
    return round_real(fmt, decode(fmt, a) / decode(fmt, b))


def sqrt(fmt: FloatFormat, a: FloatValue) -> FloatValue:
    if a.is_nan:
        return NAN
    if a.is_zero:
        return a
    if a.kind == "pinf":
        return a
    if a.sign:
        return NAN
    x = decode(fmt, a)
    # bracket sqrt(x) on the grid by comparing squares exactly
    target = x / (fmt.unit * fmt.unit)
    grid = fmt.grid
    lo_i = bisect.bisect_right(_squares(fmt), target) - 1
    lo = grid[lo_i]
    if lo * lo == target:
        return from_n(fmt, lo)
    hi = grid[lo_i + 1] if lo_i + 1 < len(grid) else fmt.next_n
    mid = Fraction(lo + hi, 2)
    if target < mid * mid:
        pick = lo
    elif target > mid * mid:
        pick = hi
    else:
        pick = hi if _significand_parity(fmt, hi) == 0 else lo
    if pick >= fmt.next_n:
        return POS_INF
    return from_n(fmt, pick)


@lru_cache(maxsize=None)
def _squares(fmt: FloatFormat) -> tuple:
    return tuple(g * g for g in fmt.grid)


def arith(fmt: FloatFormat, op: str, a: FloatValue, b: FloatValue) -> FloatValue:
    fn = {"add": add, "sub": sub, "mul": mul, "div": div}[op]
    return fn(fmt, a, b)


def sort_key(fmt: FloatFormat, v: FloatValue):
    """Ascending value order with -0 before +0."""
    x = decode(fmt, v)
    return (x, 0 if (v.is_zero and v.sign) else 1)


def sum_increasing(fmt: FloatFormat, m: Iterable[FloatValue]) -> FloatValue:
    items = list(m)
    if not items:
        raise ValueError("empty multiset")
    if any(v.is_nan for v in items):
        return NAN
    items.sort(key=lambda v: sort_key(fmt, v))
    acc = items[0]
    for v in items[1:]:
        acc = add(fmt, acc, v)
    return acc


def max_value(fmt: FloatFormat, xs: Sequence[FloatValue]) -> FloatValue:
    if any(v.is_nan for v in xs):
        return NAN
    return max(xs, key=lambda v: sort_key(fmt, v))


def equal(fmt: FloatFormat, a: FloatValue, b: FloatValue) -> bool:
    """Numeric equality: -0 == +0, NaN equals nothing."""
    if a.is_nan or b.is_nan:
        return False
    return decode(fmt, a) == decode(fmt, b)


@lru_cache(maxsize=None)
def _ones_sum(fmt: FloatFormat, n: int) -> FloatValue:
    acc = fmt.one
    for _ in range(n - 1):
        nxt = add(fmt, acc, fmt.one)
        if nxt == acc:
            break
        acc = nxt
    return acc


def ones_sum(fmt: FloatFormat, n: int) -> FloatValue:
    """SUM_F of n copies of 1 (n >= 1)."""
    return _ones_sum(fmt, n)
