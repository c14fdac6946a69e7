"""exp and the attention functions over a float format (scalar reference)."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import mpmath

from .core import (
    NAN,
    POS_INF,
    FloatFormat,
    FloatValue,
    add,
    decode,
    div,
    max_value,
    mul,
    ones_sum,
    round_real,
    sub,
    sum_increasing,
)

EXP_DEGREE = 6
_PREC_BITS = 256


def round_mpf(fmt: FloatFormat, x) -> FloatValue:
    """Round a high-precision mpmath real; exact on its binary expansion."""
    if mpmath.isinf(x):
        return round_real(fmt, float(x))
    man, ex = mpmath.mpf(x).man_exp
    return round_real(fmt, Fraction(int(man)) * (Fraction(2) ** int(ex)))


def _exact_exp_rounded(fmt: FloatFormat, v: FloatValue) -> FloatValue:
    with mpmath.workprec(_PREC_BITS):
        return round_mpf(fmt, mpmath.exp(mpmath.mpf(decode(fmt, v).numerator) / decode(fmt, v).denominator))


@dataclass(frozen=True)
class ExpScreens:
    overflow_from: Fraction  # x >= this -> +inf
    underflow_to: Fraction  # x <= this -> +0
    one_lo: Fraction  # one_lo <= x <= one_hi -> 1
    one_hi: Fraction


def _first_true(items, pred):
    lo, hi = 0, len(items)
    while lo < hi:
        mid = (lo + hi) // 2
        if pred(items[mid]):
            hi = mid
        else:
            lo = mid + 1
    return lo


@lru_cache(maxsize=None)
def exp_screens(fmt: FloatFormat) -> ExpScreens:
    """Per-format cutoffs, found by monotone search over the format's values."""
    vals = fmt.values(with_inf=False)
    finite = [v for v in vals if not (v.is_zero and v.sign)]
    rounded = {}

    def r(v):
        if v not in rounded:
            rounded[v] = _exact_exp_rounded(fmt, v)
        return rounded[v]

    i_over = _first_true(finite, lambda v: r(v) == POS_INF)
    over = decode(fmt, finite[i_over]) if i_over < len(finite) else Fraction(10) ** 9
    i_pos = _first_true(finite, lambda v: not r(v).is_zero)
    under = decode(fmt, finite[i_pos - 1]) if i_pos > 0 else -(Fraction(10) ** 9)
    one = fmt.one
    # round(exp(x)) == 1 on a contiguous interval around 0
    i_lo = _first_true(finite, lambda v: decode(fmt, r(v)) >= 1)
    i_hi = _first_true(finite, lambda v: decode(fmt, r(v)) > 1) - 1
    assert r(finite[i_lo]) == one and r(finite[i_hi]) == one
    return ExpScreens(over, under, decode(fmt, finite[i_lo]), decode(fmt, finite[i_hi]))


@lru_cache(maxsize=None)
def _exp_constants(fmt: FloatFormat):
    with mpmath.workprec(_PREC_BITS):
        ln2 = round_mpf(fmt, mpmath.log(2))
    coeffs = [round_real(fmt, Fraction(1, _fact(i))) for i in range(EXP_DEGREE + 1)]
    return ln2, coeffs


def _fact(i):
    out = 1
    for j in range(2, i + 1):
        out *= j
    return out


def exp(fmt: FloatFormat, x: FloatValue) -> FloatValue:
    if x.is_nan:
        return NAN
    sc = exp_screens(fmt)
    xv = decode(fmt, x)
    if xv >= sc.overflow_from:
        return POS_INF
    if xv <= sc.underflow_to:
        return fmt.zero
    if sc.one_lo <= xv <= sc.one_hi:
        return fmt.one
    ln2, coeffs = _exp_constants(fmt)
    t = div(fmt, x, ln2)
    tv = decode(fmt, t)
    k = tv.numerator // tv.denominator
    kf = round_real(fmt, k)
    r = sub(fmt, x, mul(fmt, kf, ln2))
    acc = coeffs[EXP_DEGREE]
    for c in reversed(coeffs[:EXP_DEGREE]):
        acc = add(fmt, mul(fmt, acc, r), c)
    if not acc.is_finite:
        return acc
    return round_real(fmt, decode(fmt, acc) * Fraction(2) ** k)


def softmax_row(fmt: FloatFormat, xs: Sequence[FloatValue]) -> list:
    if not xs:
        raise ValueError("empty row")
    if any(v.is_nan for v in xs):
        return [NAN] * len(xs)
    b = max_value(fmt, xs)
    ex = [exp(fmt, sub(fmt, v, b)) for v in xs]
    den = sum_increasing(fmt, ex)
    return [div(fmt, e, den) for e in ex]


def argmax_positions(fmt: FloatFormat, xs: Sequence[FloatValue]) -> list:
    b = decode(fmt, max_value(fmt, xs))
    return [i for i, v in enumerate(xs) if decode(fmt, v) == b]


def ah_row(fmt: FloatFormat, xs: Sequence[FloatValue], mode: str = "sum-denominator") -> list:
    if not xs:
        raise ValueError("empty row")
    if any(v.is_nan for v in xs):
        return [NAN] * len(xs)
    idx = argmax_positions(fmt, xs)
    if mode == "sum-denominator":
        den = ones_sum(fmt, len(idx))
    elif mode == "direct-round":
        den = round_real(fmt, len(idx))
        if den == POS_INF:
            den = fmt.max_finite
    else:
        raise ValueError(f"unknown AH mode {mode!r}")
    w = div(fmt, fmt.one, den)
    out = [fmt.zero] * len(xs)
    for i in idx:
        out[i] = w
    return out


def uh_row(xs: Sequence, key=None) -> list:
    """1 at the least index attaining the maximum.

    ``key`` maps entries to comparable numbers (defaults to identity).
    """
    if not xs:
        raise ValueError("empty row")
    vals = [key(v) for v in xs] if key else list(xs)
    best = 0
    for i in range(1, len(vals)):
        if vals[i] > vals[best]:
            best = i
    return [1 if i == best else 0 for i in range(len(vals))]


def uh_row_float(fmt: FloatFormat, xs: Sequence[FloatValue]) -> list:
    if any(v.is_nan for v in xs):
        return [NAN] * len(xs)
    bits = uh_row(xs, key=lambda v: decode(fmt, v))
    return [fmt.one if b else fmt.zero for b in bits]
