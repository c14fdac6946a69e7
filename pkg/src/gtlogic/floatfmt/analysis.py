"""Format analyzers: saturation threshold, underflow bounds, format choice."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np

from . import core
from .core import FloatFormat, FloatValue
from .tables import tables_for

MAX_EXHAUSTIVE_VALUES = 1 << 16


@dataclass(frozen=True)
class SaturationInfo:
    format: FloatFormat
    threshold: int
    # minimality witness: prefix value s then threshold copies of v; the
    # multiset {s, v x threshold} sums differently once capped at threshold-1
    witness_prefix: Optional[FloatValue] = None
    witness_value: Optional[FloatValue] = None
    single_value_threshold: int = 0


def _guard(fmt: FloatFormat):
    if fmt.n_finite > MAX_EXHAUSTIVE_VALUES:
        raise ValueError("threshold search infeasible")


def stationarity_steps(fmt: FloatFormat) -> np.ndarray:
    """steps[s, v] = additions of v starting from s until the sum stops moving.

    Indexed by value codes of the vectorized engine (all codes up to +inf).
    """
    T = tables_for(fmt)
    codes = np.arange(T.PINF + 1)
    S, V = np.meshgrid(codes, codes, indexing="ij")
    cur = S.astype(T.dtype)
    steps = np.zeros(S.shape, dtype=np.int32)
    active = np.ones(S.shape, dtype=bool)
    while active.any():
        nxt = T.add(cur, V)
        moved = (nxt != cur) & active
        steps += moved
        cur = np.where(moved, nxt, cur)
        active = moved
    return steps


@lru_cache(maxsize=None)
def saturation_threshold(fmt: FloatFormat) -> SaturationInfo:
    """Smallest k with SUM_F(M) = SUM_F(M|k) for every multiset M.

    In the ascending fold the copies of a value v are added to a partial sum
    s built from smaller values, so k is the largest number of additions of v
    that still move s.  Maximizing over every prefix s is sound; restricting
    to s < v (a one-element prefix) shows the bound is attained, which gives
    minimality.  A single-value search alone (s = v) underestimates k.
    """
    _guard(fmt)
    T = tables_for(fmt)
    steps = stationarity_steps(fmt)
    k_all = int(steps.max())
    codes = np.arange(T.PINF + 1)
    S, V = np.meshgrid(codes, codes, indexing="ij")
    attained = np.where((S < V) & (steps == k_all))
    if len(attained[0]) == 0:
        raise AssertionError("saturation bound not attained by a reachable prefix")
    i, j = attained[0][0], attained[1][0]
    single = int((1 + np.diagonal(steps)).max())
    # the fold starts with the first copy, so a lone value needs one more copy
    k = max(k_all, single)
    return SaturationInfo(fmt, k, T.decode(S[i, j]), T.decode(V[i, j]), single)


def underflow_bound(fmt: FloatFormat, f: FloatValue) -> FloatValue:
    """Largest F > 0 with F' * f = 0 for all |F'| <= F (monotone scan)."""
    if not f.is_finite:
        raise ValueError("f must be finite")
    if abs(core.decode(fmt, f)) > Fraction(1, 2):
        raise ValueError("|f| must be at most 1/2")
    best = None
    for n in fmt.grid[1:]:
        v = core.from_n(fmt, n)
        if core.mul(fmt, v, f).is_zero:
            best = v
        else:
            break
    if best is None:
        raise AssertionError("f_min * f does not underflow")
    return best


def underflow_holds(fmt: FloatFormat, f: FloatValue, bound: FloatValue) -> bool:
    """Check F' * f = 0 <=> |F'| <= |bound| over every finite F'."""
    b = core.decode(fmt, bound)
    for v in fmt.values(with_inf=False):
        zero = core.mul(fmt, v, f).is_zero
        if zero != (abs(core.decode(fmt, v)) <= abs(b)):
            return False
    return True


def nonassociativity_witness(fmt: FloatFormat):
    """Some (a, b, c) with (a+b)+c != a+(b+c); searched over small values first."""
    T = tables_for(fmt)
    fin = np.arange(1, T.PINF)
    order = np.argsort(np.abs(T.as_float[fin]), kind="stable")
    cand = fin[order][: min(len(fin), 200)]
    A, B = np.meshgrid(cand, cand, indexing="ij")
    ab = T.add(A, B)
    for c in cand:
        left = T.add(ab, c)
        right = T.add(A, T.add(B, c))
        bad = np.argwhere(T.canonical(left) != T.canonical(right))
        if len(bad):
            i, j = bad[0]
            return T.decode(A[i, j]), T.decode(B[i, j]), T.decode(c)
    return None


# -- format choice -----------------------------------------------------------

def schedule(limit: int = 40):
    """Fixed search order over formats, smallest first.

    q is the least exponent width in {4, 5, ...} with 2^(q-1) >= p + 1, so
    sums of ones saturate below the largest finite value and 1/f_min is a
    product of two representable powers of two.
    """
    out = []
    for p in range(4, limit):
        q = 4 if p <= 5 else 5
        while (1 << (q - 1)) < p + 1:
            q += 1
        out.append(FloatFormat(p, q))
    return out


def integers_exact(fmt: FloatFormat, K: int) -> bool:
    return all(core.decode(fmt, core.round_real(fmt, k)) == k for k in range(1, K + 1))


def reciprocals_distinct(fmt: FloatFormat, K: int) -> bool:
    seen = {core.round_real(fmt, Fraction(1, k)) for k in range(1, K + 1)}
    return len(seen) == K


def construction_capable(fmt: FloatFormat) -> bool:
    """Sums of ones saturate at a finite value whose reciprocal is nonzero."""
    s = core.ones_sum(fmt, 1 << (fmt.p + 2))
    if not s.is_finite:
        return False
    r = core.div(fmt, fmt.one, s)
    return not r.is_zero and (1 << (fmt.bias - 1)) ** 2 >= (1 << fmt.scale_bits)


def choose_format(K: int) -> FloatFormat:
    if K < 1:
        raise ValueError("K must be >= 1")
    for fmt in schedule(limit=64):
        if integers_exact(fmt, K) and reciprocals_distinct(fmt, K) and construction_capable(fmt):
            return fmt
    raise AssertionError("schedule exhausted")
