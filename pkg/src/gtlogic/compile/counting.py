"""Counting heads for the global modality in float formats.

An underflow head with value weight c * f (f the smallest positive float)
lets every vertex labelled with the child formula attend uniformly to the l
labelled vertices; its output is the sum of l copies of round(w_l * c f),
where w_l is the attention weight.  The output is 0 exactly from some
l = t(c) on, so the head realizes the test "l >= t(c)".  When no single c
realizes t(c) = k, two more heads give a lower and an upper bracket and a
third value distinguishes the counts in between.

Everything here is decided at compile time by simulating the scalar float
operations, and the resulting plan is checked against [l >= k] before any
network is built.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from .. import floatfmt as ff
from .gadgets import CompileError, check_representable


def _frac(fmt, v) -> Fraction:
    return ff.decode(fmt, v)


@lru_cache(maxsize=None)
def big_logit(fmt) -> Fraction:
    """Largest positive format value F with round(F * F) finite (monotone search)."""
    vals = [v for v in fmt.values() if v.is_finite and not v.sign and not v.is_zero]
    vals.sort(key=lambda v: _frac(fmt, v))
    lo, hi = 0, len(vals) - 1
    while lo < hi:
        m = (lo + hi + 1) // 2
        if ff.mul(fmt, vals[m], vals[m]).is_finite:
            lo = m
        else:
            hi = m - 1
    return _frac(fmt, vals[lo])


def row_weight(fmt, kind, count):
    """Attention weight on each of ``count`` maximal positions (others get 0)."""
    if kind in ("softmax", "average-hard"):
        den = ff.ones_sum(fmt, count)
    elif kind == "average-hard-direct":
        den = ff.round_real(fmt, count)
        if not den.is_finite:
            den = fmt.max_finite
    else:
        raise CompileError(f"counting needs softmax or average-hard attention, not {kind!r}")
    return ff.div(fmt, fmt.one, den)


def _stationary(fmt, kind, count) -> bool:
    return row_weight(fmt, kind, count + 1) == row_weight(fmt, kind, count) and (
        kind != "average-hard-direct" or ff.round_real(fmt, count) == fmt.max_finite
        or not ff.round_real(fmt, count).is_finite)


def summand(fmt, kind, count, c):
    return ff.mul(fmt, row_weight(fmt, kind, count), ff.round_real(fmt, c * fmt.unit))


def head_value(fmt, kind, count, c) -> Fraction:
    """Head output on a labelled row when ``count`` vertices are labelled."""
    s = summand(fmt, kind, count, c)
    acc = s
    for _ in range(count - 1):
        nxt = ff.add(fmt, acc, s)
        if nxt == acc:
            break
        acc = nxt
    return _frac(fmt, acc)


def realized(fmt, kind, c, limit=1 << 17) -> Optional[int]:
    """Least l with a zero summand; summands only shrink, so the test is l >= t(c)."""
    count = 1
    while count <= limit:
        if summand(fmt, kind, count, c).is_zero:
            return count
        if _stationary(fmt, kind, count):
            return None
        count += 1
    return None


def case_label(fmt, k) -> str:
    """Rounding case of grade k: parity of k and direction of round(1/k) or round(1/(k-1))."""
    if k == 1:
        return "k1"
    if k % 2 == 0:
        r = _frac(fmt, ff.round_real(fmt, Fraction(1, k)))
        return "even-simple" if r <= Fraction(1, k) else "even-hard"
    r = _frac(fmt, ff.round_real(fmt, Fraction(1, k - 1)))
    return "odd-simple" if r > Fraction(1, k - 1) else "odd-hard"


@dataclass
class CountPlan:
    k: int
    case: str
    mode: str                      # "zero" | "single" | "three-way"
    lo: Optional[tuple] = None     # (c, t(c)) with t(c) = k for single, < k for three-way
    hi: Optional[tuple] = None     # (c, t(c)) with t(c) > k
    dist: Optional[tuple] = None   # (c, lo_value, hi_value)
    checked_up_to: int = 0
    trace: list = field(default_factory=list)
    rounding: str = ""             # direction of round(1/k) against 1/k: "up" | "down" | "exact"

    def witness(self) -> dict:
        out = {"k": self.k, "case": self.case, "mode": self.mode, "rounding": self.rounding,
               "checked_up_to": self.checked_up_to}
        for name in ("lo", "hi", "dist"):
            v = getattr(self, name)
            if v is not None:
                out[name] = [str(x) for x in v]
        return out


def _representable(fmt, c) -> bool:
    try:
        check_representable(fmt, [c * fmt.unit])
        return True
    except CompileError:
        return False


def _bit(fmt, kind, plan: CountPlan, count) -> int:
    """Simulated bit of a labelled row (the zero-count head is positive there)."""
    if plan.mode == "zero":
        return 1
    n_lo = head_value(fmt, kind, count, plan.lo[0]) > 0 if plan.lo else False
    if plan.mode == "single":
        return int(not n_lo)
    n_hi = head_value(fmt, kind, count, plan.hi[0]) > 0
    v = head_value(fmt, kind, count, plan.dist[0])
    inside = plan.dist[1] <= v <= plan.dist[2]
    return int(not n_lo and not (n_hi and not inside))


def plan_count(fmt, kind, k) -> CountPlan:
    if k < 1:
        raise CompileError("grade must be positive")
    if not ff.analysis.construction_capable(fmt):
        raise CompileError(f"{fmt} cannot host the counting construction")
    if kind == "softmax":
        L = ff.round_real(fmt, big_logit(fmt) ** 2)
        if not ff.exp(fmt, ff.negate(L)).is_zero:
            raise CompileError(f"exp(-{_frac(fmt, L)}) does not underflow in {fmt}")
    worst = ff.div(fmt, fmt.one, fmt.max_finite)
    if worst.is_zero:
        raise CompileError(f"1/max underflows in {fmt}; zero-count head unusable")
    case = case_label(fmt, k)
    if k == 1:
        plan = CountPlan(k, case, "zero")
    else:
        prefer = [k // 2] if k % 2 == 0 else [(k - 1) // 2, (k + 1) // 2]
        cands = [c for c in dict.fromkeys(prefer + list(range(1, 2 * k + 3))) if _representable(fmt, c)]
        ts = {c: realized(fmt, kind, c) for c in cands}
        single = [c for c in cands if ts[c] == k]
        if single:
            plan = CountPlan(k, case, "single", lo=(single[0], k))
        else:
            below = [c for c in cands if ts[c] is not None and ts[c] < k]
            above = [c for c in cands if ts[c] is not None and ts[c] > k]
            if not above:
                raise CompileError(f"no head realizes a count above {k} in {fmt}")
            lo_c = max(below, key=lambda c: (ts[c], -c)) if below else None
            hi_c = min(above, key=lambda c: (ts[c], c))
            a = ts[lo_c] if lo_c else 1
            b = ts[hi_c]
            plan = None
            for c in range(1, 8 * k + 8):
                if not _representable(fmt, c):
                    continue
                vals = {ell: head_value(fmt, kind, ell, c) for ell in range(a, b)}
                yes = [v for ell, v in vals.items() if ell >= k]
                no = [v for ell, v in vals.items() if ell < k]
                lo_v, hi_v = min(yes), max(yes)
                if all(not (lo_v <= v <= hi_v) for v in no):
                    plan = CountPlan(k, case, "three-way", lo=(lo_c, a) if lo_c else None,
                                     hi=(hi_c, b), dist=(c, lo_v, hi_v))
                    break
            if plan is None:
                raise CompileError(f"counts {a}..{b - 1} are not separable in {fmt}")
    r = _frac(fmt, ff.round_real(fmt, Fraction(1, k)))
    plan.rounding = "up" if r > Fraction(1, k) else ("down" if r < Fraction(1, k) else "exact")
    top = (plan.hi[1] if plan.hi else (plan.lo[1] if plan.lo else 1)) + 2
    for ell in range(1, top + 1):
        got = _bit(fmt, kind, plan, ell)
        plan.trace.append(got)
        if got != int(ell >= k):
            raise CompileError(f"self-check failed for count {ell} at grade {k} in {fmt}")
    plan.checked_up_to = top
    return plan
