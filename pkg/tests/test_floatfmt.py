import random
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gtlogic.floatfmt import (
    NAN,
    NEG_INF,
    POS_INF,
    FloatFormat,
    add,
    ah_row,
    choose_format,
    decode,
    div,
    exp,
    mul,
    nonassociativity_witness,
    ones_sum,
    parse_bits,
    round_real,
    saturation_threshold,
    softmax_row,
    sqrt,
    sub,
    sum_increasing,
    tables_for,
    uh_row,
    underflow_bound,
    underflow_holds,
)
from gtlogic.floatfmt.core import sort_key
from gtlogic.floatfmt.functions import _exact_exp_rounded

F43 = FloatFormat(4, 3)
F65 = FloatFormat(6, 5)
F54 = FloatFormat(5, 4)


def bitstring_table(fmt):
    """Oracle: decode straight from the bit-string definition."""
    out = {}
    a, bias = 1 << (fmt.p - 1), 1 << (fmt.q - 1)
    for sign in (0, 1):
        for e in range(1 << fmt.q):
            for s in range(1 << fmt.p):
                if s == 0 and e == (1 << fmt.q) - 1:
                    continue
                if s < a and e != 0:
                    continue
                bits = f"{sign}|{e:0{fmt.q}b}|{s:0{fmt.p}b}"
                out[bits] = (-1) ** sign * Fraction(s, a) * Fraction(2) ** (e - bias)
    return out


def test_decode_examples():
    assert decode(F43, parse_bits(F43, "0|000|0000")) == 0
    assert decode(F43, parse_bits(F43, "0|100|1000")) == 1
    assert decode(F43, parse_bits(F43, "0|000|0001")) == Fraction(1, 128)


def test_decode_matches_bitstring_definition():
    table = bitstring_table(F43)
    assert len(table) == 144
    for bits, val in table.items():
        v = parse_bits(F43, bits)
        assert decode(F43, v) == val
        assert v.bits(F43) == bits
    assert decode(F43, F43.max_finite) == 15


def test_decode_nan_raises():
    with pytest.raises(ValueError, match="no real denotation"):
        decode(F43, NAN)


def test_round_examples():
    assert decode(F43, round_real(F43, 1)) == 1
    r = round_real(F43, Fraction(1, 256))
    assert r.is_zero and r.sign == 0
    assert round_real(F43, Fraction(2) ** 40) == POS_INF
    assert round_real(F43, Fraction(31, 2)) == POS_INF  # 15.5 ties to 16
    assert round_real(F43, -Fraction(1, 300)).sign == 1  # underflow keeps sign


def test_representables_are_fixed_points():
    for fmt in (F43, F54):
        for v in fmt.values():
            if v.is_zero:
                continue
            assert round_real(fmt, decode(fmt, v)) == v


def test_round_monotone_over_midpoints():
    vals = [decode(F43, v) for v in F43.values(with_inf=False)]
    pts = sorted(set(vals))
    probes = []
    for x, y in zip(pts, pts[1:]):
        mid = (x + y) / 2
        probes += [x, mid - Fraction(1, 10**6), mid, mid + Fraction(1, 10**6)]
    probes += [Fraction(15) + Fraction(k, 8) for k in range(1, 12)]
    out = [decode(F43, round_real(F43, x)) for x in sorted(probes)]
    assert all(a <= b for a, b in zip(out, out[1:]))


def test_round_ties_to_even_midpoint_table():
    # brute force: the nearer of the two neighbours, and on ties the one
    # with an even last significand bit
    pos = F43.values(with_inf=False)
    pos = [v for v in pos if not v.sign and not v.is_zero]
    prev = F43.zero
    for v in pos:
        mid = (decode(F43, prev) + decode(F43, v)) / 2
        r = round_real(F43, mid)
        even = prev if prev.s % 2 == 0 else v
        assert r == even
        prev = v


def test_arith_examples():
    fm = F43.f_min
    assert mul(F43, fm, fm).is_zero
    for v in F43.values(with_inf=False):
        if not v.is_zero:
            assert add(F43, v, F43.zero) == v
    assert add(F43, POS_INF, NEG_INF).is_nan
    assert mul(F43, POS_INF, F43.zero).is_nan
    assert div(F43, POS_INF, POS_INF).is_nan
    assert div(F43, F43.zero, F43.zero).is_nan
    assert div(F43, F43.one, F43.zero) == POS_INF
    assert div(F43, F43.one, parse_bits(F43, "1|000|0000")) == NEG_INF
    assert sqrt(F43, round_real(F43, -1)).is_nan
    assert decode(F43, sqrt(F43, round_real(F43, 4))) == 2


def test_signed_zero_policy():
    nz = parse_bits(F43, "1|000|0000")
    one = F43.one
    assert add(F43, nz, nz) == nz
    assert add(F43, nz, F43.zero) == F43.zero
    assert sub(F43, one, one) == F43.zero  # cancellation
    assert mul(F43, nz, one) == nz  # exact -0 keeps its sign
    assert mul(F43, round_real(F43, -Fraction(1, 8)), F43.f_min).sign == 1


@pytest.mark.parametrize("fmt", [FloatFormat(3, 2), F43, F54])
def test_vectorized_engine_matches_scalar_exhaustively(fmt):
    T = tables_for(fmt)
    vals = fmt.values() + [NAN]
    codes = np.array([T.encode(v) for v in vals])
    A, B = np.meshgrid(codes, codes, indexing="ij")
    for scalar, vec in ((add, T.add), (mul, T.mul), (div, T.div)):
        got = vec(A, B)
        for i, x in enumerate(vals):
            for j, y in enumerate(vals):
                assert T.decode(got[i, j]) == scalar(fmt, x, y), (scalar.__name__, x, y)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10**6), st.integers(0, 10**6))
def test_vectorized_engine_matches_scalar_f65(i, j):
    T = tables_for(F65)
    vals = F65.values() + [NAN]
    x, y = vals[i % len(vals)], vals[j % len(vals)]
    cx, cy = np.array([T.encode(x)]), np.array([T.encode(y)])
    assert T.decode(T.add(cx, cy)[0]) == add(F65, x, y)
    assert T.decode(T.mul(cx, cy)[0]) == mul(F65, x, y)
    assert T.decode(T.div(cx, cy)[0]) == div(F65, x, y)


def test_engine_without_tables_matches():
    # the direct path (used for large formats) against the table path
    T = tables_for(F54)
    rng = np.random.default_rng(3)
    a = rng.integers(0, T.NAN + 1, 5000)
    b = rng.integers(0, T.NAN + 1, 5000)
    assert np.array_equal(T._add_direct(a, b), T.add(a, b))
    assert np.array_equal(T._mul_direct(a, b), T.mul(a, b))


def test_add_mul_commutative_exhaustive():
    T = tables_for(F43)
    assert np.array_equal(T._add, T._add.T)
    assert np.array_equal(T._mul, T._mul.T)


def test_nonassociativity_witness_f43():
    a, b, c = nonassociativity_witness(F43)
    left = add(F43, add(F43, a, b), c)
    right = add(F43, a, add(F43, b, c))
    assert decode(F43, left) != decode(F43, right)


def test_sum_increasing_examples():
    assert sum_increasing(F43, [F43.one]) == F43.one
    m1 = round_real(F43, -1)
    assert sum_increasing(F43, [m1, F43.one]) == F43.zero
    with pytest.raises(ValueError):
        sum_increasing(F43, [])
    assert sum_increasing(F43, [F43.one, NAN]).is_nan


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 141), min_size=1, max_size=12), st.randoms())
def test_sum_increasing_permutation_invariant(idx, rnd):
    vals = F43.values(with_inf=False)
    m = [vals[i] for i in idx]
    shuffled = list(m)
    rnd.shuffle(shuffled)
    assert sum_increasing(F43, m) == sum_increasing(F43, shuffled)


def test_signed_zero_order_irrelevant_in_fold():
    nz = parse_bits(F43, "1|000|0000")
    for v in F43.values(with_inf=False):
        a = add(F43, add(F43, v, nz), F43.zero)
        b = add(F43, add(F43, v, F43.zero), nz)
        assert a == b


def fold_oracle(fmt, items):
    """Independent fold: sort by exact value, -0 first, add left to right."""
    items = sorted(items, key=lambda v: sort_key(fmt, v))
    acc = items[0]
    for v in items[1:]:
        acc = add(fmt, acc, v)
    return acc


def capped(items, k):
    counts = {}
    out = []
    for v in items:
        counts[v] = counts.get(v, 0) + 1
        if counts[v] <= k:
            out.append(v)
    return out


# frozen from the stationarity search (see scripts/format_report.py)
SATURATION = {FloatFormat(4, 3): 47, FloatFormat(5, 4): 95, FloatFormat(4, 4): 47}


@pytest.mark.parametrize("fmt", list(SATURATION))
def test_saturation_threshold_frozen(fmt):
    info = saturation_threshold(fmt)
    assert info.threshold == SATURATION[fmt]
    assert info.single_value_threshold < info.threshold


def test_saturation_minimality_witness():
    info = saturation_threshold(F43)
    k = info.threshold
    m = [info.witness_prefix] + [info.witness_value] * k
    assert fold_oracle(F43, m) != fold_oracle(F43, capped(m, k - 1))
    assert fold_oracle(F43, m + [info.witness_value] * 5) == fold_oracle(F43, m)


def test_saturation_single_value_example():
    k = saturation_threshold(F43).threshold
    fm = F43.f_min
    assert sum_increasing(F43, [fm] * (k + 5)) == sum_increasing(F43, [fm] * k)


@pytest.mark.parametrize("fmt", [F43, F54])
def test_saturation_random_multisets(fmt):
    k = saturation_threshold(fmt).threshold
    rng = random.Random(11)
    vals = fmt.values(with_inf=False)
    for _ in range(300):
        distinct = rng.sample(vals, rng.randint(1, 4))
        m = []
        for v in distinct:
            m += [v] * rng.randint(1, 3 * k)
        assert fold_oracle(fmt, m) == fold_oracle(fmt, capped(m, k))


def test_exp_examples():
    assert exp(F43, F43.zero) == F43.one
    assert exp(F43, NEG_INF).is_zero
    assert exp(F43, POS_INF) == POS_INF
    assert exp(F43, NAN).is_nan
    with mpmath.workprec(200):
        e_true = round_real(F65, Fraction(str(mpmath.nstr(mpmath.e, 60))))
    vals = F65.values()
    got = exp(F65, F65.one)
    assert abs(vals.index(got) - vals.index(e_true)) <= 1


@pytest.mark.parametrize("fmt", [F43, FloatFormat(4, 4), F65])
def test_exp_within_one_ulp_on_unit_interval(fmt):
    vals = fmt.values()
    for v in fmt.values(with_inf=False):
        if abs(decode(fmt, v)) > 1 or v.is_zero:
            continue
        a, b = exp(fmt, v), _exact_exp_rounded(fmt, v)
        assert abs(vals.index(a) - vals.index(b)) <= 1


def test_exp_screens_match_exact_rounding():
    for v in F43.values(with_inf=False):
        exact = _exact_exp_rounded(F43, v)
        if exact == POS_INF or exact.is_zero or exact == F43.one:
            assert exp(F43, v) == exact


def row(fmt, xs):
    return [round_real(fmt, x) for x in xs]


def test_softmax_all_equal_row():
    for n in range(1, 8):
        out = softmax_row(F65, row(F65, [3] * n))
        expect = div(F65, F65.one, ones_sum(F65, n))
        assert out == [expect] * n


def test_softmax_large_negative_logit():
    L = round_real(F65, -200)
    out = softmax_row(F65, [F65.zero, L])
    assert out[0] == F65.one and out[1].is_zero


def test_softmax_nan_propagates():
    assert all(v.is_nan for v in softmax_row(F43, [F43.one, NAN]))


def test_softmax_worked_example_f65():
    out = [float(decode(F65, v)) for v in softmax_row(F65, row(F65, [5, 7, 1, 7]))]
    assert out == pytest.approx([0.063, 0.468, 0.001, 0.468], abs=2e-3)


def test_softmax_stationary_beyond_saturation():
    fmt = FloatFormat(4, 4)
    k = saturation_threshold(fmt).threshold
    base = row(fmt, [0, -1, 2, 0])
    dup = base + [base[0]] * (k + 3)
    more = dup + [base[0]] * 4
    a, b = softmax_row(fmt, dup), softmax_row(fmt, more)
    assert a[:4] == b[:4]


def test_ah_examples():
    out = ah_row(F65, row(F65, [5, 7, 1, 7]))
    assert [decode(F65, v) for v in out] == [0, Fraction(1, 2), 0, Fraction(1, 2)]
    assert ah_row(F65, row(F65, [4])) == [F65.one]
    direct = ah_row(F65, row(F65, [5, 7, 1, 7]), mode="direct-round")
    assert direct == out


def test_ah_stationary_beyond_saturation():
    k = saturation_threshold(F43).threshold
    base = row(F43, [1, 3, 3])
    a = ah_row(F43, base + [base[1]] * k)
    b = ah_row(F43, base + [base[1]] * (k + 7))
    assert a[:3] == b[:3]


def test_ah_direct_round_clamps():
    # 16 ones overflow F(4,3), direct-round clamps the count to max finite
    out = ah_row(F43, [F43.one] * 20, mode="direct-round")
    assert out[0] == div(F43, F43.one, F43.max_finite)


def test_uh_examples():
    assert uh_row([-1, 5, 10, 0, -2, 5]) == [0, 0, 1, 0, 0, 0]
    assert uh_row([7, 7, 7]) == [1, 0, 0]
    assert uh_row([3]) == [1]


def test_underflow_examples():
    assert decode(F43, underflow_bound(F43, F43.f_min)) >= decode(F43, F43.f_min)
    half = round_real(F43, Fraction(1, 2))
    assert underflow_bound(F43, half) == F43.f_min


def test_underflow_characterization_exhaustive():
    for f in F43.values(with_inf=False):
        x = decode(F43, f)
        if x == 0 or abs(x) > Fraction(1, 2):
            continue
        assert underflow_holds(F43, f, underflow_bound(F43, f))


@pytest.mark.parametrize("fmt", [F43, F54])
def test_half_k_fmin_rule(fmt):
    # |F| <= 1/k  <=>  F * (k/2) f_min = 0, for even k
    for k in (2, 4, 6):
        w = round_real(fmt, Fraction(k, 2) * decode(fmt, fmt.f_min))
        for v in fmt.values(with_inf=False):
            assert mul(fmt, v, w).is_zero == (abs(decode(fmt, v)) <= Fraction(1, k))


def test_choose_format_predicates():
    assert choose_format(1) == choose_format(2)
    for K in (1, 3, 4, 5, 9, 16, 40):
        fmt = choose_format(K)
        for k in range(1, K + 1):
            assert decode(fmt, round_real(fmt, k)) == k
        recips = {round_real(fmt, Fraction(1, k)) for k in range(1, K + 1)}
        assert len(recips) == K
    fmt = choose_format(4)
    assert round_real(fmt, Fraction(1, 3)) != round_real(fmt, Fraction(1, 4))


def test_bit_string_round_trip():
    for v in F43.values() + [NAN]:
        assert parse_bits(F43, v.bits(F43)) == v
    with pytest.raises(ValueError):
        parse_bits(F43, "0|001|0001")  # unnormalized with nonzero exponent
