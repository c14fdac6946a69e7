"""Vectorized float arithmetic on integer value codes.

Values of a format are mapped to int codes in ascending value order::

    0            -inf
    1 .. m       negative finite values, most negative first
    m+1, m+2     -0, +0
    m+3 .. 2m+2  positive finite values
    2m+3         +inf
    2m+4         NaN
    2m+5         EMPTY (identity of the masked multiset fold)

so sorting codes sorts values (with -0 before +0) and ``max`` over codes is
the maximum value.  add and mul are exact-then-round on integer significands;
for small formats they are precomputed into 2-D lookup tables.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import core
from .core import FloatFormat, FloatValue
from .functions import exp as scalar_exp

TABLE_LIMIT = 4200  # build 2-D add/mul tables up to this many codes


def _bit_length(m: np.ndarray) -> np.ndarray:
    m = m.astype(np.int64)
    _, ex = np.frexp(m.astype(np.float64))
    bl = ex.astype(np.int64)
    # float conversion may round up across a power of two; fix exactly
    sh = np.clip(bl - 1, 0, 62)
    too_big = (m > 0) & ((m >> sh) == 0)
    bl = np.where(too_big, bl - 1, bl)
    sh = np.clip(bl, 0, 62)
    too_small = (m > 0) & (bl < 63) & ((m >> sh) != 0)
    bl = np.where(too_small, bl + 1, bl)
    return np.where(m == 0, 0, bl)


class FloatTables:
    def __init__(self, fmt: FloatFormat):
        if fmt.p < 2:
            raise ValueError("vectorized engine needs p >= 2")
        if fmt.p + fmt.emax + 2 > 60 or 3 * fmt.p + 4 > 60:
            raise ValueError(f"{fmt} too wide for the int64 engine")
        self.fmt = fmt
        grid = np.array(fmt.grid, dtype=np.int64)
        m = len(grid) - 1
        self.m = m
        self.NINF = 0
        self.NZ = m + 1
        self.PZ = m + 2
        self.PINF = 2 * m + 3
        self.NAN = 2 * m + 4
        self.EMPTY = 2 * m + 5
        self.ncode = 2 * m + 6
        self.dtype = np.int16 if self.ncode < 32767 else np.int32
        n = np.zeros(self.ncode, dtype=np.int64)  # signed grid integer
        n[m + 3: 2 * m + 3] = grid[1:]
        n[1: m + 1] = -grid[1:][::-1]
        self.n = n
        self.is_fin = np.zeros(self.ncode, dtype=bool)
        self.is_fin[1: 2 * m + 3] = True
        self.neg_sign = np.zeros(self.ncode, dtype=bool)
        self.neg_sign[: m + 2] = True  # -inf, negatives and -0
        mag = np.abs(n)
        e = np.where(mag < 2 * fmt.a, 0, _bit_length(mag) - fmt.p)
        self.sig = mag >> e
        self.exp_ = e
        codes = np.arange(self.ncode)
        neg = codes.copy()
        neg[1: 2 * m + 3] = (2 * m + 3) - codes[1: 2 * m + 3]
        neg[0], neg[self.PINF] = self.PINF, 0
        self.neg_tab = neg.astype(self.dtype)
        self.one = self.encode(fmt.one)
        self.zero = self.PZ
        self.as_float = np.where(self.is_fin, n * float(fmt.unit), 0.0)
        self.as_float[0] = -np.inf
        self.as_float[self.PINF] = np.inf
        self.as_float[self.NAN] = np.nan
        self.as_float[self.EMPTY] = 0.0
        self._add = self._mul = None
        self._unary = {}
        if self.ncode <= TABLE_LIMIT:
            a, b = np.meshgrid(codes, codes, indexing="ij")
            self._add = self._add_direct(a, b).astype(self.dtype)
            self._mul = self._mul_direct(a, b).astype(self.dtype)

    # -- conversion -------------------------------------------------------
    def encode(self, v: FloatValue) -> int:
        m = self.m
        if v.kind == "nan":
            return self.NAN
        if v.kind == "pinf":
            return self.PINF
        if v.kind == "ninf":
            return 0
        if v.is_zero:
            return self.NZ if v.sign else self.PZ
        idx = self._grid_index(abs(v.n()))
        return (m + 2 + idx) if not v.sign else (m + 1 - idx)

    def _grid_index(self, mag: int) -> int:
        fmt = self.fmt
        if mag < 2 * fmt.a:
            return mag
        e = mag.bit_length() - fmt.p
        return 2 * fmt.a + (e - 1) * fmt.a + ((mag >> e) - fmt.a)

    def decode(self, c: int) -> FloatValue:
        c = int(c)
        if c == self.NAN:
            return core.NAN
        if c == self.PINF:
            return core.POS_INF
        if c == 0:
            return core.NEG_INF
        if c == self.EMPTY:
            raise ValueError("EMPTY has no value")
        return core.from_n(self.fmt, int(self.n[c]), neg_zero=(c == self.NZ))

    def encode_fraction(self, x) -> int:
        return self.encode(core.round_real(self.fmt, x))

    def exact(self, c: int):
        return core.decode(self.fmt, self.decode(c))

    def array(self, values) -> np.ndarray:
        return np.array([self.encode(v) for v in values], dtype=self.dtype)

    # -- rounding ---------------------------------------------------------
    def _codes_from_grid(self, neg, mant, eg):
        fmt = self.fmt
        idx = np.where(eg == 0, mant, 2 * fmt.a + (eg - 1) * fmt.a + (mant - fmt.a))
        pos_code = self.m + 2 + idx
        neg_code = self.m + 1 - idx
        out = np.where(neg, neg_code, pos_code)
        out = np.where(mant == 0, np.where(neg, self.NZ, self.PZ), out)
        out = np.where(eg > fmt.emax, np.where(neg, 0, self.PINF), out)
        return out

    def _round(self, neg, M, X, sticky=None):
        """Round (M + sticky*eps) * 2^X grid units; M >= 0 int64."""
        fmt = self.fmt
        p = fmt.p
        M = np.asarray(M, dtype=np.int64)
        X = np.broadcast_to(np.asarray(X, dtype=np.int64), M.shape)
        if sticky is None:
            sticky = np.zeros(M.shape, dtype=np.int64)
        M2 = (M << 1) | sticky.astype(np.int64)
        X2 = X - 1
        bl = _bit_length(M2)
        top = bl + X2
        eg = np.where(top <= p, 0, top - p)
        shift = eg - X2
        pos = np.clip(shift, 0, 62)
        left = np.clip(-shift, 0, 62)
        q = np.where(shift > 0, M2 >> pos, M2 << left)
        rem = np.where(shift > 0, M2 - (q << pos), 0)
        half = np.where(shift > 0, np.int64(1) << np.clip(pos - 1, 0, 61), 0)
        big = shift > 62
        up = (shift > 0) & ((rem > half) | ((rem == half) & ((q & 1) == 1)))
        q = np.where(big, 0, q)
        up = np.where(big, False, up)
        mant = q + up
        carry = mant >= 2 * fmt.a
        mant = np.where(carry, mant >> 1, mant)
        eg = np.where(carry, eg + 1, eg)
        # e=0 grid spans [0, 2a); a carry there lands on s=a, e=1
        return self._codes_from_grid(neg, mant, eg)

    # -- direct vectorized ops ---------------------------------------------
    def _special(self, a, b, finite_result, nan_mask):
        out = np.where(nan_mask, self.NAN, finite_result)
        return out

    def _add_direct(self, a, b):
        a = np.asarray(a)
        b = np.asarray(b)
        s = self.n[np.clip(a, 0, self.ncode - 1)] + self.n[np.clip(b, 0, self.ncode - 1)]
        res = self._round(s < 0, np.abs(s), 0)
        both_negzero = (a == self.NZ) & (b == self.NZ)
        res = np.where(s == 0, np.where(both_negzero, self.NZ, self.PZ), res)
        a_inf = (a == 0) | (a == self.PINF)
        b_inf = (b == 0) | (b == self.PINF)
        res = np.where(a_inf & ~b_inf, a, res)
        res = np.where(b_inf & ~a_inf, b, res)
        res = np.where(a_inf & b_inf, np.where(a == b, a, self.NAN), res)
        res = np.where((a == self.NAN) | (b == self.NAN), self.NAN, res)
        res = np.where(a == self.EMPTY, b, res)
        res = np.where(b == self.EMPTY, a, res)
        return res

    def _mul_direct(self, a, b):
        a = np.asarray(a)
        b = np.asarray(b)
        fmt = self.fmt
        neg = self.neg_sign[a] ^ self.neg_sign[b]
        M = self.sig[a] * self.sig[b]
        X = self.exp_[a] + self.exp_[b] - fmt.scale_bits
        res = self._round(neg, M, X)
        a_zero = (a == self.NZ) | (a == self.PZ)
        b_zero = (b == self.NZ) | (b == self.PZ)
        res = np.where(a_zero | b_zero, np.where(neg, self.NZ, self.PZ), res)
        a_inf = (a == 0) | (a == self.PINF)
        b_inf = (b == 0) | (b == self.PINF)
        res = np.where(a_inf | b_inf, np.where(neg, 0, self.PINF), res)
        res = np.where((a_inf & b_zero) | (b_inf & a_zero), self.NAN, res)
        res = np.where((a == self.NAN) | (b == self.NAN), self.NAN, res)
        res = np.where((a == self.EMPTY) | (b == self.EMPTY), self.EMPTY, res)
        return res

    def _div_direct(self, a, b):
        a = np.asarray(a)
        b = np.asarray(b)
        fmt = self.fmt
        G = 2 * fmt.p + 2
        neg = self.neg_sign[a] ^ self.neg_sign[b]
        sa = self.sig[a]
        sb = np.where(self.sig[b] == 0, 1, self.sig[b])
        num = sa << G
        qt = num // sb
        sticky = (num - qt * sb) != 0
        X = self.exp_[a] - self.exp_[b] + fmt.scale_bits - G
        res = self._round(neg, qt, X, sticky)
        a_zero = (a == self.NZ) | (a == self.PZ)
        b_zero = (b == self.NZ) | (b == self.PZ)
        a_inf = (a == 0) | (a == self.PINF)
        b_inf = (b == 0) | (b == self.PINF)
        signed_zero = np.where(neg, self.NZ, self.PZ)
        signed_inf = np.where(neg, 0, self.PINF)
        res = np.where(a_zero, signed_zero, res)
        res = np.where(b_zero, np.where(a_zero, self.NAN, signed_inf), res)
        res = np.where(b_inf, np.where(a_inf, self.NAN, signed_zero), res)
        res = np.where(a_inf & ~b_inf, signed_inf, res)
        res = np.where((a == self.NAN) | (b == self.NAN), self.NAN, res)
        return res

    # -- public ops on code arrays ---------------------------------------------
    def add(self, a, b):
        if self._add is not None:
            return self._add[a, b]
        return self._add_direct(a, b).astype(self.dtype)

    def mul(self, a, b):
        if self._mul is not None:
            return self._mul[a, b]
        return self._mul_direct(a, b).astype(self.dtype)

    def neg(self, a):
        a = np.asarray(a)
        return np.where(a == self.EMPTY, a, self.neg_tab[np.clip(a, 0, self.ncode - 1)]).astype(self.dtype)

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def div(self, a, b):
        a, b = np.broadcast_arrays(np.asarray(a), np.asarray(b))
        return self._div_direct(a, b).astype(self.dtype)

    def _unary_table(self, name, fn):
        if name not in self._unary:
            tab = np.empty(self.ncode, dtype=self.dtype)
            for c in range(self.ncode):
                if c == self.EMPTY:
                    tab[c] = self.EMPTY
                else:
                    tab[c] = self.encode(fn(self.fmt, self.decode(c)))
            self._unary[name] = tab
        return self._unary[name]

    def exp(self, a):
        return self._unary_table("exp", scalar_exp)[a]

    def sqrt(self, a):
        return self._unary_table("sqrt", core.sqrt)[a]

    def is_nan(self, a):
        return np.asarray(a) == self.NAN

    def canonical(self, a):
        """Codes with -0 mapped to +0, for numeric comparisons."""
        a = np.asarray(a)
        return np.where(a == self.NZ, self.PZ, a)

    def relu(self, a):
        a = np.asarray(a)
        return np.where(a == self.NAN, self.NAN, np.where(a > self.PZ, a, self.PZ)).astype(self.dtype)

    def heaviside(self, a):
        a = np.asarray(a)
        return np.where(a == self.NAN, self.NAN, np.where(a > self.PZ, self.one, self.PZ)).astype(self.dtype)

    def trunc_relu(self, a):
        a = np.asarray(a)
        out = np.where(a > self.PZ, np.minimum(a, self.one), self.PZ)
        return np.where(a == self.NAN, self.NAN, out).astype(self.dtype)

    def fold_sorted(self, x, axis=-1):
        """Left fold of add over the last axis of already sorted codes."""
        x = np.moveaxis(np.asarray(x), axis, -1)
        if x.shape[-1] == 0:
            return np.full(x.shape[:-1], self.PZ, dtype=self.dtype)
        acc = x[..., 0].astype(self.dtype)
        for j in range(1, x.shape[-1]):
            col = x[..., j]
            if np.all(col == self.EMPTY):
                break
            acc = self.add(acc, col)
        return np.where(acc == self.EMPTY, self.PZ, acc).astype(self.dtype)

    def msum(self, x, axis=-1):
        """Ascending multiset sum along an axis; EMPTY entries are ignored."""
        x = np.sort(np.asarray(x), axis=axis)
        return self.fold_sorted(x, axis=axis)

    def lsum(self, x, axis=-1):
        """Left-to-right sum in presentation order (strict mode)."""
        x = np.moveaxis(np.asarray(x), axis, -1)
        if x.shape[-1] == 0:
            return np.full(x.shape[:-1], self.PZ, dtype=self.dtype)
        acc = x[..., 0]
        for j in range(1, x.shape[-1]):
            acc = self.add(acc, x[..., j])
        return np.where(acc == self.EMPTY, self.PZ, acc).astype(self.dtype)


@lru_cache(maxsize=None)
def tables_for(fmt: FloatFormat) -> FloatTables:
    return FloatTables(fmt)
