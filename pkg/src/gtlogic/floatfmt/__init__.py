"""Parametric float formats F(p, q): arithmetic, sums, attention rows, analyzers."""
from .core import (
    NAN,
    NEG_INF,
    POS_INF,
    FloatFormat,
    FloatValue,
    add,
    arith,
    decode,
    div,
    equal,
    from_n,
    mul,
    negate,
    ones_sum,
    parse_bits,
    round_real,
    sort_key,
    sqrt,
    sub,
    sum_increasing,
)
from .functions import ah_row, exp, exp_screens, softmax_row, uh_row, uh_row_float
from .analysis import (
    SaturationInfo,
    choose_format,
    nonassociativity_witness,
    saturation_threshold,
    underflow_bound,
    underflow_holds,
)
from .tables import FloatTables, tables_for

round = round_real  # noqa: A001  (module-level name mirrors the operation)
