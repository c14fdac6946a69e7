"""Translations from logic fragments to network descriptions."""
from .counting import CountPlan, big_logit, plan_count
from .floatnets import (
    compile_gml_to_gnn_float,
    compile_gmlgc_to_gps_float,
    compile_plg_to_uhgt_float,
    compile_plgc_to_gt_float,
)
from .gadgets import (
    CompileError,
    amplify_factors,
    compile_pl_to_mlp,
    split_mlp,
    threshold_eq_mlp,
    threshold_ge_mlp,
)
from .real import basic_to_gps, compile_gmlg_to_gps_real
from .report import CompilationReport, desugar, report_of
from .shift import shift_mlp_transformer, shift_via_gps
