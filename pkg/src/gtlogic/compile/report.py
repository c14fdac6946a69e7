"""Compilation reports and the formula preprocessing shared by all compilers."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

from ..logic import And, Dia, Glob, Not, Prop, Top, fragment_of, subformulas, to_text, within
from .gadgets import CompileError


@dataclass
class CompilationReport:
    fragment: str
    target: str
    backend: object
    layer_count: int
    hidden_dim: int
    layer_map: dict
    columns: dict = field(default_factory=dict)
    format: Optional[str] = None
    attention: Optional[str] = None
    branches: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CompilationReport":
        return cls(**d)


def report_of(net) -> CompilationReport:
    if "compilation" not in net.meta:
        raise KeyError("network carries no compilation report")
    return CompilationReport.from_dict(net.meta["compilation"])


def attach(net, report: CompilationReport):
    net.meta["compilation"] = report.to_dict()
    return net


def desugar(f):
    """Replace grade-0 modalities (vacuously true) by top."""
    if isinstance(f, (Top, Prop)):
        return f
    if isinstance(f, Not):
        return Not(desugar(f.child))
    if isinstance(f, And):
        return And(desugar(f.left), desugar(f.right))
    if f.grade <= 0:
        return Top()
    return type(f)(f.grade, desugar(f.child))


def prepare(f, fragment: str):
    """Desugar, check the fragment and lay out columns (top always present)."""
    f = desugar(f)
    if not within(f, fragment):
        raise CompileError(f"formula in {fragment_of(f)} is outside {fragment}")
    subs = subformulas(f)
    if Top() not in subs:
        subs = [Top()] + subs
    return f, subs, {g: i for i, g in enumerate(subs)}


def column_names(subs) -> dict:
    return {to_text(g): i for i, g in enumerate(subs)}


def is_modal(g) -> bool:
    return isinstance(g, (Dia, Glob))
