"""Equivalence campaigns, invariance experiments and float format reports.

Reports are plain dicts with a schema version so they can be written as JSON
and replayed: every counterexample carries the formula, the compile target
and the full graph.
"""
from __future__ import annotations

import json
import platform
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from . import __version__
from . import floatfmt as ff
from .bisim import check_ratio, label_ratio
from .compile import (
    CompileError,
    basic_to_gps,
    compile_gml_to_gnn_float,
    compile_gmlg_to_gps_real,
    compile_gmlgc_to_gps_float,
    compile_plg_to_uhgt_float,
    compile_plgc_to_gt_float,
    report_of,
)
from .floatfmt.tables import tables_for
from .graphs import (
    EXHAUSTIVE_MAX_LABELS,
    EXHAUSTIVE_MAX_N,
    LabeledGraph,
    disjoint_copies,
    exhaustive_arrays,
    random_arrays,
    word_graph,
)
from .logic import eval_batch, fragment_of, max_prop, parse, to_text
from .nn import DoubleBackend, FloatBackend, classify_arrays, forward_arrays, network_forward, resolve_backend
from .nn.model import Network, network_from_dict, network_to_dict

SCHEMA_VERSION = 1
MAX_RECORDED_FAILURES = 1000

# -- formula corpora --------------------------------------------------------------

CORPORA = {
    "pl-g": [
        "p0", "glob p0", "(p0 & glob p1)", "!glob (p0 & p1)", "glob !p1", "(glob p0 & !glob p1)",
        "glob (p1 & !glob p0)", "!(p1 & glob !p0)",
    ],
    "pl-gc": [
        "p0", "glob>=0 p0", "glob=0 p0", "glob p0", "glob>=2 p0", "glob>=3 p0", "glob>=4 p0",
        "glob>=5 p0", "!glob>=3 p0", "(p1 & glob>=2 p0)", "glob>=3 (p0 & p1)", "glob>=5 (p0 & !p1)",
        "(glob>=4 p0 & !glob>=2 p1)", "glob>=2 (p1 & glob>=3 p0)", "!(glob>=5 p0 & glob p1)",
        "glob<5 p0", "glob=4 p0",
    ],
    "gml": [
        "top", "p0", "!p1", "(p0 & !p1)", "dia p0", "dia>=2 p0", "dia>=3 p1", "!dia top",
        "dia>=2 (p0 & p1)", "dia dia p1", "dia>=2 !dia p0", "(p1 & dia>=3 !p0)",
        "!(dia p0 & dia>=2 p1)", "dia (p0 & dia>=2 top)", "dia>=2 dia>=2 p0", "(dia p0 & !dia>=3 p0)",
    ],
    "gml-g": [
        "top", "p0", "p1", "!p0", "(p0 & p1)", "!(p0 & !p1)", "dia p0", "dia>=2 p1", "dia>=3 top",
        "!dia>=2 (p0 & p1)", "dia dia p0", "dia>=2 dia p1", "glob p0", "glob (p0 & p1)", "!glob p1",
        "glob dia>=2 p0", "dia glob p1", "(p0 & glob dia>=3 top)", "glob !dia top",
        "(dia>=2 (p0 & !p1) & glob dia p1)", "!(glob p0 & dia>=3 !p1)", "dia>=2 (dia p0 & !glob dia>=2 p1)",
    ],
    "gml-gc": [
        "glob>=2 p0", "dia glob>=2 p0", "glob>=3 dia p1", "(p0 & glob>=2 dia>=2 top)",
        "!glob>=3 (p0 & p1)", "dia>=2 !glob>=2 p1", "glob>=2 dia dia p0", "(dia>=3 p1 & glob>=4 p0)",
        "glob=2 p1", "glob<3 !p0", "glob>=2 glob>=3 p0", "!(glob>=2 p0 & dia p1)",
        "dia (p1 & glob>=5 top)", "glob>=4 (p0 | p1)", "(glob>=3 top -> dia p0)",
    ],
}


def corpus(ref) -> list:
    """Formula texts for a corpus name or an explicit list."""
    if isinstance(ref, str):
        if ref not in CORPORA:
            raise ValueError(f"unknown corpus {ref!r}")
        return list(CORPORA[ref])
    return [to_text(f) if not isinstance(f, str) else f for f in ref]


# -- compile targets ------------------------------------------------------------------

def _gt(f, att, fmt, ell):
    return compile_plgc_to_gt_float(f, att or "softmax", fmt, ell)[1]


def _gps(f, att, fmt, ell):
    return compile_gmlgc_to_gps_float(f, att or "average-hard", fmt, ell)[1]


TARGETS = {
    "basic-gps-real": lambda f, att, fmt, ell: compile_gmlg_to_gps_real(f, att or "softmax", ell),
    "gps-real": lambda f, att, fmt, ell: basic_to_gps(compile_gmlg_to_gps_real(f, att or "softmax", ell)),
    "gt-float": _gt,
    "uhgt-float": lambda f, att, fmt, ell: compile_plg_to_uhgt_float(f, fmt, ell),
    "gnn-float": lambda f, att, fmt, ell: compile_gml_to_gnn_float(f, "GNN", fmt, ell),
    "gnn+g-float": lambda f, att, fmt, ell: compile_gml_to_gnn_float(f, "GNN+G", fmt, ell),
    "gnn+gc-float": lambda f, att, fmt, ell: compile_gml_to_gnn_float(f, "GNN+GC", fmt, ell),
    "gnn-auto-float": lambda f, att, fmt, ell: compile_gml_to_gnn_float(f, None, fmt, ell),
    "gps-float": _gps,
}


def compile_target(target: str, f, attention=None, fmt=None, ell=None) -> Network:
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}")
    if isinstance(f, str):
        f = parse(f)
    return TARGETS[target](f, attention, fmt, ell)


def parse_format(text: str):
    """"F(p,q)" -> FloatFormat."""
    m = re.fullmatch(r"\s*F\(\s*(\d+)\s*,\s*(\d+)\s*\)\s*", text)
    if not m:
        raise ValueError(f"bad format {text!r}")
    return ff.FloatFormat(int(m.group(1)), int(m.group(2)))


def rehost(net: Network, backend) -> Network:
    """Same weights on another backend (copied through the serialized form)."""
    m = network_from_dict(network_to_dict(net))
    m.backend = backend
    return m


# -- graph corpora --------------------------------------------------------------------

@dataclass
class GraphCorpus:
    """Deterministic stream of same-size graph batches.

    mode "exhaustive": every graph with n_min..n_max vertices (self-loops allowed);
    "random": ``count`` graphs per size; "count-sweep": for each size n and each
    c in 0..n, ``count`` graphs with exactly c vertices labelled by ``sweep_label``;
    "words": every word of length n_min..n_max over the labels.
    """

    mode: str = "exhaustive"
    n_min: int = 1
    n_max: int = 3
    count: int = 100
    labels: int = 2
    edge_prob: float = 0.5
    label_prob: float = 0.5
    sweep_label: int = 0

    def __post_init__(self):
        if self.mode not in ("exhaustive", "random", "count-sweep", "words"):
            raise ValueError(f"unknown graph corpus mode {self.mode!r}")
        if self.n_min < 1 or self.n_max < self.n_min:
            raise ValueError("need 1 <= n_min <= n_max")
        if self.mode == "exhaustive" and (self.n_max > EXHAUSTIVE_MAX_N or self.labels > EXHAUSTIVE_MAX_LABELS):
            raise ValueError(f"exhaustive corpus limited to n <= {EXHAUSTIVE_MAX_N}, "
                             f"<= {EXHAUSTIVE_MAX_LABELS} labels")
        if self.mode == "words" and self.labels ** self.n_max > 1 << 16:
            raise ValueError("too many words")

    def batches(self, seed: int):
        rng = np.random.default_rng(seed)
        for n in range(self.n_min, self.n_max + 1):
            if self.mode == "exhaustive":
                yield exhaustive_arrays(n, self.labels)
            elif self.mode == "random":
                yield random_arrays(rng, n, self.count, self.labels, self.edge_prob, self.label_prob)
            elif self.mode == "count-sweep":
                B = (n + 1) * self.count
                A, L = random_arrays(rng, n, B, self.labels, self.edge_prob, self.label_prob)
                L[:, :, self.sweep_label] = 0
                for b in range(B):
                    L[b, rng.permutation(n)[: b % (n + 1)], self.sweep_label] = 1
                yield A, L
            else:
                gs = [word_graph([(m // self.labels ** i) % self.labels for i in range(n)], self.labels)
                      for m in range(self.labels ** n)]
                yield np.stack([g.adjacency() for g in gs]), np.stack([g.label_matrix() for g in gs])


# -- campaigns --------------------------------------------------------------------------

@dataclass
class Campaign:
    formulas: Union[str, list] = "gml-g"
    graphs: GraphCorpus = field(default_factory=GraphCorpus)
    target: str = "basic-gps-real"
    attention: Optional[str] = None
    backend: Optional[object] = None  # None keeps the compiler's backend
    mode: str = "bit-exact"  # or "tolerance"
    tolerance: float = 1e-6
    seed: int = 0
    fmt: Optional[tuple] = None  # (p, q) override for float targets
    ell: Optional[int] = None
    mutation: Optional[str] = None  # "flip-bias" corrupts each compiled network

    def __post_init__(self):
        if isinstance(self.graphs, dict):
            self.graphs = GraphCorpus(**self.graphs)
        if self.mode not in ("bit-exact", "tolerance"):
            raise ValueError(f"unknown comparison mode {self.mode!r}")
        if self.mode == "bit-exact" and self.backend == "f64":
            raise ValueError("bit-exact comparison is not available on the double backend")
        if self.target not in TARGETS:
            raise ValueError(f"unknown target {self.target!r}")
        if self.mutation not in (None, "flip-bias"):
            raise ValueError(f"unknown mutation {self.mutation!r}")
        if self.fmt is not None:
            self.fmt = tuple(self.fmt)

    @property
    def float_format(self):
        return ff.FloatFormat(*self.fmt) if self.fmt else None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> "Campaign":
        return cls(**d)


@dataclass
class Report:
    kind: str
    config: dict = field(default_factory=dict)
    items: list = field(default_factory=list)
    environment: dict = field(default_factory=dict)
    schema: int = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return all(it.get("status") == "pass" for it in self.items)

    def totals(self) -> dict:
        out = {"items": len(self.items)}
        for it in self.items:
            out[it["status"]] = out.get(it["status"], 0) + 1
        return out

    def to_dict(self) -> dict:
        return {"schema": self.schema, "kind": self.kind, "config": self.config, "environment": self.environment,
                "totals": self.totals(), "passed": self.passed, "items": self.items}

    @classmethod
    def from_dict(cls, d) -> "Report":
        if d.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {d.get('schema')!r}")
        return cls(d["kind"], d.get("config", {}), d.get("items", []), d.get("environment", {}), d["schema"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "Report":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def summary(self) -> str:
        lines = [f"{self.kind} report: {'PASS' if self.passed else 'FAIL'} {self.totals()}"]
        for it in self.items:
            name = it.get("formula") or it.get("network") or it.get("format", "")
            extra = ""
            if "vertices" in it:
                extra = f" vertices={it['vertices']} mismatches={it['mismatches']}"
            elif "pairs" in it:
                extra = f" pairs={it['pairs']} differences={it['differences']}"
            if it.get("error"):
                extra += f" error={it['error']}"
            lines.append(f"  [{it['status']}] {name}{extra}")
        return "\n".join(lines)


def environment(**extra) -> dict:
    out = {"gtlogic": __version__, "python": platform.python_version(), "numpy": np.__version__}
    out.update(extra)
    return out


def mutate(net: Network, kind="flip-bias") -> Network:
    """Copy of net with the output bias lowered by one (accepted vertices flip to 0)."""
    if kind != "flip-bias":
        raise ValueError(f"unknown mutation {kind!r}")
    d = network_to_dict(net)
    m = network_from_dict(d)
    last = m.classifier.layers[-1]
    last.b = last.b.copy()
    last.b[0] -= 1
    return m


def _values_as_float(bk, y) -> np.ndarray:
    if isinstance(bk, FloatBackend):
        return bk.T.as_float[np.asarray(y)]
    if isinstance(bk, DoubleBackend):
        return np.asarray(y, dtype=float)
    return np.vectorize(float, otypes=[float])(bk.to_values(y))


def _net_for(c: Campaign, f) -> Network:
    ell = c.ell if c.ell is not None else max(c.graphs.labels, max_prop(f) + 1)
    net = compile_target(c.target, f, c.attention, c.float_format, ell)
    if c.backend is not None:
        net = rehost(net, c.backend)
    if c.mutation:
        net = mutate(net, c.mutation)
    return net


def _verdicts(c: Campaign, net, A, L, f):
    truth = eval_batch(A, L, f)
    if c.mode == "bit-exact":
        got = classify_arrays(net, A, L)
        return got, truth, got == truth
    bk = resolve_backend(net)
    y = _values_as_float(bk, forward_arrays(net, A, L, bk))
    return y, truth, np.abs(y - truth) <= c.tolerance


def _equivalence_item(c: Campaign, text: str) -> dict:
    item = {"formula": text, "status": "pass", "graphs": 0, "vertices": 0, "mismatches": 0, "failed": []}
    try:
        f = parse(text)
        item["fragment"] = fragment_of(f)
        net = _net_for(c, f)
    except (CompileError, ValueError) as e:
        item.update(status="compile-error", error=str(e))
        return item
    rep = report_of(net)
    if rep is not None:
        item["compilation"] = {"format": rep.format, "layer_count": rep.layer_count, "hidden_dim": rep.hidden_dim,
                               "branches": rep.branches}
        rounding = {k: w["rounding"] for k, w in rep.witnesses.items() if isinstance(w, dict) and "rounding" in w}
        if rounding:
            item["compilation"]["rounding"] = rounding
        if rep.format:
            fmt = parse_format(rep.format)
            item["compilation"]["saturation_threshold"] = ff.saturation_threshold(fmt).threshold
    offset = 0
    for A, L in c.graphs.batches(c.seed):
        got, truth, ok = _verdicts(c, net, A, L, f)
        bad = np.argwhere(~ok)
        item["graphs"] += A.shape[0]
        item["vertices"] += ok.size
        item["mismatches"] += len(bad)
        if len(bad) and "counterexample" not in item:
            b, v = map(int, bad[0])
            g = LabeledGraph.from_arrays(A[b], L[b])
            item["counterexample"] = {"graph": g.to_dict(), "vertex": v, "expected": int(truth[b, v]),
                                      "got": float(got[b, v]) if c.mode == "tolerance" else int(got[b, v])}
        room = MAX_RECORDED_FAILURES - len(item["failed"])
        item["failed"] += [[offset + int(b), int(v)] for b, v in bad[:room]]
        offset += A.shape[0]
    item["failed_truncated"] = item["mismatches"] > len(item["failed"])
    if item["mismatches"]:
        item["status"] = "fail"
    return item


def run_equivalence(c: Campaign, jobs: int = 1) -> Report:
    """Compile every formula and compare the network with the model checker on every graph.

    ``failed`` lists (graph index, vertex) of each disagreement in stream
    order; all other vertices agreed.
    """
    texts = corpus(c.formulas)
    if jobs > 1 and len(texts) > 1:
        with ProcessPoolExecutor(jobs) as ex:
            items = list(ex.map(_equivalence_item, [c] * len(texts), texts))
    else:
        items = [_equivalence_item(c, t) for t in texts]
    return Report("equivalence", c.to_dict(), items, environment(seed=c.seed))


def replay_counterexample(report: Report, index: int) -> dict:
    """Recompile and re-evaluate the stored counterexample of an item."""
    c = Campaign.from_dict(dict(report.config))
    it = report.items[index]
    cx = it["counterexample"]
    f = parse(it["formula"])
    g = LabeledGraph.from_dict(cx["graph"])
    net = _net_for(c, f)
    A, L = g.adjacency()[None], g.with_label_count(c.graphs.labels).label_matrix()[None]
    got, truth, ok = _verdicts(c, net, A, L, f)
    v = cx["vertex"]
    return {"expected": int(truth[0, v]), "got": got[0, v].item(), "agrees": bool(ok[0, v])}


# -- ratio-witnessed pairs ----------------------------------------------------------

@dataclass(frozen=True)
class Pair:
    g1: LabeledGraph
    v1: int
    g2: LabeledGraph
    v2: int
    q: Fraction
    how: str

    def to_dict(self) -> dict:
        return {"g1": self.g1.to_dict(), "v1": self.v1, "g2": self.g2.to_dict(), "v2": self.v2,
                "q": str(self.q), "how": self.how}


def _random_graph(rng, n_min, n_max, labels, edge_prob):
    n = int(rng.integers(n_min, n_max + 1))
    A, L = random_arrays(rng, n, 1, labels, edge_prob)
    return LabeledGraph.from_arrays(A[0], L[0])


def disjoint_copy_pairs(rng, count, qs=(2, 3), n_min=1, n_max=5, labels=2, edge_prob=0.4):
    """(G, v) against (q G, (v, 0)); witnessed by q = 1/q."""
    out = []
    for _ in range(count):
        g = _random_graph(rng, n_min, n_max, labels, edge_prob)
        q = int(rng.choice(qs))
        v = int(rng.integers(g.n))
        out.append(Pair(g, v, disjoint_copies(g, q), v, Fraction(1, q), f"copies-{q}"))
    return out


def lift(g: LabeledGraph, m: int, rng) -> LabeledGraph:
    """m-fold covering graph: every vertex (so every bisimulation class) is duplicated m times.

    Copy i of u gets, for each edge u -> w, the edge to copy pi(i) of w for a
    random permutation pi per edge, so out-neighbour classes are preserved.
    """
    n = g.n
    edges = []
    for u, w in g.edges:
        pi = rng.permutation(m)
        edges += [(i * n + u, int(pi[i]) * n + w) for i in range(m)]
    labels = tuple(frozenset(i * n + v for i in range(m) for v in s) for s in g.labels)
    return LabeledGraph(m * n, tuple(edges), labels)


def ratio_surgery_pairs(rng, count, ms=(1, 2, 3), n_min=1, n_max=4, labels=2, edge_prob=0.4):
    """Two random lifts of one graph with multiplicities m1 != m2 (q = m1 / m2)."""
    out = []
    for _ in range(count):
        g = _random_graph(rng, n_min, n_max, labels, edge_prob)
        m1, m2 = (int(x) for x in rng.choice(ms, 2, replace=False))
        v = int(rng.integers(g.n))
        h1, h2 = lift(g, m1, rng), lift(g, m2, rng)
        out.append(Pair(h1, int(rng.integers(m1)) * g.n + v, h2, int(rng.integers(m2)) * g.n + v,
                        Fraction(m1, m2), f"lift-{m1}-{m2}"))
    return out


def label_ratio_pairs(rng, count, scales=(1, 2, 3), max_types=3, max_mult=3, labels=2, edge_prob=0.3):
    """Graphs whose label-set counts are a * c and b * c for one count vector c."""
    out = []
    for _ in range(count):
        k = int(rng.integers(1, max_types + 1))
        types = rng.choice(1 << labels, k, replace=False)
        mult = rng.integers(1, max_mult + 1, k)
        a, b = (int(x) for x in rng.choice(scales, 2, replace=False))

        def build(scale):
            rows = [t for t, c in zip(types, mult) for _ in range(int(c) * scale)]
            rows = [rows[i] for i in rng.permutation(len(rows))]
            n = len(rows)
            L = np.array([[(int(t) >> j) & 1 for j in range(labels)] for t in rows], np.uint8)
            A = (rng.random((n, n)) < edge_prob).astype(np.uint8)
            return LabeledGraph.from_arrays(A, L), rows

        g1, r1 = build(a)
        g2, r2 = build(b)
        v1 = int(rng.integers(g1.n))
        v2 = int(rng.choice([i for i, t in enumerate(r2) if t == r1[v1]]))
        out.append(Pair(g1, v1, g2, v2, Fraction(a, b), f"labels-{a}-{b}"))
    return out


PAIR_GENERATORS = {
    "disjoint-copies": disjoint_copy_pairs,
    "ratio-surgery": ratio_surgery_pairs,
    "label-ratio": label_ratio_pairs,
}


def make_pairs(kind: str, count: int, seed: int = 0, **kw) -> list:
    if kind not in PAIR_GENERATORS:
        raise ValueError(f"unknown pair generator {kind!r}")
    if count < 0:
        raise ValueError("count must be >= 0")
    return PAIR_GENERATORS[kind](np.random.default_rng(seed), count, **kw)


def check_pair(p: Pair) -> bool:
    """The pair carries the ratio witness its generator claims."""
    w = label_ratio(p.g1, p.v1, p.g2, p.v2) if p.how.startswith("labels") else \
        check_ratio(p.g1, p.v1, p.g2, p.v2)
    return w is not None and w.q == p.q


def _pointed(net, g, v, bk):
    if g.label_count < net.ell:
        g = g.with_label_count(net.ell)
    return bk.to_values(network_forward(net, g, bk))[v]


def _same(bk, a, b, tol) -> bool:
    if isinstance(bk, DoubleBackend):
        a, b = float(a), float(b)
        if np.isnan(a) or np.isnan(b):
            return np.isnan(a) and np.isnan(b)
        return a == b or abs(a - b) <= tol * max(1.0, abs(a), abs(b))
    if isinstance(bk, FloatBackend):
        return (a.is_nan and b.is_nan) or (a == b) or (a.is_zero and b.is_zero)
    return a == b


def _show(bk, x):
    if isinstance(bk, FloatBackend):
        return fv_text(bk.fmt, x)
    return str(x)


def run_invariance(networks, pairs, tolerance: float = 1e-6, config: dict = None) -> Report:
    """Compare pointed outputs of each network on each pair.

    ``networks`` is a list of (name, Network).  Double-backend outputs are
    compared within the relative tolerance, all others exactly.
    """
    items = []
    for name, net in networks:
        bk = resolve_backend(net)
        it = {"network": name, "kind": net.kind, "backend": net.backend, "pairs": len(pairs), "differences": 0}
        for p in pairs:
            a, b = _pointed(net, p.g1, p.v1, bk), _pointed(net, p.g2, p.v2, bk)
            if not _same(bk, a, b, tolerance):
                it["differences"] += 1
                if "first_difference" not in it:
                    it["first_difference"] = dict(p.to_dict(), out1=_show(bk, a), out2=_show(bk, b))
        it["status"] = "pass" if it["differences"] == 0 else "fail"
        items.append(it)
    cfg = dict(config or {}, tolerance=tolerance, pairs=len(pairs))
    return Report("invariance", cfg, items, environment())


# -- float format analysis --------------------------------------------------------

def fv_text(fmt, v) -> str:
    if v.is_nan:
        return "nan"
    if v.is_inf:
        return "-inf" if v.kind == "ninf" else "inf"
    if v.is_zero:
        return "-0" if v.sign else "0"
    return str(ff.decode(fmt, v))


def random_multisets(rng, fmt, count, k, width=None):
    """Code arrays (count, width) padded with EMPTY; a few values with large multiplicities."""
    T = tables_for(fmt)
    width = width or 4 * k + 8
    out = np.full((count, width), T.EMPTY, dtype=T.dtype)
    fin = np.arange(1, T.PINF)
    for r in range(count):
        pos = 0
        for _ in range(int(rng.integers(1, 5))):
            v = rng.choice(fin)
            mult = int(rng.integers(1, 2 * k + 2))
            mult = min(mult, width - pos)
            out[r, pos: pos + mult] = v
            pos += mult
        extra = min(int(rng.integers(0, 4)), width - pos)
        out[r, pos: pos + extra] = rng.choice(fin, extra)
    return out


def cap_multiplicities(T, M, k):
    """M|k: every value kept at most k times (EMPTY elsewhere)."""
    out = np.full_like(M, T.EMPTY)
    for r in range(M.shape[0]):
        vals, counts = np.unique(M[r][M[r] != T.EMPTY], return_counts=True)
        row = np.repeat(vals, np.minimum(counts, k))
        out[r, : len(row)] = row
    return out


def saturation_check(fmt, k, count=10_000, seed=0) -> dict:
    T = tables_for(fmt)
    M = random_multisets(np.random.default_rng(seed), fmt, count, k)
    same = T.canonical(T.msum(M)) == T.canonical(T.msum(cap_multiplicities(T, M, k)))
    return {"multisets": count, "stationary": int(same.sum())}


def underflow_table(fmt) -> list:
    half = Fraction(1, 2)
    rows = []
    for v in fmt.values(with_inf=False):
        if v.is_zero or abs(ff.decode(fmt, v)) > half:
            continue
        rows.append((v, ff.underflow_bound(fmt, v)))
    return rows


def underflow_check(fmt, rows) -> dict:
    """Vectorized route: F' * f == 0 iff |F'| <= bound, over every finite F'."""
    T = tables_for(fmt)
    fin = np.arange(1, T.PINF)
    mags = np.abs(np.array([float(x) for x in T.as_float[fin]]))
    ok = 0
    for f, bound in rows:
        zero = T.canonical(T.mul(fin, T.encode(f))) == T.PZ
        ok += bool(np.array_equal(zero, mags <= float(ff.decode(fmt, bound))))
    return {"bounds": len(rows), "verified": ok}


def format_report(fmt, checks: bool = True, seed: int = 0, samples: int = 10_000) -> Report:
    """Saturation threshold, underflow bounds, extremes and a non-associativity witness."""
    sat = ff.saturation_threshold(fmt)
    rows = underflow_table(fmt)
    item = {
        "format": str(fmt), "p": fmt.p, "q": fmt.q,
        "f_min": fv_text(fmt, fmt.f_min), "max_finite": fv_text(fmt, fmt.max_finite),
        "saturation": {"threshold": sat.threshold, "single_value_threshold": sat.single_value_threshold,
                       "witness_prefix": fv_text(fmt, sat.witness_prefix),
                       "witness_value": fv_text(fmt, sat.witness_value)},
        "underflow": [{"f": fv_text(fmt, f), "bound": fv_text(fmt, b)} for f, b in rows],
        "status": "pass",
    }
    w = ff.nonassociativity_witness(fmt)
    if w is not None:
        a, b, c = w
        item["nonassociativity"] = {
            "a": fv_text(fmt, a), "b": fv_text(fmt, b), "c": fv_text(fmt, c),
            "left": fv_text(fmt, ff.add(fmt, ff.add(fmt, a, b), c)),
            "right": fv_text(fmt, ff.add(fmt, a, ff.add(fmt, b, c))),
        }
    else:
        item["status"] = "fail"
    if checks:
        item["saturation_check"] = saturation_check(fmt, sat.threshold, samples, seed)
        item["underflow_check"] = underflow_check(fmt, rows)
        if item["saturation_check"]["stationary"] != samples or \
                item["underflow_check"]["verified"] != len(rows):
            item["status"] = "fail"
    return Report("format", {"p": fmt.p, "q": fmt.q, "seed": seed, "samples": samples if checks else 0},
                  [item], environment())


__all__ = [
    "CORPORA", "Campaign", "GraphCorpus", "PAIR_GENERATORS", "Pair", "Report", "SCHEMA_VERSION", "TARGETS",
    "check_pair", "compile_target", "corpus", "disjoint_copy_pairs", "format_report", "label_ratio_pairs",
    "lift", "make_pairs", "mutate", "ratio_surgery_pairs", "rehost", "replay_counterexample", "run_equivalence",
    "run_invariance", "saturation_check", "underflow_check", "underflow_table",
]
