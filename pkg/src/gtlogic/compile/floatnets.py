"""Compilers from logic fragments to float-format networks.

Transformer and GPS targets evaluate a list of steps over a column layout
of D = (number of subformulas) + 4 columns: the subformula columns and four
auxiliary ones that are zero between steps.  Steps are realized by shifted
simple layers (see ``shift``).
"""
from __future__ import annotations

from .. import floatfmt as ff
from ..logic import And, Dia, Glob, Not, Prop, Top, depth, fragment_of, grades, max_prop, to_text
from ..nn.model import MLP, MessagePassing, MPLayer, MPReadoutLayer, Network, Readout
from .counting import big_logit, plan_count
from .gadgets import Affine, CompileError, _connective, amplify_factors, check_representable
from .report import CompilationReport, attach, prepare
from .shift import DiaSpec, HeadSpec, Step, realize_gps, realize_gt

N_AUX = 4


def _format(f, fmt):
    K = max(grades(f, Dia) + grades(f, Glob) + [1])
    fmt = ff.choose_format(K) if fmt is None else fmt
    if not ff.analysis.construction_capable(fmt):
        raise CompileError(f"{fmt} cannot host the constructions")
    if not ff.analysis.integers_exact(fmt, K + 1):
        raise CompileError(f"{fmt} does not represent the grades up to {K}")
    return fmt


def _ell(f, ell):
    need = max(max_prop(f) + 1, 1)
    if ell is None:
        return need
    if ell < need:
        raise CompileError("formula uses more propositions than the alphabet")
    return ell


class _Layout:
    def __init__(self, subs, col, n_aux):
        self.subs, self.col = subs, col
        self.d = len(subs)
        self.D = self.d + n_aux
        self.aux = list(range(self.d, self.D))
        self.fmt = None

    def formula_cols(self, skip=()):
        return [c for c in range(self.d) if c not in skip]


# -- steps ---------------------------------------------------------------------------

def _batches(L: _Layout):
    """Group consecutive subformulas of the same kind whose children are already done."""
    out, cur, kind = [], [], None
    for g in L.subs:
        if isinstance(g, (Top, Prop)):
            continue
        k = "pl" if isinstance(g, (Not, And)) else ("dia" if isinstance(g, Dia) else "glob")
        clash = any(c in cur for c in _kids(g))
        if k == "glob" or k != kind or clash:
            if cur:
                out.append((kind, cur))
            cur, kind = [], k
        cur.append(g)
    if cur:
        out.append((kind, cur))
    return out


def _kids(g):
    if isinstance(g, And):
        return (g.left, g.right)
    return (g.child,) if hasattr(g, "child") else ()


def _pl_step(L: _Layout, batch) -> Step:
    A = Affine(L.D)
    A.keep(L.formula_cols(skip={L.col[g] for g in batch}))
    for g in batch:
        _connective(A, g, L.col)
    return Step([to_text(g) for g in batch], [A])


def _dia_step(L: _Layout, batch) -> Step:
    return Step([to_text(g) for g in batch], [],
                dias=[DiaSpec(L.col[g.child], g.grade, L.col[g]) for g in batch])


def _tests(L, cols, tests, keep):
    """Layers writing a 0/1 test result into each of ``cols``.

    ``tests[c]`` is ("pos", src, None) for [x_src > 0], ("ge", src, v) for
    [x_src >= v] or ("le", src, v) for [x_src <= v].  All tests read the
    input of the first layer, so a column may test itself.
    """
    f = L.fmt.unit
    first = Affine(L.D).keep(keep)
    for c in cols:
        kind, src, v = tests[c]
        if kind == "pos":
            first.add(src, c, -1).bias(c, f)
        elif kind == "ge":
            first.add(src, c, -1).bias(c, v)
        else:
            first.add(src, c, 1).bias(c, -v)
    # {0} U [f, inf) -> f * [value == 0], then scale f up to 1
    second = Affine(L.D).keep(keep)
    for c in cols:
        second.add(c, c, -1).bias(c, f)
    layers = [first, second]
    for k in amplify_factors(L.fmt):
        A = Affine(L.D).keep(keep)
        for c in cols:
            A.add(c, c, k)
        layers.append(A)
    return layers


def _glob_steps(L: _Layout, g, kind):
    """Count step (heads + tests + bit) and broadcast step for one global modality."""
    fmt, col = L.fmt, L.col
    j, i = col[g.child], col[g]
    A1, A2, A3, A4 = L.aux
    plan = plan_count(fmt, kind, g.grade)
    keep = L.formula_cols(skip={i})
    F = big_logit(fmt)
    f = fmt.unit
    heads = [HeadSpec({}, {}, {j: 1}, A1)]

    def under(c, out):
        check_representable(fmt, [F, c * f])
        return HeadSpec({j: F}, {j: F}, {j: c * f}, out)

    prog = []
    if plan.mode == "zero":
        prog += _tests(L, [A1], {A1: ("pos", A1, None)}, keep)
        bit = Affine(L.D).keep(keep).add(j, A1).add(A1, A1).bias(A1, -1)
    elif plan.mode == "single":
        heads.append(under(plan.lo[0], A2))
        prog += _tests(L, [A1, A2], {A1: ("pos", A1, None), A2: ("pos", A2, None)}, keep)
        bit = Affine(L.D).keep(keep).add(j, A1).add(A1, A1).add(A2, A1, -1).bias(A1, -1)
    else:
        tests = {A1: ("pos", A1, None), A3: ("pos", A3, None), A4: ("ge", A4, plan.dist[1]),
                 i: ("le", A4, plan.dist[2])}
        cols = [A1, A3, A4, i]
        if plan.lo:
            heads.append(under(plan.lo[0], A2))
            tests[A2] = ("pos", A2, None)
            cols.insert(1, A2)
        heads.append(under(plan.hi[0], A3))
        heads.append(under(plan.dist[0], A4))
        prog += _tests(L, cols, tests, keep)
        E = Affine(L.D).keep(keep + [A1, A2, A3]).add(A4, A4).add(i, A4).bias(A4, -1)
        R = Affine(L.D).keep(keep + [A1, A2]).add(A3, A3).add(A4, A3, -1)
        prog += [E, R]
        bit = Affine(L.D).keep(keep).add(j, A1).add(A1, A1).add(A2, A1, -1).add(A3, A1, -1).bias(A1, -1)
    prog.append(bit)
    count = Step([to_text(g)], prog, heads)
    bheads = [HeadSpec({}, {}, {A1: 1}, A2)]
    broadcast = Step([to_text(g)], _tests(L, [i], {i: ("pos", A2, None)}, keep), bheads)
    return [count, broadcast], plan


def _initial(L: _Layout, ell, total) -> MLP:
    A = Affine(ell, total)
    for g in L.subs:
        if isinstance(g, Prop):
            A.add(g.index, L.col[g])
        elif isinstance(g, Top):
            A.bias(L.col[g], 1)
    return MLP([A.perceptron("relu"), Affine(total).keep(range(total)).perceptron("identity")])


def _classifier(total, c) -> MLP:
    A = Affine(total, 1).add(c, 0)
    return MLP([A.perceptron("relu"), Affine(1).keep([0]).perceptron("identity")])


def _layer_map(L, steps, where):
    m = {to_text(g): "initial" for g in L.subs if isinstance(g, (Top, Prop))}
    for st, idx in zip(steps, where):
        for lab in st.labels:
            m.setdefault(lab, [])
            if m[lab] == "initial":
                continue
            m[lab] = sorted(set(m[lab]) | set(idx))
    return m


def _steps(L: _Layout, kind, allow):
    steps, plans = [], {}
    for bkind, batch in _batches(L):
        if bkind not in allow:
            raise CompileError(f"{bkind} subformulas are not supported by this target")
        if bkind == "pl":
            steps.append(_pl_step(L, batch))
        elif bkind == "dia":
            steps.append(_dia_step(L, batch))
        else:
            g = batch[0]
            if allow["glob"] == "uh":
                steps.append(Step([to_text(g)], [], [HeadSpec({L.col[Top()]: 1}, {L.col[g.child]: 1},
                                                              {L.col[g.child]: 1}, L.col[g])], inplace=True))
            else:
                ss, plan = _glob_steps(L, g, kind)
                steps += ss
                plans[to_text(g)] = plan
    return steps, plans


# -- targets -------------------------------------------------------------------------

def compile_plgc_to_gt_float(f, attention="softmax", fmt=None, ell=None):
    """PL+GC formula to a simple GT over a float format; returns (format, network)."""
    if attention not in ("softmax", "average-hard", "average-hard-direct"):
        raise CompileError(f"unsupported attention {attention!r}")
    f, subs, col = prepare(f, "PL+GC")
    fmt = _format(f, fmt)
    ell = _ell(f, ell)
    L = _Layout(subs, col, N_AUX)
    L.fmt = fmt
    steps, plans = _steps(L, attention, {"pl": 1, "glob": "count"})
    layers, where, src = realize_gt(steps, L.D, attention)
    total = 2 * L.D
    net = Network("GT", ell, total, _initial(L, ell, total), layers, _classifier(total, src + col[f]),
                  {"float": {"p": fmt.p, "q": fmt.q}})
    rep = CompilationReport(
        fragment=fragment_of(f), target="GT", backend=net.backend, layer_count=len(layers),
        hidden_dim=total, layer_map=_layer_map(L, steps, where),
        columns={**{to_text(g): c for g, c in col.items()}, **{f"aux{n + 1}": c for n, c in enumerate(L.aux)}},
        format=str(fmt), attention=attention,
        branches={k: p.case for k, p in plans.items()},
        witnesses={"big_logit": str(big_logit(fmt)), **{k: p.witness() for k, p in plans.items()}})
    return fmt, attach(net, rep)


def compile_plg_to_uhgt_float(f, fmt=None, ell=None) -> Network:
    """PL+G formula to a simple unique-hard-attention GT over a float format."""
    f, subs, col = prepare(f, "PL+G")
    fmt = _format(f, fmt)
    ell = _ell(f, ell)
    L = _Layout(subs, col, 0)
    L.fmt = fmt
    steps, _ = _steps(L, "unique-hard", {"pl": 1, "glob": "uh"})
    layers, where, src = realize_gt(steps, L.D, "unique-hard")
    total = 2 * L.D
    net = Network("GT", ell, total, _initial(L, ell, total), layers, _classifier(total, src + col[f]),
                  {"float": {"p": fmt.p, "q": fmt.q}})
    rep = CompilationReport(
        fragment=fragment_of(f), target="GT", backend=net.backend, layer_count=len(layers),
        hidden_dim=total, layer_map=_layer_map(L, steps, where),
        columns={to_text(g): c for g, c in col.items()}, format=str(fmt), attention="unique-hard")
    return attach(net, rep)


def compile_gmlgc_to_gps_float(f, attention="average-hard", fmt=None, ell=None):
    """GML+GC formula to a simple GPS network over a float format; returns (format, network)."""
    if attention not in ("softmax", "average-hard", "average-hard-direct"):
        raise CompileError(f"unsupported attention {attention!r}")
    f, subs, col = prepare(f, "GML+GC")
    fmt = _format(f, fmt)
    ell = _ell(f, ell)
    L = _Layout(subs, col, N_AUX)
    L.fmt = fmt
    steps, plans = _steps(L, attention, {"pl": 1, "dia": 1, "glob": "count"})
    layers, where, src = realize_gps(steps, L.D, attention)
    total = 3 * L.D
    net = Network("GPS", ell, total, _initial(L, ell, total), layers, _classifier(total, src + col[f]),
                  {"float": {"p": fmt.p, "q": fmt.q}})
    rep = CompilationReport(
        fragment=fragment_of(f), target="GPS", backend=net.backend, layer_count=len(layers),
        hidden_dim=total, layer_map=_layer_map(L, steps, where),
        columns={**{to_text(g): c for g, c in col.items()}, **{f"aux{n + 1}": c for n, c in enumerate(L.aux)}},
        format=str(fmt), attention=attention,
        branches={k: p.case for k, p in plans.items()},
        witnesses={"big_logit": str(big_logit(fmt)), **{k: p.witness() for k, p in plans.items()}})
    return fmt, attach(net, rep)


def compile_gml_to_gnn_float(f, variant=None, fmt=None, ell=None) -> Network:
    """GML (GNN), GML+G (GNN+G) or GML+GC (GNN+GC) formula to a float GNN.

    Every layer is the same: column j becomes trunc-relu(x C + a A + b)_j,
    the global columns are produced by the readout.  depth(f) layers.

    The readout sees x + MP(x), where the MP has already zeroed the global
    columns.  A global whose child is global therefore reads a copy column
    that the MP fills with the child's previous value.
    """
    frag = fragment_of(prepare(f, "GML+GC")[0])
    if variant is None:
        variant = {"": "GNN", "+G": "GNN+G", "+GC": "GNN+GC"}[frag[frag.find("+"):] if "+" in frag else ""]
    allowed = {"GNN": "GML", "GNN+G": "GML+G", "GNN+GC": "GML+GC"}
    if variant not in allowed:
        raise CompileError(f"unknown GNN variant {variant!r}")
    f, subs, col = prepare(f, allowed[variant])
    fmt = _format(f, fmt)
    ell = _ell(f, ell)
    copy = {}
    for g in subs:
        if isinstance(g, Glob) and isinstance(g.child, Glob) and g.child not in copy:
            copy[g.child] = len(subs) + len(copy)
    D = len(subs) + len(copy)
    L = _Layout(subs, col, 0)
    first = Affine(2 * D, 2 * D)
    second = Affine(2 * D, D)
    for c in range(D):
        first.add(c, c)
        second.add(c, c, -1).add(D + c, c)
    globs = []
    for g in subs:
        t = D + col[g]
        if isinstance(g, Prop):
            first.add(col[g], t)
        elif isinstance(g, Top):
            first.bias(t, 1)
        elif isinstance(g, Not):
            first.add(col[g.child], t, -1).bias(t, 1)
        elif isinstance(g, And):
            first.add(col[g.left], t).add(col[g.right], t).bias(t, -1)
        elif isinstance(g, Dia):
            first.add(D + col[g.child], t).bias(t, 1 - g.grade)
        else:
            globs.append(g)
    for g, c in copy.items():
        first.add(col[g], D + c)
    acts = ("relu",) * D + ("trunc-relu",) * D
    com = MLP([first.perceptron(acts), second.perceptron("identity")])
    layers = []
    for _ in range(depth(f)):
        mp = MessagePassing(com, "sum")
        if variant == "GNN":
            layers.append(MPLayer(mp))
            continue
        R = Affine(D)
        for g in globs:
            R.add(copy.get(g.child, col[g.child]), col[g]).bias(col[g], 1 - g.grade)
        ro = MLP([R.perceptron("trunc-relu"), Affine(D).keep(range(D)).perceptron("identity")])
        layers.append(MPReadoutLayer(mp, Readout(ro, "set-sum" if variant == "GNN+G" else "sum")))
    net = Network(variant, ell, D, _initial(L, ell, D), layers, _classifier(D, col[f]),
                  {"float": {"p": fmt.p, "q": fmt.q}})
    rep = CompilationReport(
        fragment=fragment_of(f), target=variant, backend=net.backend, layer_count=len(layers),
        hidden_dim=D, layer_map={to_text(g): ("initial" if isinstance(g, (Top, Prop)) else [depth(g) - 1])
                                 for g in subs},
        columns=dict({to_text(g): c for g, c in col.items()}, **{f"copy:{to_text(g)}": c for g, c in copy.items()}),
        format=str(fmt))
    return attach(net, rep)
