"""Command line entry point: gtlogic <subcommand> ...

Exit status: 0 success, 1 verification failure (or non-equivalence for
``bisim``), 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bisim
from . import floatfmt as ff
from .compile import CompileError, report_of
from .graphs import LabeledGraph, enumerate_graphs, load_graph, word_graph
from .logic import ParseError, eval_formula, max_prop, parse
from .nn import AlphabetMismatch, load_network, network_forward, resolve_backend, save_network
from .nn.backends import ExactTranscendental
from . import verify as V


class UsageError(Exception):
    pass


def _formula(text: str):
    path = Path(text)
    if path.suffix and path.is_file():
        text = path.read_text().strip()
    try:
        return parse(text)
    except ParseError as e:
        raise UsageError(f"bad formula: {e}") from e


def _graph(args, ell=None) -> LabeledGraph:
    if getattr(args, "word", None):
        g = word_graph(args.word)
    elif getattr(args, "graph", None):
        g = load_graph(args.graph)
    else:
        raise UsageError("need --graph or --word")
    return g.with_label_count(ell) if ell is not None and g.label_count < ell else g


def _fmt(args):
    if (args.p is None) != (args.q is None):
        raise UsageError("--p and --q go together")
    return ff.FloatFormat(args.p, args.q) if args.p is not None else None


def _bits(row) -> str:
    return " ".join(str(int(b)) for b in row)


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


# -- subcommands ----------------------------------------------------------------------

def cmd_compile(args) -> int:
    f = _formula(args.formula)
    fmt = _fmt(args)
    net = V.compile_target(args.target, f, args.attention, fmt, args.ell)
    save_network(net, args.out)
    rep_path = args.report or str(Path(args.out).with_suffix("")) + ".report.json"
    rep = report_of(net)
    _write_json(rep_path, rep.to_dict() if rep else {})
    print(f"{net.kind} network: {len(net.layers)} layers, width {net.d}, backend {json.dumps(net.backend)}")
    print(f"wrote {args.out} and {rep_path}")
    return 0


def cmd_eval(args) -> int:
    net = load_network(args.net)
    g = _graph(args, net.ell)
    if args.backend:
        net = V.rehost(net, json.loads(args.backend) if args.backend.startswith("{") else args.backend)
    bk = resolve_backend(net)
    if args.features:
        _, feats = network_forward(net, g, bk, trace=True)
        for row in bk.to_values(feats[-1]):
            print(" ".join(_show(bk, v) for v in row))
        return 0
    y = network_forward(net, g, bk)
    if args.values:
        print(" ".join(_show(bk, v) for v in bk.to_values(y)))
    else:
        print(_bits(bk.positive(y)))
    return 0


def _show(bk, v) -> str:
    fmt = getattr(bk, "fmt", None)
    return V.fv_text(fmt, v) if fmt is not None else str(v)


def cmd_check(args) -> int:
    f = _formula(args.formula)
    g = _graph(args, max_prop(f) + 1)
    print(_bits(eval_formula(g, f)))
    return 0


def cmd_verify(args) -> int:
    formulas = list(args.formula or [])
    if args.formulas_file:
        formulas += [ln.strip() for ln in Path(args.formulas_file).read_text().splitlines()
                     if ln.strip() and not ln.startswith("#")]
    ref = formulas if formulas else args.corpus
    try:
        graphs = V.GraphCorpus(args.graphs, args.n_min, args.n_max, args.count, args.labels, args.edge_prob)
        fmt = (args.p, args.q) if args.p is not None else None
        if (args.p is None) != (args.q is None):
            raise UsageError("--p and --q go together")
        backend = args.backend
        if backend and backend.startswith("{"):
            backend = json.loads(backend)
        c = V.Campaign(ref, graphs, args.target, args.attention, backend, args.mode, args.tolerance,
                       args.seed, fmt, args.ell, args.mutation)
    except ValueError as e:
        raise UsageError(str(e)) from e
    if args.pairs:
        nets = []
        for t in V.corpus(ref):
            try:
                nets.append((t, V._net_for(c, parse(t))))
            except (CompileError, ValueError) as e:
                print(f"skip {t}: {e}", file=sys.stderr)
        pairs = V.make_pairs(args.pairs, args.count, args.seed)
        rep = V.run_invariance(nets, pairs, args.tolerance, {"campaign": c.to_dict(), "generator": args.pairs})
    else:
        rep = V.run_equivalence(c, jobs=args.jobs)
    if args.out:
        rep.save(args.out)
    print(rep.summary())
    return 0 if rep.passed else 1


def cmd_analyze(args) -> int:
    fmt = _fmt(args)
    if fmt is None:
        raise UsageError("analyze needs --p and --q")
    try:
        rep = V.format_report(fmt, checks=not args.no_checks, seed=args.seed, samples=args.samples)
    except ValueError as e:
        raise UsageError(str(e)) from e
    if args.out:
        rep.save(args.out)
    it = rep.items[0]
    print(f"{it['format']}: f_min={it['f_min']} max={it['max_finite']} "
          f"saturation k={it['saturation']['threshold']}")
    if "nonassociativity" in it:
        w = it["nonassociativity"]
        print(f"({w['a']} + {w['b']}) + {w['c']} = {w['left']} but {w['a']} + ({w['b']} + {w['c']}) = {w['right']}")
    for row in it["underflow"]:
        if args.verbose:
            print(f"  underflow f={row['f']}: F' * f = 0 iff |F'| <= {row['bound']}")
    for key in ("saturation_check", "underflow_check"):
        if key in it:
            print(f"{key}: {it[key]}")
    print("PASS" if rep.passed else "FAIL")
    return 0 if rep.passed else 1


def cmd_bisim(args) -> int:
    g1, g2 = load_graph(args.graph1), load_graph(args.graph2)
    ell = max(g1.label_count, g2.label_count)
    g1, g2 = g1.with_label_count(ell), g2.with_label_count(ell)
    for g, v in ((g1, args.v1), (g2, args.v2)):
        if not 0 <= v < g.n:
            raise UsageError(f"vertex {v} out of range")
    if args.check == "partition":
        print(bisim.graded_partition(g1, g2).table())
        return 0
    if args.check == "game":
        try:
            cfg = bisim.GameConfig(args.c, args.rounds, args.variant)
            ok = bisim.play_game(g1, args.v1, g2, args.v2, cfg)
        except (ValueError, bisim.BudgetExceeded) as e:
            raise UsageError(str(e)) from e
        print(f"duplicator wins: {'yes' if ok else 'no'} (c={args.c}, rounds={args.rounds}, {args.variant})")
        return 0 if ok else 1
    fn = {"graded": bisim.check_graded_bisim, "global": bisim.check_global,
          "ratio": bisim.check_ratio, "label-ratio": bisim.label_ratio}[args.check]
    res = fn(g1, args.v1, g2, args.v2)
    ok = bool(res)
    extra = f" ({res})" if ok and not isinstance(res, bool) else ""
    print(f"{args.check} equivalent: {'yes' if ok else 'no'}{extra}")
    return 0 if ok else 1


def cmd_enumerate(args) -> int:
    if args.mode == "words":
        gs = (word_graph([(m // args.labels ** i) % args.labels for i in range(n)], args.labels)
              for n in range(args.n_min, args.n_max + 1) for m in range(args.labels ** n))
    else:
        try:
            gs = enumerate_graphs(args.n_max, args.labels, args.mode, args.seed, args.count, args.n_min,
                                  args.edge_prob)
            gs = list(gs)
        except ValueError as e:
            raise UsageError(str(e)) from e
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        count = 0
        for g in gs:
            out.write(g.to_json() + "\n")
            count += 1
    finally:
        if args.out:
            out.close()
    if args.out:
        print(f"wrote {count} graphs to {args.out}")
    return 0


# -- parser -----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gtlogic", description="Logic-to-network compilers and verifiers.")
    sub = ap.add_subparsers(dest="command", required=True)

    def fmt_flags(p):
        p.add_argument("--p", type=int, help="significand bits of the float format")
        p.add_argument("--q", type=int, help="exponent bits of the float format")

    p = sub.add_parser("compile", help="formula -> network + compilation report")
    p.add_argument("--formula", required=True, help="formula text or a file containing it")
    p.add_argument("--target", default="gps-real", choices=sorted(V.TARGETS))
    p.add_argument("--attention", choices=["softmax", "average-hard"])
    p.add_argument("--ell", type=int, help="label alphabet size (default: labels used)")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--report", help="report path (default: <out>.report.json)")
    fmt_flags(p)
    p.set_defaults(fn=cmd_compile)

    p = sub.add_parser("eval", help="network + graph -> per-vertex bits")
    p.add_argument("--net", required=True)
    p.add_argument("--graph")
    p.add_argument("--word", help='word such as "p0 p1 p0"')
    p.add_argument("--backend", help='override: exact, f64 or {"float": {"p": 4, "q": 4}}')
    g = p.add_mutually_exclusive_group()
    g.add_argument("--features", action="store_true", help="print final features per vertex")
    g.add_argument("--values", action="store_true", help="print classifier outputs instead of bits")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("check", help="formula + graph -> model-checking bits")
    p.add_argument("--formula", required=True)
    p.add_argument("--graph")
    p.add_argument("--word")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("verify", help="equivalence (or invariance) campaign")
    p.add_argument("--corpus", default="gml-g", choices=sorted(V.CORPORA))
    p.add_argument("--formula", action="append", help="formula (repeatable); overrides --corpus")
    p.add_argument("--formulas-file")
    p.add_argument("--target", default="basic-gps-real", choices=sorted(V.TARGETS))
    p.add_argument("--attention", choices=["softmax", "average-hard"])
    p.add_argument("--graphs", default="exhaustive", choices=["exhaustive", "random", "count-sweep", "words"])
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--n-max", type=int, default=3)
    p.add_argument("--count", type=int, default=100, help="graphs per size, or pairs with --pairs")
    p.add_argument("--labels", type=int, default=2)
    p.add_argument("--edge-prob", type=float, default=0.5)
    p.add_argument("--backend")
    p.add_argument("--mode", default="bit-exact", choices=["bit-exact", "tolerance"])
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--mutation", choices=["flip-bias"])
    p.add_argument("--pairs", choices=sorted(V.PAIR_GENERATORS), help="run an invariance experiment instead")
    p.add_argument("--ell", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--out")
    fmt_flags(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("analyze", help="float format report")
    fmt_flags(p)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--no-checks", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("-o", "--out")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("bisim", help="bisimulation checks and games")
    p.add_argument("--graph1", required=True)
    p.add_argument("--graph2", required=True)
    p.add_argument("--v1", type=int, default=0)
    p.add_argument("--v2", type=int, default=0)
    p.add_argument("--check", default="graded", choices=["graded", "global", "ratio", "label-ratio", "game",
                                                          "partition"])
    p.add_argument("--c", type=int, default=1)
    p.add_argument("--rounds", type=int, default=2)
    p.add_argument("--variant", default="down-only", choices=list(bisim.VARIANTS))
    p.set_defaults(fn=cmd_bisim)

    p = sub.add_parser("enumerate", help="graph corpus as JSON lines")
    p.add_argument("--mode", default="exhaustive", choices=["exhaustive", "random", "words"])
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--n-max", type=int, default=2)
    p.add_argument("--labels", type=int, default=2)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--edge-prob", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out")
    p.set_defaults(fn=cmd_enumerate)
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if getattr(args, "jobs", 1) < 1:
        print("gtlogic: error: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.fn(args)
    except (UsageError, CompileError, AlphabetMismatch, ExactTranscendental, FileNotFoundError,
            json.JSONDecodeError, ValueError) as e:
        print(f"gtlogic {args.command}: error: {e}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
