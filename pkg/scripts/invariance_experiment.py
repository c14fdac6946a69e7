"""Compare network outputs across ratio-bisimilar pairs.

Random double-precision GPS networks and compiled real networks should agree on
every pair; float-compiled counting networks need not, and the script reports
the first pair they separate.
"""
import argparse

import numpy as np

from gtlogic.nn.randnet import random_network
from gtlogic.verify import CORPORA, compile_target, make_pairs, run_invariance


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nets", type=int, default=50)
    ap.add_argument("--pairs", type=int, default=100, help="pairs per generator")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tolerance", type=float, default=1e-6)
    args = ap.parse_args()

    pairs = (make_pairs("disjoint-copies", args.pairs, args.seed, qs=(2, 3), n_max=4)
             + make_pairs("ratio-surgery", args.pairs, args.seed + 1, n_max=3))
    rng = np.random.default_rng(args.seed)
    nets = [(f"gps{i}", random_network(rng, "GPS", attention=("softmax", "average-hard")[i % 2]))
            for i in range(args.nets)]
    r = run_invariance(nets, pairs, tolerance=args.tolerance)
    print(f"random double GPS: {r.totals()} on {len(pairs)} pairs")
    r = run_invariance([(t, compile_target("gps-real", t, ell=2)) for t in CORPORA["gml-g"]], pairs)
    print(f"compiled real GPS: {r.totals()}")

    for text in ("glob>=2 p0", "glob>=3 (p0 | p1)", "!glob>=2 p1"):
        r = run_invariance([(text, compile_target("gt-float", text, ell=2))],
                           make_pairs("disjoint-copies", 30, args.seed, n_max=3))
        it = r.items[0]
        print(f"gt-float {text!r}: {it['differences']}/{it['pairs']} pairs separated")
        d = it.get("first_difference")
        if d:
            print(f"  e.g. outputs {d['out1']} vs {d['out2']}")


if __name__ == "__main__":
    main()
