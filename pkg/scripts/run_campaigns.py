"""Run the compiler equivalence campaigns and save one JSON report per campaign.

    python3 scripts/run_campaigns.py --out reports/          # full scale (about 12 minutes)
    python3 scripts/run_campaigns.py --out reports/ --quick  # small graphs only
"""
import argparse
import time
from pathlib import Path

from gtlogic.verify import Campaign, GraphCorpus, run_equivalence


def campaigns(quick: bool):
    n3, rnd, sweep = (2, 20, 12) if quick else (3, 400, 49)
    exh = GraphCorpus("exhaustive", 1, n3)
    for att in ("softmax", "average-hard"):
        yield f"gps-real-{att}-exhaustive", Campaign("gml-g", exh, target="gps-real", attention=att)
        yield f"gps-real-{att}-random", Campaign("gml-g", GraphCorpus("random", 4, 8, count=rnd),
                                                 target="gps-real", attention=att)
        yield f"gt-float-{att}-sweep", Campaign("pl-gc", GraphCorpus("count-sweep", 1, sweep, count=1),
                                               target="gt-float", attention=att)
    for corpus, target in (("gml", "gnn-float"), ("gml-g", "gnn+g-float"), ("gml-gc", "gnn+gc-float")):
        yield f"{target}-exhaustive", Campaign(corpus, exh, target=target)
        yield f"{target}-random", Campaign(corpus, GraphCorpus("random", 4, 8, count=rnd // 4), target=target)
    yield "uhgt-float-words", Campaign("pl-g", GraphCorpus("words", 1, 5), target="uhgt-float")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", type=Path, default=Path("reports"))
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    failed = 0
    for name, c in campaigns(args.quick):
        t0 = time.time()
        r = run_equivalence(c, jobs=args.jobs)
        r.save(args.out / f"{name}.json")
        failed += not r.passed
        print(f"{name:36s} {'PASS' if r.passed else 'FAIL'} {r.totals()} {time.time() - t0:6.1f}s")
    raise SystemExit(1 if failed else 0)


if __name__ == "__main__":
    main()
