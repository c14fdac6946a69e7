"""Rewrite the golden format reports under tests/golden (run after an intended change)."""
import argparse
from pathlib import Path

from gtlogic.floatfmt import FloatFormat
from gtlogic.verify import format_report

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=GOLDEN)
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for p, q in [(4, 3)]:
        r = format_report(FloatFormat(p, q))
        path = args.out / f"format_F{p}{q}.json"
        r.save(path)
        print(f"wrote {path} ({'PASS' if r.passed else 'FAIL'})")


if __name__ == "__main__":
    main()
