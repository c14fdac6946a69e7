"""Saturation thresholds, underflow bounds and float sum checks for a list of formats.

    python3 scripts/format_analysis.py 4,3 5,4 4,4 --samples 10000
"""
import argparse

from gtlogic.floatfmt import FloatFormat
from gtlogic.verify import format_report


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("formats", nargs="*", default=["4,3", "5,4"], help="p,q pairs")
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for spec in args.formats:
        p, q = map(int, spec.split(","))
        item = format_report(FloatFormat(p, q), seed=args.seed, samples=args.samples).items[0]
        w = item["nonassociativity"]
        print(f"F({p},{q}) {item['status'].upper()}: f_min={item['f_min']} max={item['max_finite']} "
              f"saturation k={item['saturation']['threshold']} "
              f"stationary {item['saturation_check']['stationary']}/{item['saturation_check']['multisets']} "
              f"underflow {item['underflow_check']['verified']}/{item['underflow_check']['bounds']}")
        print(f"  non-associative: {w['left']} != {w['right']}")


if __name__ == "__main__":
    main()
