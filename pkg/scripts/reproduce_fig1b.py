"""Wall time of each basis construction versus operator size ``n``.

Writes ``fig1b.csv`` (method, n, rank, median seconds). The full-SVD baseline
is skipped above the dense size cap.
"""
import argparse
import logging

from tuckerhull.experiments import METHODS, timing_curve
from tuckerhull.io import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[128, 256, 512])
    ap.add_argument("--methods", nargs="+", default=list(METHODS), choices=METHODS)
    ap.add_argument("--rank", type=int, default=10)
    ap.add_argument("--reps", type=int, default=3)
    ap.add_argument("--out", default="fig1b.csv")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    records = timing_curve(args.sizes, methods=args.methods, reps=args.reps, rank=args.rank)
    write_csv(args.out, records)
    t = {(r.method, r.n): r.value for r in records}
    for n in args.sizes:
        if ("SVD", n) in t and ("HOSVD", n) in t:
            print(f"n={n}: SVD/HOSVD = {t['SVD', n] / t['HOSVD', n]:.1f}x")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
