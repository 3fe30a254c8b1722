"""Identifiability and irrepresentability curves on a reference matrix.

    python scripts/run_curves.py --setting setting1 --samples 1000 --out curves.csv
"""
import argparse
import time

from signrec.core_model import RngStream, reference_design
from signrec.curves import KINDS, curves, write_curves


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--setting", default="setting1", choices=["setting1", "setting2"])
    ap.add_argument("--kmax", type=int, default=60)
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--sign-mode", default="symmetric", choices=["symmetric", "positive"])
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--out", default="curves.csv")
    a = ap.parse_args()

    X = reference_design(a.setting)
    t0 = time.perf_counter()
    pts = curves(X, KINDS, range(1, a.kmax + 1), a.samples, a.sign_mode, RngStream(a.seed).child("curve"), a.threads)
    write_curves(a.out, pts, a.seed)
    print(f"{len(pts)} points in {time.perf_counter() - t0:.0f}s -> {a.out}")
    for kind in KINDS:
        row = [p for p in pts if p.curve_kind == kind]
        # crude transition: largest k with proportion >= 0.5
        k50 = max((p.k for p in row if p.proportion >= 0.5), default=0)
        print(f"{kind:>20}: p >= 0.5 up to k = {k50}")


if __name__ == "__main__":
    main()
