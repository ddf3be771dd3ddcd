"""Counting curves of the bare 1D model in the three decay regimes.

Writes one CSV per case with lambda, N, the scaled count and the
phase-space estimate.
"""

import argparse
import math
from pathlib import Path

from twistwave.io import write_csv
from twistwave.onedim import PowerPotential, counting_curve, geometric_lambdas, phase_space_count

CASES = {
    "alpha1_l1": (1.0, 1.0),
    "alpha2_subcritical": (0.2, 2.0),
    "alpha2_supercritical": (0.25 + math.pi**2, 2.0),
    "alpha3": (1.0, 3.0),
}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results/counting_regimes"))
    ap.add_argument("--lam-min", type=float, default=1e-8)
    ap.add_argument("--per-decade", type=int, default=4)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    lams = geometric_lambdas(1e-2, args.lam_min, args.per_decade)
    for name, (l, alpha) in CASES.items():
        V = PowerPotential(l, alpha)
        curve = counting_curve(1.0, V, lams, workers=args.workers)
        if alpha < 2:
            scale = lambda lam: lam ** (1 / alpha - 0.5)
        elif alpha == 2:
            scale = lambda lam: 1 / abs(math.log(lam))
        else:
            scale = lambda lam: 1.0
        rows = [(lam, n, n * scale(lam), phase_space_count(1.0, V, lam) if alpha < 2 else float("nan"), s)
                for lam, n, _, s in curve.rows()]
        write_csv(args.out / f"{name}.csv", ["lambda", "N", "scaled", "phase_space", "stable"], rows)
        print(f"{name}: N(lambda_min)={curve.counts[-1]} scaled={rows[-1][2]:.4f}")


if __name__ == "__main__":
    main()
