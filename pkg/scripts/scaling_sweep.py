"""Logical X-error rate against clock-fault probability for several hole separations.

    python scripts/scaling_sweep.py --d 3 --separations 2 3 4 --trials 20000 --out scaling.csv

Prints the fitted log-log exponent per separation next to ceil(s/2).
"""
import argparse
import math
from pathlib import Path

from qdouble.noise import NoiseLayout, NoiseModel, estimate_logical_rate, fit_scaling_exponent, rows_to_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--separations", type=int, nargs="+", default=[2, 3, 4])
    ap.add_argument("--ps", type=float, nargs="+", default=[0.02, 0.04, 0.08])
    ap.add_argument("--trials", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args()

    rows = []
    for s in args.separations:
        layout = NoiseLayout.default(args.d, s)
        rates = []
        for p in args.ps:
            est = estimate_logical_rate(layout, NoiseModel(p_z=p), args.trials, args.seed, args.workers)
            rates.append(est.x_rate)
            rows.append({"d": args.d, "s": s, "p": p, "trials": args.trials, "x_failures": est.x_failures,
                         "x_rate": est.x_rate, "x_lo": est.x_interval[0], "x_hi": est.x_interval[1]})
            print(f"s={s} p={p}: {est.x_failures}/{args.trials}")
        if all(rates):
            fit = fit_scaling_exponent(args.ps, rates)
            print(f"s={s}: exponent {fit.exponent:.3f} (ceil(s/2) = {math.ceil(s / 2)})")
        else:
            print(f"s={s}: some rates are zero; raise --trials to fit")
    if args.out:
        args.out.write_text(rows_to_csv(rows))


if __name__ == "__main__":
    main()
