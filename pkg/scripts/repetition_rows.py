"""Logical Z-error rate of a hole qudit against the number of holes per row.

    python scripts/repetition_rows.py --d 3 --rows 1 2 3 --p 0.03 --trials 20000

Also reports the smallest shift-fault weight that defeats each layout
(exhaustive up to --max-weight).
"""
import argparse

from qdouble.noise import NoiseLayout, NoiseModel, enumerate_faults, estimate_logical_rate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--rows", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--separation", type=int, default=2)
    ap.add_argument("--p", type=float, default=0.03)
    ap.add_argument("--trials", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-weight", type=int, default=2)
    args = ap.parse_args()

    Lx = max(args.rows) + 5
    Ly = max(2 * args.separation + 4, 8)
    print(f"{'N':>3} {'min weight':>11} {'Z rate':>9}  95% interval")
    for n in args.rows:
        layout = NoiseLayout(Lx, Ly, args.d, args.separation, n)
        rep = enumerate_faults(layout, "x", args.max_weight, stop_at_first=True)
        w = rep.min_failing_weight
        est = estimate_logical_rate(layout, NoiseModel(p_x=args.p), args.trials, args.seed)
        lo, hi = est.z_interval
        print(f"{n:>3} {w if w else '>' + str(args.max_weight):>11} {est.z_rate:>9.5f}  [{lo:.5f}, {hi:.5f}]")


if __name__ == "__main__":
    main()
