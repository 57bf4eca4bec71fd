"""Scan the one-point slope fit over the real part of the base point.

Prints alpha_hat +- stderr (predicted) for s in {0, 0.2, 0.4} at each Re z.
"""
import argparse

from slelab.martingale import alpha_slope_fit

EPS = [0.1, 0.05, 0.025, 0.0125]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kappa", type=float, default=2.0)
    ap.add_argument("--samples", type=int, default=2000)
    ap.add_argument("--steps", type=int, default=500)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    print("re_z", "s=0", "s=0.2", "s=0.4")
    for re_z in (0.1, 0.25, 0.5, 1.0, 2.0):
        cells = []
        for s in (0.0, 0.2, 0.4):
            f = alpha_slope_fit(args.kappa, s, EPS, re_z=re_z, n_samples=args.samples,
                                seed=args.seed, steps=args.steps)
            cells.append(f"{f.alpha_hat:.3f}+-{f.stderr:.3f}({f.predicted:.3f})")
        print(re_z, *cells, flush=True)


if __name__ == "__main__":
    main()
