"""Box-counting dimension of SLE traces and the Koch curve on several mesh ranges."""
import argparse
import time

import numpy as np

from slelab.drivers import brownian_driver
from slelab.estimators import box_counting_dimension, koch_curve
from slelab.loewner import trace


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kappa", type=float, default=2.0)
    ap.add_argument("--steps", type=int, default=50_000)
    ap.add_argument("--seeds", type=int, default=2)
    args = ap.parse_args()
    koch = koch_curve(6)
    for meshes in (np.geomspace(1 / 3, 1 / 300, 6), 3.0 ** -np.arange(1, 6), np.geomspace(0.2, 0.005, 8)):
        print(f"koch {meshes[0]:.3g}..{meshes[-1]:.3g}: {box_counting_dimension(koch, meshes).dimension:.4f}")
    for seed in range(args.seeds):
        t0 = time.perf_counter()
        tr = trace(brownian_driver(args.kappa, 1.0, args.steps, seed), method="blocked")
        took = time.perf_counter() - t0
        for lo in (0.005, 0.01, 0.02):
            r = box_counting_dimension(tr, np.geomspace(0.4, lo, 8), min_decades=1.3)
            print(f"seed {seed} ({took:.1f}s) finest {lo}: dim {r.dimension:.3f}", flush=True)
    print(f"predicted {1 + args.kappa / 8:.4f}")


if __name__ == "__main__":
    main()
