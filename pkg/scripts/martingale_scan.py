"""Martingale mean at rho_opt(kappa, 1/2) and the IS/MC agreement check."""
import math
import time

from slelab.exponents import rho_opt
from slelab.martingale import MartingaleParams, check_martingale, tail_probability_is, tail_probability_mc


def main():
    for k in (2.0, 8 / 3, 4.0):
        t0 = time.perf_counter()
        m, se = check_martingale(MartingaleParams(k, rho_opt(k, 0.5), 0.5 + 0.2j), 0.5, 10_000, 10_000, 7)
        print(f"kappa {k:.4g}: mean {m:.4f} +- {se:.4f} z={(m - 1) / se:+.2f} ({time.perf_counter() - t0:.0f}s)",
              flush=True)
    for re_z in (0.5, 1.0):
        a = tail_probability_is(2.0, 0.3, re_z + 0.1j, n_samples=10_000, seed=3)
        b = tail_probability_mc(2.0, 0.3, re_z + 0.1j, n_samples=10_000, seed=4)
        z = (a.p_hat - b.p_hat) / math.hypot(a.stderr, b.stderr)
        print(f"Re z {re_z}: IS {a.p_hat:.4f}+-{a.stderr:.4f} MC {b.p_hat:.4f}+-{b.stderr:.4f} z={z:+.2f}")


if __name__ == "__main__":
    main()
