"""Finite-volume gap between the exact and approximating pressures.

Prints the gap for increasing V and its product with V, which should stay
bounded if the gap is O(1/V).
"""
import argparse

from bhdisorder import oracle


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--beta", type=float, default=1.0)
    ap.add_argument("--mu", type=float, default=0.5)
    ap.add_argument("--lam", type=float, default=1.0)
    ap.add_argument("--n-max", type=int, default=3)
    ap.add_argument("--V", type=int, nargs="*", default=[1, 2, 3, 4, 5])
    args = ap.parse_args()
    print(f"{'V':>3} {'p_exact':>14} {'p_appr':>14} {'gap':>12} {'V*gap':>10}")
    for V in args.V:
        cfg = oracle.LatticeRealization(V, args.n_max, (0.0,) * V, args.beta, args.mu, args.lam)
        pe = oracle.exact_pressure(cfg)
        pa, _ = oracle.approx_pressure_sup(cfg)
        print(f"{V:>3} {pe:14.10f} {pa:14.10f} {pe - pa:12.3e} {V * (pe - pa):10.4f}")


if __name__ == "__main__":
    main()
