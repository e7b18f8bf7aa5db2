"""Compare solver divergence flags with the closed-form critical constants.

For each constant the solver is run just below and just above it (a guard
band absorbs the large-beta asymptotics) and the two statuses are printed.
"""
import math

from bhdisorder import constants as C
from bhdisorder import disorder as dis
from bhdisorder import phase

INF = math.inf


def around(label, value, band, point):
    lo, hi = point(value - band), point(value + band)
    print(f"{label:<40} {value:9.4f}  below: {lo.status:<10} above: {hi.status}")


def main():
    around("lambda_c1, eps=0 (rho=1)", C.lambda_c1(0.0, 0.5), 0.2,
           lambda lam: phase.critical_beta(1.0, lam, dis.point_mass()))
    around("lambda_c1, bernoulli(1/2, 2) (rho=1)", C.lambda_c1(2.0, 0.5), 0.3,
           lambda lam: phase.critical_beta(1.0, lam, dis.bernoulli(0.5, 2.0)))
    around("uniform lambda_c1, eps=3 (rho=1)", C.uniform_lambda_ck(3.0, 1), 0.3,
           lambda lam: phase.critical_beta(1.0, lam, dis.uniform(3.0)))
    around("hard-core bernoulli eps_cr (rho=1/2)", C.bernoulli_hc_eps_cr(), 0.1,
           lambda e: phase.critical_beta(0.5, INF, dis.bernoulli(0.5, e)))
    around("hard-core trinomial eps_cr (rho=1/3)", C.trinomial_hc_eps_cr(), 0.2,
           lambda e: phase.critical_beta(1 / 3, INF, dis.trinomial(e)))
    # suppression below eps_cr(lam): expect divergent below, converged above
    around("trinomial eps_cr(lam=8) (rho=1)", C.trinomial_eps_cr(8.0), 1.0,
           lambda e: phase.critical_beta(1.0, 8.0, dis.trinomial(e)))


if __name__ == "__main__":
    main()
