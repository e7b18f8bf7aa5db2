"""Closed-form critical constants of the disordered model.

Finite-``lam`` values are large-``beta`` asymptotics; compare solver
divergence flags against them with a guard band, not exact equality.
"""
from __future__ import annotations

import math


def _need(cond, msg):
    if not cond:
        raise ValueError(msg)


def bernoulli_hc_eps_cr() -> float:
    """Hard-core Bernoulli(1/2) width above which BEC is suppressed at ``rho = 1/2``."""
    return 2.0


def eps_cr_bernoulli(lam: float, p: float) -> float:
    """Large-but-finite ``lam`` correction ``2 / (1 - (1-p)/lam)`` to the hard-core value."""
    _need(lam > 1.0 - p, "eps_cr_bernoulli needs lam > 1 - p")
    return 2.0 / (1.0 - (1.0 - p) / lam)


def lambda_c1(eps: float, p: float) -> float:
    """Critical repulsion for ``rho = 1`` under Bernoulli(p, eps)."""
    return 0.5 * (3.0 + math.sqrt(9.0 + 2.0 * eps * (1.0 - 2.0 * p + 0.5 * eps)))


def lambda_ck_nonrandom(k: int) -> float:
    _need(k >= 1, "k must be >= 1")
    return 2.0 * k + 1.0


def lambda_c_1mp(eps: float, p: float) -> float:
    """Critical repulsion at ``rho = 1 - p`` (finite ``lam``), ``eps > 2``."""
    _need(eps > 2, "lambda_c_1mp needs eps > 2")
    return eps / 4.0 + eps * (1.0 - p) / (eps - 2.0)


def eps_cr2_pm(lam: float, p: float) -> tuple[float, float]:
    """Roots ``(eps_-, eps_+)`` of ``eps^2/2 - (2 lam - 1 + 2p) eps + 8 lam = 0``."""
    b = 2.0 * lam - 1.0 + 2.0 * p
    disc = b * b - 16.0 * lam
    _need(disc >= 0, "eps_cr2_pm has no real roots for these parameters")
    s = math.sqrt(disc)
    return b - s, b + s


def lambda_c_2mp(eps: float, p: float) -> float:
    """Critical repulsion at ``rho = 2 - p``, for ``eps > 4`` and ``p > 1/2``."""
    _need(eps > 4 and p > 0.5, "lambda_c_2mp needs eps > 4 and p > 1/2")
    return 2.0 * (2.0 * p - 1.0) / (eps - 4.0)


def trinomial_hc_eps_cr() -> float:
    return 28.0 / 9.0


def trinomial_eps_cr(lam: float) -> float:
    """Trinomial width below which BEC is suppressed at ``rho = 1``; ``lam >= 3``."""
    _need(lam >= 3, "trinomial_eps_cr needs lam >= 3")
    return 2.0 * lam * math.sqrt((lam - 3.0) / (lam - 1.0))


def uniform_lambda_ck(eps: float, k: int) -> float:
    """``(eps/2) coth(eps / (2(2k+1)))``; tends to ``2k+1`` as ``eps -> 0``."""
    _need(k >= 1, "k must be >= 1")
    if eps == 0:
        return 2.0 * k + 1.0
    u = eps / (2 * k + 1)
    return 0.5 * eps * (math.exp(u) + 1.0) / math.expm1(u)


def small_lambda_mu(eps: float) -> float:
    """Critical ``mu`` of the uniform law in the ``lam -> 0`` limit (positive for ``eps > 0``)."""
    if eps == 0:
        return 0.0
    return (math.expm1(eps) - eps) / math.expm1(eps)


def M_p(mu: float, eps: float, p: float) -> float:
    """``p/|mu - eps - 1| + (1-p)/|mu - 1|``."""
    return p / abs(mu - eps - 1.0) + (1.0 - p) / abs(mu - 1.0)


def eps_p(p: float) -> float:
    """Width above which ``M_p < 1`` somewhere between the poles."""
    return 1.0 + 2.0 * math.sqrt(p * (1.0 - p))


def mu_pm(eps: float, p: float) -> tuple[float, float]:
    """``(mu_-, mu_+)`` where ``M_p = 1`` between the poles; BEC needs ``mu`` outside."""
    disc = (0.5 * (eps - 1.0)) ** 2 - p * (1.0 - p)
    _need(eps > eps_p(p) and disc > 0, "mu_pm needs eps > 1 + 2 sqrt(p(1-p))")
    c = 0.5 * (eps + 3.0) - p
    s = math.sqrt(disc)
    return c - s, c + s


def gap_interval(eps: float, p: float) -> tuple[float, float]:
    return mu_pm(eps, p)


def table(lam: float, p: float, eps: float) -> dict:
    """Every constant evaluated at ``(lam, p, eps)``; inapplicable ones map to None."""

    def safe(f, *args):
        try:
            return f(*args)
        except (ValueError, ZeroDivisionError):
            return None

    return {
        "bernoulli_hc_eps_cr": bernoulli_hc_eps_cr(),
        "eps_cr_bernoulli": safe(eps_cr_bernoulli, lam, p),
        "lambda_c1": lambda_c1(eps, p),
        "lambda_ck_nonrandom_1": lambda_ck_nonrandom(1),
        "lambda_ck_nonrandom_2": lambda_ck_nonrandom(2),
        "lambda_c_1mp": safe(lambda_c_1mp, eps, p),
        "eps_cr2_pm": safe(eps_cr2_pm, lam, p),
        "lambda_c_2mp": safe(lambda_c_2mp, eps, p),
        "trinomial_hc_eps_cr": trinomial_hc_eps_cr(),
        "trinomial_eps_cr": safe(trinomial_eps_cr, lam),
        "uniform_lambda_c1": uniform_lambda_ck(eps, 1),
        "small_lambda_mu": small_lambda_mu(eps),
        "eps_p": eps_p(p),
        "mu_pm": safe(mu_pm, eps, p),
    }
