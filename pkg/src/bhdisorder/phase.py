"""Critical curves beta_c(rho) from the gap and density equations.

At criticality the disorder-averaged second source derivative of the site
pressure equals 2 while the mean site occupation equals ``rho``:

    E[ptilde_dd(beta, mu - e, lam)] = 2,    E[site_density(beta, mu - e, lam)] = rho.

For each ``beta`` the density equation fixes ``mu``; ``beta_c`` is the
smallest root in ``beta`` of the remaining gap function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import disorder as dis
from . import singlesite as ss
from .disorder import DisorderSpec, QuadratureConfig
from .pressure import crossings

BETA_LO = 1e-3
BETA_MAX = 500.0
SCAN_POINTS = 64
BETA_XTOL = 1e-12
GAP_TOL = 1e-8
DENSITY_TOL = 1e-8
HC_SPLIT = 2.0
PLATEAU_SNAP = 16 * np.finfo(float).eps

CONVERGED = "converged"
DIVERGENT = "divergent"
BELOW_BRACKET = "below_bracket"
FAILED = "failed"


@dataclass(frozen=True)
class CriticalPoint:
    """One sample of the phase boundary. ``beta_c``/``mu_c`` are None unless converged."""

    rho: float
    beta_c: float | None
    mu_c: float | None
    status: str
    beta_max: float = BETA_MAX
    n_roots: int = 0
    message: str = ""

    def to_dict(self) -> dict:
        return {"rho": self.rho, "beta_c": self.beta_c, "mu_c": self.mu_c,
                "status": self.status, "beta_max": self.beta_max,
                "n_roots": self.n_roots, "message": self.message}


@dataclass(frozen=True)
class CriticalCurve:
    lam: float
    spec: DisorderSpec
    points: tuple
    meta: dict = field(default_factory=dict)

    @property
    def rho(self) -> np.ndarray:
        return np.array([p.rho for p in self.points])

    @property
    def beta_c(self) -> np.ndarray:
        """``beta_c`` per point with ``inf`` for divergent and ``nan`` for failed points."""
        out = []
        for p in self.points:
            if p.status == CONVERGED:
                out.append(p.beta_c)
            elif p.status == DIVERGENT:
                out.append(math.inf)
            else:
                out.append(math.nan)
        return np.array(out)


def _mode(lam):
    if math.isinf(lam):
        return "hardcore"
    if lam == 0:
        return "perfect"
    return "finite"


def _check_rho(rho, lam):
    if not (rho > 0 and math.isfinite(rho)):
        raise ValueError(f"density must be finite and > 0, got {rho}")
    if math.isinf(lam) and rho >= 1:
        raise ValueError(f"hard-core density must lie in (0, 1), got {rho}")


# ---------------------------------------------------------------------------
# gap function


def _hc_gap_values(beta, x):
    """``2 tanh(beta x / 2) / x`` split as ``2/|x|`` minus a positive remainder.

    Returns ``(lead, rem)`` with ``lead - rem`` the value; for small
    ``beta |x|`` the whole value goes into ``lead``.
    """
    ax = np.abs(x)
    split = beta * ax >= HC_SPLIT
    safe = np.where(split, ax, 1.0)
    lead = np.where(split, 2.0 / safe, 2.0 * ss.hc_gap_term(beta, x))
    rem = np.where(split, (4.0 / safe) / (np.exp(np.minimum(beta * safe, 700.0)) + 1.0), 0.0)
    return lead, rem


def gap_function(beta: float, mu: float, lam: float, spec: DisorderSpec,
                 quad: QuadratureConfig | None = None) -> float:
    """``E[ptilde_dd(beta, mu - e, lam)] - 2``; its root in ``beta`` is criticality.

    Hard-core: ``E[2 tanh(beta x / 2) / x] - 2`` with ``x = mu - e - 1``,
    evaluated as ``(E[2/|x|] - 2) - E[remainder]`` so that the exponentially
    small remainder is not lost when ``E[2/|x|]`` is close to 2.
    """
    if math.isinf(lam):
        if spec.kind == "discrete":
            lead, rem = _hc_gap_values(beta, mu - spec.values - 1.0)
            w = spec.weights
            return float((np.dot(w, lead) - 2.0) - np.dot(w, rem))
        return dis.expect(spec, lambda e: 2.0 * ss.hc_gap_term(beta, mu - e - 1.0), quad,
                          breakpoints=[mu - 1.0], layer=1.0 / beta) - 2.0
    return dis.expect(spec, lambda e: ss.ptilde_dd(beta, mu - e, lam), quad,
                      breakpoints=crossings(mu, lam, spec.emax), layer=1.0 / beta) - 2.0


def mean_density(beta: float, mu: float, lam: float, spec: DisorderSpec,
                 quad: QuadratureConfig | None = None) -> float:
    """``E[site_density(beta, mu - e, lam)]``."""
    return dis.expect(spec, lambda e: ss.site_density(beta, mu - e, lam), quad,
                      breakpoints=crossings(mu, lam, spec.emax), layer=1.0 / beta)


# ---------------------------------------------------------------------------
# density equation


def density_log_ratio(beta: float, mu: float, lam: float, spec: DisorderSpec, rho: float,
                      quad: QuadratureConfig | None = None) -> float:
    """``ln E[occupation excess over rho] - ln E[deficit]``.

    Positive iff the mean density exceeds ``rho``, so its sign changes
    once, at the chemical potential. Unlike ``mean_density - rho`` it keeps
    its sign on density plateaus where the mean occupation equals ``rho``
    to machine precision.
    """
    if spec.kind == "discrete":
        # split E[n] - rho = (sum_i w_i b_i - rho) + sum_i w_i (n_i - b_i): the
        # first term is exact, so plateaus created by the disorder itself
        # (all atoms pinned at integer modes) keep their sign too
        base, lpos, lneg = ss.mode_balance(beta, mu - spec.values, lam)
        w = np.asarray(spec.weights, dtype=float)
        c = math.fsum((w * (base - rho)).tolist())
        if abs(c) <= PLATEAU_SNAP * max(1.0, rho):
            # weights such as 1/3 or (1 - p, p) do not sum to 1 exactly; a
            # rounding-level c would otherwise swamp the corrections
            c = 0.0
        lw = np.log(w)
        pos, neg = list(lpos + lw), list(lneg + lw)
        if c > 0:
            pos.append(math.log(c))
        elif c < 0:
            neg.append(math.log(-c))
        a, b = ss.lse(np.array(pos), axis=0), ss.lse(np.array(neg), axis=0)
    else:
        kw = dict(quad=quad, breakpoints=crossings(mu, lam, spec.emax), layer=1.0 / beta)
        a = dis.log_expect(spec, lambda e: ss.density_balance(beta, mu - e, lam, rho)[0], **kw)
        b = dis.log_expect(spec, lambda e: ss.density_balance(beta, mu - e, lam, rho)[1], **kw)
    if a == b:
        return 0.0
    return float(a - b)


def _log_sinhc(a):
    # ln(sinh(a) / a) for a >= 0
    if a < 1.0:
        return math.log(math.sinh(a) / a) if a > 0 else 0.0
    return a + math.log1p(-math.exp(-2.0 * a)) - math.log(2.0 * a)


def hc_uniform_mu(beta: float, rho: float, eps: float) -> float:
    """Exact hard-core chemical potential for the uniform law on ``[0, eps]``.

    ``mu = 1 + eps/2 + beta^-1 ln[sinh(beta rho eps / 2) / sinh(beta (1-rho) eps / 2)]``.
    """
    if not 0 < rho < 1:
        raise ValueError(f"hard-core density must lie in (0, 1), got {rho}")
    # ratio of the sinh arguments is rho / (1 - rho) exactly, even when they underflow
    a, b = 0.5 * beta * rho * eps, 0.5 * beta * (1.0 - rho) * eps
    ratio = math.log(rho / (1.0 - rho)) + _log_sinhc(a) - _log_sinhc(b)
    return 1.0 + 0.5 * eps + ratio / beta


def _default_guess(beta, rho, lam, spec):
    if math.isinf(lam):
        return 1.0 + spec.mean()
    # the free-gas value is a lower estimate; at high temperature it is the
    # better one and keeps the occupancy window small
    free = 1.0 - math.log1p(1.0 / rho) / beta
    return min(free, 1.0 + spec.mean() + 2.0 * lam * (rho - 0.5))


def solve_mu(beta: float, rho: float, lam: float, spec: DisorderSpec,
             quad: QuadratureConfig | None = None, guess: float | None = None,
             method: str = "auto") -> float:
    """Chemical potential with ``E[site_density(beta, mu - e, lam)] = rho``.

    Brackets from ``guess`` by doubling steps and then runs Brent's method on
    :func:`density_log_ratio` to full floating-point resolution. Two exact
    hard-core shortcuts are taken unless ``method="bracket"``: a law
    symmetric under ``e -> emax - e`` at ``rho = 1/2`` gives
    ``mu = 1 + emax/2``, and the uniform law has a closed form.
    """
    _check_rho(rho, lam)
    if not beta > 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    if method not in ("auto", "bracket"):
        raise ValueError(f"unknown method {method!r}")
    if math.isinf(lam) and method == "auto":
        if rho == 0.5 and spec.is_symmetric():
            return 1.0 + 0.5 * spec.emax
        if spec.kind == "uniform":
            return hc_uniform_mu(beta, rho, spec.width)
    if lam == 0:
        return _solve_mu_perfect(beta, rho, spec, quad)

    def F(m):
        return density_log_ratio(beta, m, lam, spec, rho, quad)

    x0 = _default_guess(beta, rho, lam, spec) if guess is None else float(guess)
    step = 1.0 if guess is None else 0.05
    f0 = F(x0)
    if f0 == 0:
        return x0
    direction = -1.0 if f0 > 0 else 1.0
    a, fa = x0, f0
    for _ in range(200):
        b = a + direction * step
        fb = F(b)
        if fb == 0:
            return b
        if (fb > 0) != (f0 > 0):
            break
        a, fa = b, fb
        step *= 2.0
    else:
        raise RuntimeError(f"could not bracket mu for rho={rho}, beta={beta}")
    lo, hi = (b, a) if direction < 0 else (a, b)

    def Fc(m):
        v = F(m)
        return min(max(v, -1e300), 1e300)

    return float(brentq(Fc, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500))


def _solve_mu_perfect(beta, rho, spec, quad):
    # density increases from 0 to +inf as mu runs over (-inf, 1)
    def F(m):
        return mean_density(beta, m, 0.0, spec, quad) - rho

    hi = 1.0 - 1e-12
    if F(hi) < 0:
        raise ValueError(f"density {rho} not reachable by perfect bosons at beta={beta}")
    lo = -1.0
    while F(lo) > 0:
        lo = 2.0 * lo - 1.0
    return float(brentq(F, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))


# ---------------------------------------------------------------------------
# critical points


def perfect_critical_beta(rho: float, spec: DisorderSpec,
                          quad: QuadratureConfig | None = None) -> float:
    """Root in ``beta`` of ``E[1 / (exp(beta (1 + e)) - 1)] = rho``."""
    _check_rho(rho, 0.0)

    def F(b):
        return dis.expect(spec, lambda e: 1.0 / np.expm1(b * (1.0 + e)), quad) - rho

    # for point mass the root is ln(1 + 1/rho); disorder only lowers it
    hi = math.log1p(1.0 / rho) * 1.5 + 1.0
    lo = hi
    while F(lo) < 0:
        lo *= 0.5
    while F(hi) > 0:
        hi *= 2.0
    return float(brentq(F, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))


def critical_beta(rho: float, lam: float, spec: DisorderSpec, beta_max: float = BETA_MAX,
                  quad: QuadratureConfig | None = None, beta_lo: float = BETA_LO,
                  n_scan: int = SCAN_POINTS) -> CriticalPoint:
    """Critical point at density ``rho``.

    ``G(beta) = gap_function(beta, solve_mu(beta, rho))`` is sampled on
    ``n_scan`` log-spaced points of ``[beta_lo, beta_max]``. The smallest
    upward sign change is refined by Brent's method; no sign change with
    ``G < 0`` means divergent (no condensation up to ``beta_max``), and
    ``G > 0`` already at ``beta_lo`` means below bracket. ``n_roots``
    counts the sign changes seen by the scan.
    """
    _check_rho(rho, lam)
    if lam == 0:
        b = perfect_critical_beta(rho, spec, quad)
        if b > beta_max:
            return CriticalPoint(rho, None, None, DIVERGENT, beta_max, 0)
        return CriticalPoint(rho, b, 0.0, CONVERGED, beta_max, 1)

    betas = np.geomspace(beta_lo, beta_max, n_scan)
    mus = np.empty(n_scan)
    gaps = np.empty(n_scan)
    guess = None
    for i, b in enumerate(betas):
        guess = solve_mu(b, rho, lam, spec, quad, guess)
        mus[i] = guess
        gaps[i] = gap_function(b, guess, lam, spec, quad)

    pos = gaps >= 0
    changes = np.nonzero(pos[1:] != pos[:-1])[0]
    n_roots = len(changes)
    if pos[0]:
        return CriticalPoint(rho, None, None, BELOW_BRACKET, beta_max, n_roots,
                             f"gap already >= 0 at beta={beta_lo}")
    if n_roots == 0:
        return CriticalPoint(rho, None, None, DIVERGENT, beta_max, 0)
    i = int(changes[0])
    cache = {}

    def G(b):
        nearest = mus[i] if abs(b - betas[i]) < abs(b - betas[i + 1]) else mus[i + 1]
        m = solve_mu(b, rho, lam, spec, quad, cache.get("mu", nearest))
        cache["mu"] = m
        return gap_function(b, m, lam, spec, quad)

    if gaps[i + 1] == 0:
        beta_c = float(betas[i + 1])
    else:
        beta_c = float(brentq(G, betas[i], betas[i + 1], xtol=BETA_XTOL,
                              rtol=4 * np.finfo(float).eps))
    mu_c = solve_mu(beta_c, rho, lam, spec, quad, cache.get("mu", mus[i]))
    gap = gap_function(beta_c, mu_c, lam, spec, quad)
    res = mean_density(beta_c, mu_c, lam, spec, quad) - rho
    msg = ""
    if abs(res) > DENSITY_TOL:
        msg = f"density residual {res:.3g}"
    if abs(gap) > GAP_TOL:
        # steep gap functions can leave a residual above tolerance at xtol
        msg = (msg + "; " if msg else "") + f"gap residual {gap:.3g}"
    return CriticalPoint(rho, beta_c, mu_c, CONVERGED, beta_max, n_roots, msg)


def _point(args):
    rho, lam, spec, beta_max, quad = args
    try:
        return critical_beta(rho, lam, spec, beta_max, quad)
    except Exception as exc:  # recorded per point, the sweep goes on
        return CriticalPoint(rho, None, None, FAILED, beta_max, 0, f"{type(exc).__name__}: {exc}")


def curve_sweep(rho_grid, lam: float, spec: DisorderSpec, beta_max: float = BETA_MAX,
                quad: QuadratureConfig | None = None, executor=None) -> CriticalCurve:
    """Critical points over ``rho_grid`` (strictly increasing).

    ``executor`` may be any object with an ordered ``map`` (for instance a
    process pool); results are merged in grid order either way.
    """
    rho_grid = [float(r) for r in rho_grid]
    if len(rho_grid) == 0:
        raise ValueError("empty density grid")
    if any(b <= a for a, b in zip(rho_grid, rho_grid[1:])):
        raise ValueError("density grid must be strictly increasing")
    tasks = [(r, lam, spec, beta_max, quad) for r in rho_grid]
    mapper = map if executor is None else executor.map
    points = tuple(mapper(_point, tasks))
    meta = {"beta_max": beta_max, "beta_lo": BETA_LO, "scan_points": SCAN_POINTS,
            "beta_xtol": BETA_XTOL, "mode": _mode(lam)}
    return CriticalCurve(lam, spec, points, meta)


# ---------------------------------------------------------------------------
# analytic validators


def bernoulli_betac_upper_bound(rho: float, p: float, eps: float, mu: float | None = None):
    """Upper bound on the hard-core ``beta_c`` near ``rho = 1 - p``, or None.

    Only ``p <= 1/2`` is covered. Above ``1 - p`` (``rho = 1 - p + delta/2``)
    the bound needs ``delta < p/2`` and ``eps > ln(4/p)``. Below
    (``rho = 1 - p - delta/2``) it needs ``delta < 1 - p`` and ``eps`` large
    enough to confine ``mu`` to ``(1, 1 + eps)``; the bound then depends on
    whether ``mu >= 1 + eps/2`` and with ``mu`` unknown the larger of the
    two is returned. None means not applicable.
    """
    if not (0 < p < 1) or eps <= 0 or not (0 < rho < 1):
        return None
    if p > 0.5:
        return None
    delta = 2.0 * abs(rho - (1.0 - p))
    if delta == 0:
        return None
    if rho > 1.0 - p:
        if not (delta < p / 2 and eps > math.log(4.0 / p)):
            return None
        den = p - delta - 2.0 * math.exp(-eps)
        if den <= 0:
            return None
        return math.log(2.0 * p / delta) / den
    if delta >= 1.0 - p or eps <= 0.5 * math.log((2.0 - 3.0 * p - delta) / (p + delta)):
        return None
    if delta >= 1.0 - 2.0 * p and eps <= 0.5 * math.log((3.0 * p - 1.0 + delta) / (1.0 - p - delta)):
        return None
    upper = (2.0 / eps) * math.log(2.0 * (1.0 - p) / delta)
    den = 1.0 - p - delta - 2.0 * p * math.exp(-eps)
    lower = math.log(2.0 * (1.0 - p) / delta) / den if den > 0 else None
    if mu is not None:
        return upper if mu >= 1.0 + eps / 2 else lower
    if lower is None:
        return None
    return max(upper, lower)
