"""Single-site quantities of the infinite-range-hopping Bose-Hubbard model.

The site Hamiltonian in the variational pressure is

    beta * [(mu_eff - 1) n - lam n (n - 1) + r (a* + a)]

on a Fock space truncated at ``n_max``. ``lam = inf`` is the hard-core
limit (occupancies 0 and 1 only) and ``lam = 0`` the perfect gas, which
needs ``mu_eff < 1``.

Zero-source (``r = 0``) quantities are diagonal and are computed on a
window of occupancies around the minimum of ``h_n`` in log space, so very
large ``beta`` or occupancies never overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal
from scipy.special import exprel

# log-weight below the dominant level at which a level is dropped
TAIL = 45.0
CUTOFF_CAP = 512
WINDOW_CAP = 1 << 17
HC_TAYLOR = 1e-8


def lse(a, axis=-1):
    """``log(sum(exp(a)))`` along ``axis``; rows of all ``-inf`` give ``-inf``."""
    a = np.asarray(a)
    m = a.max(axis=axis, keepdims=True)
    m[~np.isfinite(m)] = 0.0
    s = np.exp(a - m).sum(axis=axis)
    out = np.full(s.shape, -np.inf)
    np.log(s, out=out, where=s > 0)
    return out + m.squeeze(axis=axis)


class CutoffError(RuntimeError):
    """The occupancy cutoff is too small for the requested accuracy."""


class GaplessError(ValueError):
    """Perfect bosons (lam = 0) with ``mu_eff >= 1``: the trace diverges."""


@dataclass(frozen=True)
class ModelParams:
    """Thermodynamic point. ``lam = math.inf`` is hard-core, ``lam = 0`` perfect."""

    beta: float
    mu: float
    lam: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not self.lam >= 0:
            raise ValueError(f"interaction must be >= 0, got {self.lam}")
        if not math.isfinite(self.mu):
            raise ValueError("mu must be finite")

    @property
    def hardcore(self) -> bool:
        return math.isinf(self.lam)

    @property
    def perfect(self) -> bool:
        return self.lam == 0


@dataclass(frozen=True)
class SingleSiteOperator:
    n_max: int
    diag: np.ndarray
    offdiag: np.ndarray
    r: float

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


def h_n(n, mu, lam):
    """Level energy ``(1 - mu) n + lam n (n - 1)``."""
    n = np.asarray(n, dtype=float)
    out = (1.0 - mu) * n + lam * n * (n - 1.0)
    return float(out) if out.ndim == 0 else out


def operator(mu_eff: float, lam: float, r: float, n_max: int) -> SingleSiteOperator:
    if math.isinf(lam):
        n_max = 1
        lam = 0.0
    n = np.arange(n_max + 1, dtype=float)
    diag = (mu_eff - 1.0) * n - lam * n * (n - 1.0)
    off = r * np.sqrt(n[1:])
    return SingleSiteOperator(n_max, diag, off, r)


def choose_cutoff(beta: float, mu: float, lam: float, r: float = 0.0,
                  cap: int = CUTOFF_CAP) -> int:
    """Smallest ``n_max >= 8`` beyond which all levels are negligible.

    A level ``n`` is negligible when ``beta (h_n - min h - 2 r sqrt(n+1))``
    exceeds ``TAIL``; the source term bounds how far the coupling can pull
    a level down.
    """
    if math.isinf(lam):
        return 1
    if lam == 0 and mu >= 1:
        raise GaplessError(f"perfect bosons need mu_eff < 1, got {mu}")
    n = np.arange(cap + 1, dtype=float)
    h = (1.0 - mu) * n + lam * n * (n - 1.0)
    if np.argmin(h) == cap:
        raise CutoffError(f"occupancy minimum beyond cap {cap} (mu={mu}, lam={lam})")
    bad = beta * (h - h.min() - 2.0 * abs(r) * np.sqrt(n + 1.0)) < TAIL
    bad[: int(np.argmin(h)) + 1] = True
    last = int(np.nonzero(bad)[0][-1])
    if last >= cap:
        raise CutoffError(f"cutoff exceeds cap {cap} (beta={beta}, mu={mu}, lam={lam}, r={r})")
    return max(8, last + 1)


def _log_trace_at(beta, mu_eff, lam, r, n_max):
    op = operator(mu_eff, lam, r, n_max)
    if n_max == 0 or r == 0:
        e = op.diag
    else:
        e = eigvalsh_tridiagonal(op.diag, op.offdiag)
    return float(lse(beta * e, axis=0))


def log_trace(beta: float, mu_eff: float, lam: float, r: float,
              n_max: int | None = None, check: bool | None = None) -> float:
    """``ln Tr exp beta[(mu_eff-1) n - lam n(n-1) + r (a* + a)]``.

    With ``n_max=None`` the cutoff is chosen automatically and verified by
    recomputing at ``n_max + 8``; an explicit ``n_max`` evaluates the
    truncated model as is unless ``check=True``.
    """
    if math.isinf(lam):
        return _log_trace_at(beta, mu_eff, 0.0, r, 1)
    if check is None:
        check = n_max is None
    if n_max is None:
        n_max = choose_cutoff(beta, mu_eff, lam, r)
    value = _log_trace_at(beta, mu_eff, lam, r, n_max)
    if not check:
        return value
    for _ in range(CUTOFF_CAP // 8):
        bigger = _log_trace_at(beta, mu_eff, lam, r, n_max + 8)
        if abs(bigger - value) <= 1e-10 * max(1.0, abs(value)):
            return value
        if n_max + 8 > CUTOFF_CAP:
            break
        n_max += 8
        value = bigger
    raise CutoffError(f"log_trace not converged at n_max={n_max}")


def ptilde(beta: float, mu: float, lam: float, r: float) -> float:
    """Single-site pressure ``beta^-1 log_trace`` with automatic cutoff."""
    return log_trace(beta, mu, lam, r) / beta


# ---------------------------------------------------------------------------
# diagonal (r = 0) engine


def _window(beta, mu, lam, extra=None):
    """Occupancies carrying all non-negligible weight, one row per ``mu``.

    Returns ``(n, inside)`` where ``n`` has shape ``(M, W)``. Columns of
    ``extra`` (fixed occupancies appended after the window) are flagged
    ``inside=False`` when they duplicate a window column.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    T = TAIL / beta
    if lam == 0:
        if np.any(mu >= 1):
            raise GaplessError("perfect bosons need mu_eff < 1")
        lo = np.zeros_like(mu)
        hi = np.ceil(T / (1.0 - mu)) + 1
    else:
        nstar = (mu - 1.0 + lam) / (2.0 * lam)
        R = np.sqrt(T / lam + 0.25) + 1.0
        slope = 1.0 - mu - lam
        lin = np.divide(T, slope, out=np.full(slope.shape, np.inf), where=slope > 0)
        lo = np.where(nstar <= 0, 0.0, np.maximum(0.0, np.floor(nstar - R) - 1))
        hi = np.where(nstar <= 0, np.ceil(np.minimum(np.sqrt(T / lam), lin)) + 1,
                      np.ceil(nstar + R))
    width = int(np.max(hi - lo)) + 1
    if width > WINDOW_CAP:
        raise CutoffError(f"occupancy window of {width} levels exceeds {WINDOW_CAP}")
    n = lo[:, None] + np.arange(width, dtype=float)
    inside = np.ones(n.shape, dtype=bool)
    if extra is not None:
        ex = np.broadcast_to(np.asarray(extra, dtype=float), (len(mu), len(extra)))
        dup = (ex >= lo[:, None]) & (ex <= lo[:, None] + width - 1)
        n = np.concatenate([n, ex], axis=1)
        inside = np.concatenate([inside, ~dup], axis=1)
    return n, inside


def _diag_logp(beta, mu, lam, extra=None):
    """Occupancies ``n``, energies ``h`` and normalized log-probabilities."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if math.isinf(lam):
        n = np.broadcast_to(np.array([0.0, 1.0]), (len(mu), 2))
        h = n * (1.0 - mu[:, None])
        inside = np.ones(n.shape, dtype=bool)
    else:
        n, inside = _window(beta, mu, lam, extra)
        h = (1.0 - mu[:, None]) * n + lam * n * (n - 1.0)
    lw = -beta * h
    nw = n.shape[1] - (0 if extra is None or math.isinf(lam) else len(extra))
    lz = lse(lw[:, :nw], axis=1)
    lp = np.where(inside, lw - lz[:, None], -np.inf)
    return n, h, lp, nw


def log_partition(beta, mu, lam):
    """``ln Z_0 = ln sum_n exp(-beta h_n)``, vectorized over ``mu``."""
    mu_arr = np.atleast_1d(np.asarray(mu, dtype=float))
    if math.isinf(lam):
        out = np.logaddexp(0.0, beta * (mu_arr - 1.0))
    elif lam == 0:
        if np.any(mu_arr >= 1):
            raise GaplessError("perfect bosons need mu_eff < 1")
        out = -np.log(-np.expm1(-beta * (1.0 - mu_arr)))
    else:
        n, _ = _window(beta, mu_arr, lam)
        h = (1.0 - mu_arr[:, None]) * n + lam * n * (n - 1.0)
        out = lse(-beta * h, axis=1)
    return out if np.ndim(mu) else float(out[0])


def site_density(beta, mu, lam):
    """Mean occupation ``sum n e^{-beta h_n} / Z_0``, vectorized over ``mu``."""
    mu_arr = np.atleast_1d(np.asarray(mu, dtype=float))
    if math.isinf(lam):
        out = hc_density_term(beta, mu_arr - 1.0)
    elif lam == 0:
        if np.any(mu_arr >= 1):
            raise GaplessError("perfect bosons need mu_eff < 1")
        out = 1.0 / np.expm1(beta * (1.0 - mu_arr))
    else:
        # mode plus small corrections: accurate on occupation plateaus
        b, lpos, lneg = mode_balance(beta, mu_arr, lam)
        out = b + (np.exp(lpos) - np.exp(lneg))
    return out if np.ndim(mu) else float(out[0])


def ptilde_dd(beta, mu, lam):
    """Second source derivative of the site pressure at ``r = 0``.

    Sum over neighbouring levels of ``2 n (w_n - w_{n-1}) / (h_{n-1} - h_n)``
    with ``w = e^{-beta h} / Z_0``, evaluated as
    ``2 n beta max(w_n, w_{n-1}) exprel(-beta |h_{n-1} - h_n|)``, which is
    finite through level crossings. Vectorized over ``mu``.
    """
    mu_arr = np.atleast_1d(np.asarray(mu, dtype=float))
    if math.isinf(lam):
        out = 2.0 * hc_gap_term(beta, mu_arr - 1.0)
    elif lam == 0:
        if np.any(mu_arr >= 1):
            raise GaplessError("perfect bosons need mu_eff < 1")
        out = 2.0 / (1.0 - mu_arr)
    else:
        n, h, lp, _ = _diag_logp(beta, mu_arr, lam)
        dh = np.abs(h[:, :-1] - h[:, 1:])
        big = np.exp(np.maximum(lp[:, :-1], lp[:, 1:]))
        terms = 2.0 * n[:, 1:] * beta * big * exprel(-beta * dh)
        out = np.sum(terms, axis=1)
    return out if np.ndim(mu) else float(out[0])


def density_balance(beta, mu, lam, rho):
    """Log excess and log deficit of occupations relative to ``rho``.

    Returns ``(log sum_{n>rho} (n-rho) p_n, log sum_{n<rho} (rho-n) p_n)`` per
    ``mu``; the mean occupation exceeds ``rho`` iff the first is larger.
    Both stay finite when the distribution is sharply peaked at ``rho``.
    """
    mu_arr = np.atleast_1d(np.asarray(mu, dtype=float))
    extra = None
    if not math.isinf(lam):
        extra = sorted({max(0, math.ceil(rho) - 1), math.floor(rho) + 1})
    n, _, lp, _ = _diag_logp(beta, mu_arr, lam, extra)
    d = n - rho
    ld = np.log(np.abs(d), out=np.full(d.shape, -np.inf), where=d != 0) + lp
    lpos = lse(np.where(d > 0, ld, -np.inf), axis=1)
    lneg = lse(np.where(d < 0, ld, -np.inf), axis=1)
    return lpos, lneg


def mode_balance(beta, mu, lam):
    """Occupations measured from the most probable level ``b``.

    Returns ``(b, log sum_{n>b} (n-b) p_n, log sum_{n<b} (b-n) p_n)`` per
    ``mu``, so that the mean occupation is ``b + exp(second) - exp(third)``
    with the small corrections kept in log space.
    """
    mu_arr = np.atleast_1d(np.asarray(mu, dtype=float))
    n, _, lp, _ = _diag_logp(beta, mu_arr, lam)
    k = np.argmax(lp, axis=1)
    b = n[np.arange(len(mu_arr)), k]
    d = n - b[:, None]
    ld = np.log(np.abs(d), out=np.full(d.shape, -np.inf), where=d != 0) + lp
    lpos = lse(np.where(d > 0, ld, -np.inf), axis=1)
    lneg = lse(np.where(d < 0, ld, -np.inf), axis=1)
    return b, lpos, lneg


# ---------------------------------------------------------------------------
# hard-core closed forms


def hc_pressure_term(beta, mu_eff, r):
    """``(mu_eff-1)/2 + beta^-1 ln[2 cosh(beta/2 sqrt((mu_eff-1)^2 + 4 r^2))]``."""
    x = np.asarray(mu_eff, dtype=float) - 1.0
    s = 0.5 * beta * np.sqrt(x * x + 4.0 * np.asarray(r, dtype=float) ** 2)
    # ln(2 cosh s) = s + log1p(exp(-2 s))
    out = 0.5 * x + (s + np.log1p(np.exp(-2.0 * s))) / beta
    return float(out) if np.ndim(out) == 0 else out


def hc_gap_term(beta, x):
    """``tanh(beta x / 2) / x``, continuous at ``x = 0``."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) <= HC_TAYLOR
    safe = np.where(small, 1.0, x)
    out = np.where(small, beta / 2 - beta**3 * x * x / 24, np.tanh(0.5 * beta * safe) / safe)
    return float(out) if out.ndim == 0 else out


def hc_density_term(beta, x):
    """Hard-core occupation ``1/2 + tanh(beta x / 2) / 2``."""
    x = np.asarray(x, dtype=float)
    out = 0.5 + 0.5 * np.tanh(0.5 * beta * x)
    return float(out) if out.ndim == 0 else out


def hc_source_term(beta, mu_eff, r):
    """``<a + a*>`` of the hard-core site: ``2 r tanh(beta s / 2) / s``."""
    x = np.asarray(mu_eff, dtype=float) - 1.0
    s = np.sqrt(x * x + 4.0 * r * r)
    out = 2.0 * r * hc_gap_term(beta, s)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# batched source-dependent quantities (dense stacked eigensolves)


def _stacked(beta, mu_eff, lam, r, n_max):
    mu_eff = np.atleast_1d(np.asarray(mu_eff, dtype=float))
    n = np.arange(n_max + 1, dtype=float)
    mats = np.zeros((len(mu_eff), n_max + 1, n_max + 1))
    idx = np.arange(n_max + 1)
    mats[:, idx, idx] = beta * ((mu_eff[:, None] - 1.0) * n - lam * n * (n - 1.0))
    off = beta * r * np.sqrt(n[1:])
    mats[:, idx[:-1], idx[1:]] = off
    mats[:, idx[1:], idx[:-1]] = off
    return mats


def batch_cutoff(beta, mu_eff, lam, r) -> int:
    """One cutoff valid for every ``mu_eff`` in the batch, with an 8-level margin."""
    if math.isinf(lam):
        return 1
    return max(choose_cutoff(beta, float(m), lam, r) for m in np.atleast_1d(mu_eff)) + 8


def batch_log_trace(beta, mu_eff, lam, r, n_max=None):
    """``log_trace`` over an array of ``mu_eff`` with one shared cutoff."""
    mu_eff = np.atleast_1d(np.asarray(mu_eff, dtype=float))
    if math.isinf(lam):
        return beta * hc_pressure_term(beta, mu_eff, r)
    if n_max is None:
        n_max = batch_cutoff(beta, mu_eff, lam, r)
    e = np.linalg.eigvalsh(_stacked(beta, mu_eff, lam, r, n_max))
    return lse(e, axis=1)


def batch_source(beta, mu_eff, lam, r, n_max=None):
    """Thermal ``<a + a*>`` at source ``r`` (Hellmann-Feynman), per ``mu_eff``."""
    mu_eff = np.atleast_1d(np.asarray(mu_eff, dtype=float))
    if math.isinf(lam):
        return hc_source_term(beta, mu_eff, r)
    if n_max is None:
        n_max = batch_cutoff(beta, mu_eff, lam, r)
    e, v = np.linalg.eigh(_stacked(beta, mu_eff, lam, r, n_max))
    w = np.exp(e - lse(e, axis=1)[:, None])
    sq = np.sqrt(np.arange(1, n_max + 1, dtype=float))
    xk = 2.0 * np.einsum("n,knj,knj->kj", sq, v[:, :-1, :], v[:, 1:, :])
    return np.sum(w * xk, axis=1)


def source_expectation(beta, mu_eff, lam, r, n_max=None) -> float:
    """``<a + a*>`` of one site, i.e. ``d/dr`` of ``beta^-1 log_trace``."""
    return float(batch_source(beta, [mu_eff], lam, r, n_max)[0])
