"""Brute-force finite-volume checks.

The full Hamiltonian on ``V`` sites with infinite-range hopping,

    H - mu N = sum_x [lam n_x (n_x - 1) + (e_x - mu) n_x] + N - (1/V) sum_{x,y} a*_x a_y,

is diagonalized on the Fock space truncated at ``n_max`` bosons per site.
Basis states are mixed-radix little-endian occupation vectors: state
``sum_x n_x (n_max + 1)**x``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import disorder as dis
from . import singlesite as ss
from .disorder import DisorderSpec
from .pressure import expand_r_max, sup_r

DIM_CAP = 1 << 20
DENSE_CAP = 4096
IDS_CAP = 4096
GAP_FLOOR = -1e-9


class DimensionError(ValueError):
    """The requested finite-volume problem is too large."""


class InvariantError(RuntimeError):
    """A provable inequality failed numerically (indicates a bug)."""


@dataclass(frozen=True)
class LatticeRealization:
    """One finite-volume configuration. ``lam = inf`` requires ``n_max = 1``."""

    V: int
    n_max: int
    eps: tuple
    beta: float
    mu: float
    lam: float
    seed: int | None = None

    def __post_init__(self):
        if self.V < 1 or self.n_max < 1:
            raise ValueError("V and n_max must be >= 1")
        if len(self.eps) != self.V:
            raise ValueError(f"expected {self.V} site energies, got {len(self.eps)}")
        if any(e < 0 for e in self.eps):
            raise ValueError("site energies must be >= 0")
        if math.isinf(self.lam) and self.n_max != 1:
            raise ValueError("hard-core realizations use n_max = 1")
        if self.dim > DIM_CAP:
            raise DimensionError(f"Fock dimension {self.dim} exceeds {DIM_CAP}")
        if not self.beta > 0:
            raise ValueError("beta must be > 0")

    @property
    def dim(self) -> int:
        return (self.n_max + 1) ** self.V

    @property
    def pair(self) -> float:
        # on n_max = 1 the pair term vanishes identically
        return 0.0 if math.isinf(self.lam) else self.lam


def realize(V: int, n_max: int, spec: DisorderSpec, beta: float, mu: float, lam: float,
            seed: int) -> LatticeRealization:
    """Realization with site energies drawn from ``spec``."""
    eps = tuple(float(e) for e in dis.sample(spec, seed, V))
    return LatticeRealization(V, n_max, eps, beta, mu, lam, seed)


def occupations(V: int, n_max: int) -> np.ndarray:
    """``(dim, V)`` occupation table in little-endian mixed-radix order."""
    idx = np.arange((n_max + 1) ** V)
    return np.stack([(idx // (n_max + 1) ** x) % (n_max + 1) for x in range(V)], axis=1)


def hamiltonian(cfg: LatticeRealization) -> np.ndarray:
    """Dense ``H - mu N`` on the truncated Fock space."""
    if cfg.dim > DENSE_CAP:
        raise DimensionError(f"dense diagonalization capped at dimension {DENSE_CAP}")
    V, q = cfg.V, cfg.n_max + 1
    occ = occupations(V, cfg.n_max)
    eps = np.asarray(cfg.eps, dtype=float)
    diag = (cfg.pair * occ * (occ - 1) + (eps - cfg.mu + 1.0 - 1.0 / V) * occ).sum(axis=1)
    H = np.diag(diag.astype(float))
    states = np.arange(cfg.dim)
    for x in range(V):
        for y in range(V):
            if x == y:
                continue
            ok = (occ[:, x] < cfg.n_max) & (occ[:, y] > 0)
            src = states[ok]
            dst = src + q**x - q**y
            amp = np.sqrt((occ[ok, x] + 1.0) * occ[ok, y])
            H[dst, src] -= amp / V
    return H


def exact_pressure(cfg: LatticeRealization) -> float:
    """``(beta V)^-1 ln Tr exp(-beta (H - mu N))``."""
    e = np.linalg.eigvalsh(hamiltonian(cfg))
    return float(ss.lse(-cfg.beta * e, axis=0)) / (cfg.beta * cfg.V)


def approx_objective(r: float, cfg: LatticeRealization) -> float:
    """``-r^2 + (beta V)^-1 sum_x log_trace(beta, mu - e_x, lam, r, n_max)``."""
    mu_eff = cfg.mu - np.asarray(cfg.eps, dtype=float)
    lt = ss.batch_log_trace(cfg.beta, mu_eff, cfg.pair, r, cfg.n_max)
    return -r * r + float(np.sum(lt)) / (cfg.beta * cfg.V)


def approx_pressure_sup(cfg: LatticeRealization) -> tuple[float, float]:
    """``(p_appr, z_star)``: sup over ``r >= 0`` of :func:`approx_objective`."""
    mu_eff = cfg.mu - np.asarray(cfg.eps, dtype=float)

    def g(r):
        return approx_objective(r, cfg)

    def resid(r):
        return 0.5 * float(np.mean(ss.batch_source(cfg.beta, mu_eff, cfg.pair, r, cfg.n_max))) - r

    g0 = g(0.0)
    r_max = expand_r_max(g, g0)
    z, p = sup_r(g, r_max, g0, resid)
    return p, z


def bogoliubov_gap(cfg: LatticeRealization) -> float:
    """``exact_pressure - approx_pressure_sup``; nonnegative up to rounding."""
    gap = exact_pressure(cfg) - approx_pressure_sup(cfg)[0]
    if gap < GAP_FLOOR:
        raise InvariantError(f"negative Bogoliubov gap {gap:.3e} for {cfg}")
    return gap


def one_particle_matrix(eps) -> np.ndarray:
    """``I - J/V + diag(eps)`` with ``J`` the all-ones matrix."""
    eps = np.asarray(eps, dtype=float)
    V = len(eps)
    return np.eye(V) - np.full((V, V), 1.0 / V) + np.diag(eps)


def ids_empirical(V: int, spec: DisorderSpec, samples: int, E_grid, seed: int = 0):
    """Sample-averaged fraction of one-particle levels ``<= E``.

    Returns a list of ``(E, N_bar, stderr)``; ``stderr`` is the standard
    error over samples (0 for a single sample). Sample ``k`` draws its
    energies from a seed spawned deterministically from ``seed``.
    """
    if V < 1 or V > IDS_CAP:
        raise DimensionError(f"ids_empirical needs 1 <= V <= {IDS_CAP}")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    E = np.asarray(E_grid, dtype=float)
    seeds = np.random.SeedSequence(seed).generate_state(samples)
    counts = np.empty((samples, len(E)), dtype=np.int64)
    for k, s in enumerate(seeds):
        ev = np.linalg.eigvalsh(one_particle_matrix(dis.sample(spec, int(s), V)))
        # levels sit exactly on 1 + e_x up to rounding; count them as <= E there
        counts[k] = np.searchsorted(ev, E + 1e-10, side="right")
    # integer totals keep exact fractions such as 1/V exact
    mean = counts.sum(axis=0) / (samples * V)
    frac = counts / V
    err = frac.std(axis=0, ddof=1) / math.sqrt(samples) if samples > 1 else np.zeros_like(mean)
    return [(float(a), float(b), float(c)) for a, b, c in zip(E, mean, err)]
