"""Single-site random potential laws and their expectations.

A law is either a finite set of atoms (value, weight) or the uniform
distribution on ``[0, width]``. Expectations of discrete laws are exact
weighted sums; uniform laws use composite Gauss-Legendre quadrature whose
order is doubled until two successive estimates agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

WEIGHT_TOL = 1e-12


class QuadratureError(RuntimeError):
    """Raised when the uniform-law quadrature fails to converge."""

    def __init__(self, message, estimates):
        super().__init__(message)
        self.estimates = estimates


@dataclass(frozen=True)
class QuadratureConfig:
    order: int = 8
    tol: float = 1e-10
    atol: float = 1e-14
    max_doublings: int = 12


DEFAULT_QUAD = QuadratureConfig()


@dataclass(frozen=True)
class DisorderSpec:
    """Probability law of the single-site energy.

    ``kind`` is ``"discrete"`` (``atoms`` holds sorted ``(value, weight)``
    pairs) or ``"uniform"`` (``width`` > 0, law uniform on ``[0, width]``).
    Build instances through the factory functions, which canonicalize.
    """

    kind: str
    atoms: tuple = ()
    width: float = 0.0
    source: dict = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if self.kind == "discrete":
            if not self.atoms:
                raise ValueError("discrete law needs at least one atom")
            values = [a[0] for a in self.atoms]
            weights = [a[1] for a in self.atoms]
            if any(v < 0 or not math.isfinite(v) for v in values):
                raise ValueError("atom values must be finite and >= 0")
            if len(set(values)) != len(values):
                raise ValueError("atom values must be distinct")
            if any(not (0.0 < w <= 1.0) for w in weights):
                raise ValueError("atom weights must lie in (0, 1]")
            if abs(math.fsum(weights) - 1.0) > WEIGHT_TOL:
                raise ValueError("atom weights must sum to 1")
            if min(values) != 0.0:
                raise ValueError("the smallest single-site energy must be 0")
        elif self.kind == "uniform":
            if not (self.width > 0 and math.isfinite(self.width)):
                raise ValueError("uniform width must be finite and > 0")
        else:
            raise ValueError(f"unknown disorder kind {self.kind!r}")

    @property
    def values(self) -> np.ndarray:
        return np.array([a[0] for a in self.atoms], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([a[1] for a in self.atoms], dtype=float)

    @property
    def emax(self) -> float:
        if self.kind == "uniform":
            return self.width
        return max(a[0] for a in self.atoms)

    @property
    def is_point_mass(self) -> bool:
        return self.kind == "discrete" and len(self.atoms) == 1

    def is_symmetric(self) -> bool:
        """True if the law is invariant under ``e -> emax - e``."""
        if self.kind == "uniform":
            return True
        top = self.emax
        mirrored = {round(top - v, 12): w for v, w in self.atoms}
        return all(abs(mirrored.get(round(v, 12), -1.0) - w) < WEIGHT_TOL for v, w in self.atoms)

    def mean(self) -> float:
        if self.kind == "uniform":
            return self.width / 2
        return float(np.dot(self.values, self.weights))

    def to_dict(self) -> dict:
        if self.source is not None:
            return dict(self.source)
        if self.kind == "uniform":
            return {"kind": "uniform", "eps": self.width}
        return {"kind": "discrete", "atoms": [[v, w] for v, w in self.atoms]}


def discrete(atoms: Sequence[tuple[float, float]], source=None) -> DisorderSpec:
    """Discrete law from ``(value, weight)`` pairs; colliding values are merged."""
    merged: dict[float, float] = {}
    for value, weight in atoms:
        value = float(value)
        weight = float(weight)
        if weight < 0:
            raise ValueError("negative weight")
        if weight == 0:
            continue
        merged[value] = merged.get(value, 0.0) + weight
    return DisorderSpec("discrete", tuple(sorted(merged.items())), source=source)


def point_mass(value: float = 0.0) -> DisorderSpec:
    return discrete([(value, 1.0)], source={"kind": "point"})


def bernoulli(p: float, eps: float) -> DisorderSpec:
    """Energy ``eps`` with probability ``p``, otherwise 0."""
    if not (0.0 < p < 1.0):
        raise ValueError(f"bernoulli probability must lie in (0, 1), got {p}")
    if not eps >= 0:
        raise ValueError(f"bernoulli energy must be >= 0, got {eps}")
    return discrete([(eps, p), (0.0, 1.0 - p)],
                    source={"kind": "bernoulli", "p": float(p), "eps": float(eps)})


def multinomial_equidistant(m: int, eps: float) -> DisorderSpec:
    """``m`` equally likely energies ``k*eps/(m-1)``, ``k = 0..m-1``."""
    if int(m) != m or m < 2:
        raise ValueError(f"multinomial needs an integer m >= 2, got {m}")
    if not eps >= 0:
        raise ValueError(f"multinomial width must be >= 0, got {eps}")
    m = int(m)
    return discrete([(k * eps / (m - 1), 1.0 / m) for k in range(m)],
                    source={"kind": "multinomial", "m": m, "eps": float(eps)})


def trinomial(eps: float) -> DisorderSpec:
    """Energies 0, eps/2, eps with probability 1/3 each."""
    spec = multinomial_equidistant(3, eps)
    return DisorderSpec(spec.kind, spec.atoms, source={"kind": "trinomial", "eps": float(eps)})


def uniform(eps: float) -> DisorderSpec:
    """Uniform law on ``[0, eps]``; ``eps = 0`` gives the point mass at 0."""
    if not eps >= 0:
        raise ValueError(f"uniform width must be >= 0, got {eps}")
    if eps == 0:
        return discrete([(0.0, 1.0)], source={"kind": "uniform", "eps": 0.0})
    return DisorderSpec("uniform", width=float(eps),
                        source={"kind": "uniform", "eps": float(eps)})


def from_dict(d: dict) -> DisorderSpec:
    """Inverse of :meth:`DisorderSpec.to_dict`."""
    d = dict(d)
    kind = d.pop("kind", None)
    try:
        if kind == "bernoulli":
            spec = bernoulli(d.pop("p"), d.pop("eps"))
        elif kind == "multinomial":
            spec = multinomial_equidistant(d.pop("m"), d.pop("eps"))
        elif kind == "trinomial":
            spec = trinomial(d.pop("eps"))
        elif kind == "uniform":
            spec = uniform(d.pop("eps"))
        elif kind == "point":
            spec = point_mass(d.pop("value", 0.0))
        elif kind == "discrete":
            spec = discrete([tuple(a) for a in d.pop("atoms")])
        else:
            raise ValueError(f"unknown disorder kind {kind!r}")
    except KeyError as exc:
        raise ValueError(f"disorder of kind {kind!r} is missing key {exc}") from None
    if d:
        raise ValueError(f"unknown disorder keys: {sorted(d)}")
    return spec


# ---------------------------------------------------------------------------
# quadrature


@lru_cache(maxsize=64)
def _gauss_legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _edges(width: float, breakpoints: Sequence[float], layer: float | None) -> np.ndarray:
    """Sub-interval edges of ``[0, width]``.

    Every breakpoint becomes an edge; with ``layer`` set, edges are also
    placed at geometric distances ``layer * 4**j`` on both sides of every
    breakpoint and of both ends, to resolve boundary layers of that width.
    """
    pts = [0.0, width]
    centers = [0.0, width]
    for b in breakpoints:
        if 0.0 < b < width:
            pts.append(b)
            centers.append(b)
    if layer is not None and layer > 0:
        steps = []
        d = layer
        while d < width:
            steps.append(d)
            d *= 4.0
        steps = np.array(steps)
        for c in centers:
            pts.extend(c - steps)
            pts.extend(c + steps)
    pts = np.unique(np.clip(pts, 0.0, width))
    keep = np.concatenate([[True], np.diff(pts) > 1e-13 * max(width, 1.0)])
    pts = pts[keep]
    if len(pts) == 1:
        # width below the merge tolerance: one interval
        return np.array([0.0, width])
    pts[-1] = width
    return pts


def nodes(spec: DisorderSpec, order: int = 8, breakpoints: Sequence[float] = (),
          layer: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Energies and weights representing ``spec`` for expectation sums.

    Discrete laws return their atoms. Uniform laws return composite
    Gauss-Legendre nodes with ``order`` points per sub-interval; the
    weights include the ``1/width`` density.
    """
    if spec.kind == "discrete":
        return spec.values, spec.weights
    edges = _edges(spec.width, breakpoints, layer)
    x, w = _gauss_legendre(order)
    a = edges[:-1, None]
    half = 0.5 * np.diff(edges)[:, None]
    pts = (a + half * (x + 1.0)).ravel()
    # divide before scaling so subnormal widths do not underflow the weights
    wts = (0.5 * (np.diff(edges) / spec.width)[:, None] * w).ravel()
    return pts, wts


def _converge(spec, estimate, quad, breakpoints, layer, close):
    order = quad.order
    prev = estimate(*nodes(spec, order, breakpoints, layer))
    for _ in range(quad.max_doublings):
        order *= 2
        cur = estimate(*nodes(spec, order, breakpoints, layer))
        if close(prev, cur):
            return cur
        prev = cur
    raise QuadratureError(
        f"uniform quadrature did not converge after {quad.max_doublings} doublings",
        (prev, cur))


def expect(spec: DisorderSpec, g: Callable[[np.ndarray], np.ndarray],
           quad: QuadratureConfig | None = None, breakpoints: Sequence[float] = (),
           layer: float | None = None) -> float:
    """``E[g(e)]`` for ``e`` distributed as ``spec``.

    ``g`` must accept an array of energies. For uniform laws ``breakpoints``
    marks points where ``g`` is not smooth and ``layer`` the width of any
    boundary layer around them.
    """
    quad = quad or DEFAULT_QUAD
    if spec.kind == "discrete":
        return float(np.dot(spec.weights, g(spec.values)))

    def estimate(x, w):
        return float(np.dot(w, g(x)))

    def close(a, b):
        return abs(a - b) <= quad.tol * max(abs(a), abs(b)) + quad.atol

    return _converge(spec, estimate, quad, breakpoints, layer, close)


def log_expect(spec: DisorderSpec, logg: Callable[[np.ndarray], np.ndarray],
               quad: QuadratureConfig | None = None, breakpoints: Sequence[float] = (),
               layer: float | None = None) -> float:
    """``ln E[exp(logg(e))]`` computed without leaving log space."""
    quad = quad or DEFAULT_QUAD
    if spec.kind == "discrete":
        return float(logsumexp(logg(spec.values), b=spec.weights))

    def estimate(x, w):
        return float(logsumexp(logg(x), b=w))

    def close(a, b):
        if math.isinf(a) or math.isinf(b):
            return a == b
        return abs(a - b) <= quad.tol * max(1.0, abs(a))

    return _converge(spec, estimate, quad, breakpoints, layer, close)


def sample(spec: DisorderSpec, seed: int, count: int) -> np.ndarray:
    """``count`` i.i.d. draws from ``spec``; deterministic in ``seed``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    if spec.kind == "uniform":
        return rng.uniform(0.0, spec.width, size=count)
    if spec.is_point_mass:
        return np.full(count, spec.atoms[0][0])
    return rng.choice(spec.values, size=count, p=spec.weights)
