"""Deterministic quadrature on the simplex, the unit sphere and R^d.

Simplex rules are conical-product (Stroud) Gauss-Jacobi rules symmetrised over
the vertices, with a seeded Monte Carlo fallback.  Sphere rules are products of
Gauss-Jacobi rules in the polar angles and a trapezoid rule in the azimuth.
Spatial rules are sphere x radial panels, the last panel optionally mapped
algebraically out to a truncation radius.

Error estimates follow a single convention: the difference between the rule
and a coarser companion rule.
"""

from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import roots_jacobi

MAX_TABULATED_L = 4
MAX_DEGREE = 41
DEFAULT_CHUNK = 16384


# --------------------------------------------------------------------------
# simplex
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SimplexRule:
    """Quadrature rule on the standard l-simplex in barycentric coordinates.

    ``nodes`` has shape ``(n, l+1)``; the flat measure on
    ``(s_1, ..., s_l)`` with ``s_0 = 1 - sum`` is used, so the weights sum to
    ``1/l!``.
    """

    l: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    scheme: str
    degree: int | None = None
    n_samples: int | None = None
    seed: int | None = None

    def integrate(self, f):
        return simplex_integrate(self, f)

    def companion(self) -> "SimplexRule":
        """Lower-accuracy rule used for error estimation."""
        if self.scheme == "monte-carlo":
            return simplex_rule(self.l, n_samples=max(self.n_samples // 2, 1), seed=self.seed + 1)
        return simplex_rule(self.l, degree=max(1, self.degree - 4))

    def describe(self) -> dict:
        return {
            "l": self.l,
            "scheme": self.scheme,
            "degree": self.degree,
            "n_nodes": int(len(self.weights)),
            "n_samples": self.n_samples,
            "seed": self.seed,
        }


def _gauss_jacobi01(n, a):
    """Gauss rule on [0,1] for the weight (1-u)^a."""
    x, w = roots_jacobi(n, a, 0.0)
    return (x + 1.0) / 2.0, w / 2.0 ** (a + 1.0)


def simplex_rule(l, degree=None, n_samples=None, seed=0, symmetric=True) -> SimplexRule:
    """Build a simplex rule.

    Parameters
    ----------
    l : int
        Simplex dimension (``l >= 1``).
    degree : int, optional
        Requested polynomial exactness.  Deterministic rules are available for
        ``l <= 4`` and ``degree <= 41``; otherwise the Monte Carlo fallback is
        used with a warning.
    n_samples, seed : int
        Monte Carlo sample count and seed (used when ``degree`` is None or
        unsupported).
    symmetric : bool
        Average the conical-product rule over all vertex permutations.
    """
    if l < 1:
        raise ValueError("simplex dimension must be >= 1")
    vol = 1.0 / math.factorial(l)
    if degree is not None and (l > MAX_TABULATED_L or degree > MAX_DEGREE):
        warnings.warn(
            f"no deterministic simplex rule for l={l}, degree={degree}; "
            "falling back to Monte Carlo",
            stacklevel=2,
        )
        degree = None
        n_samples = n_samples or 100_000
    if degree is None:
        n_samples = int(n_samples or 100_000)
        rng = np.random.default_rng(seed)
        nodes = rng.dirichlet(np.ones(l + 1), size=n_samples)
        weights = np.full(n_samples, vol / n_samples)
        return SimplexRule(l, nodes, weights, "monte-carlo", None, n_samples, int(seed))

    degree = max(int(degree), 1)
    n = (degree + 2) // 2
    grids = [_gauss_jacobi01(n, l - k) for k in range(1, l + 1)]
    us = np.array(list(itertools.product(*[g[0] for g in grids])))
    ws = np.prod(np.array(list(itertools.product(*[g[1] for g in grids]))), axis=1)
    # Duffy collapse: x_k = u_k * prod_{i<k} (1 - u_i)
    rem = np.ones(len(us))
    xs = np.empty_like(us)
    for k in range(l):
        xs[:, k] = us[:, k] * rem
        rem = rem * (1.0 - us[:, k])
    bary = np.column_stack([rem, xs])
    if symmetric and l > 0:
        perms = list(itertools.permutations(range(l + 1)))
        bary = np.concatenate([bary[:, p] for p in perms])
        ws = np.tile(ws, len(perms)) / len(perms)
    return SimplexRule(l, bary, ws, "stroud-conical" + ("-sym" if symmetric else ""), 2 * n - 1)


def simplex_integrate(rule: SimplexRule, f):
    """``sum_i w_i f(s_i)``; ``f`` maps ``(n, l+1)`` barycentric nodes to values."""
    vals = np.asarray(f(rule.nodes))
    return np.tensordot(rule.weights, vals, axes=(0, 0))


def simplex_exp_integral(z, taylor_spread=2.0, terms=26):
    """Exact ``int_{Delta_{n-1}} exp(sum_j s_j z_j) ds`` for real nodes.

    The integral equals the divided difference ``exp[z_0, ..., z_{n-1}]``
    (Hermite-Genocchi).  Clusters of spread below ``taylor_spread`` are
    evaluated by a Taylor series about their mean, larger spreads by the
    divided-difference recursion on sorted nodes.

    Parameters
    ----------
    z : array_like, shape (..., n)
    """
    z = np.sort(np.asarray(z, dtype=float), axis=-1)
    shape = z.shape[:-1]
    out = _dd_exp(z.reshape(-1, z.shape[-1]), taylor_spread, terms)
    return out.reshape(shape)


def _dd_exp(w, taylor_spread, terms):
    n = w.shape[1]
    if n == 1:
        return np.exp(w[:, 0])
    spread = w[:, -1] - w[:, 0]
    out = np.empty(len(w))
    small = spread <= taylor_spread
    if small.any():
        out[small] = _dd_exp_taylor(w[small], terms)
    big = ~small
    if big.any():
        wb = w[big]
        out[big] = (_dd_exp(wb[:, 1:], taylor_spread, terms) - _dd_exp(wb[:, :-1], taylor_spread, terms)) / spread[big]
    return out


def _dd_exp_taylor(w, terms):
    n = w.shape[1]
    mu = w.mean(axis=1)
    x = w - mu[:, None]
    h = np.zeros((terms + 1, len(w)))
    h[0] = 1.0
    for i in range(n):
        for k in range(1, terms + 1):
            h[k] += x[:, i] * h[k - 1]
    fact = np.array([1.0 / math.factorial(n - 1 + k) for k in range(terms + 1)])
    return np.exp(mu) * np.tensordot(fact, h, axes=(0, 0))


# --------------------------------------------------------------------------
# sphere
# --------------------------------------------------------------------------


def sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^{d-1} in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


@dataclass(frozen=True)
class SphereRule:
    """Product rule on S^{d-1}; exact for polynomials up to degree ``2n-1``."""

    d: int
    n: int
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def companion(self) -> "SphereRule":
        return sphere_rule(self.d, max(1, (2 * self.n) // 3))

    def describe(self) -> dict:
        return {"d": self.d, "n": self.n, "n_nodes": int(len(self.weights))}


def sphere_rule(d: int, n: int) -> SphereRule:
    if d < 1 or n < 1:
        raise ValueError("need d >= 1 and n >= 1")
    nodes, weights = _sphere_nodes(d, n)
    return SphereRule(d, n, nodes, weights)


def _sphere_nodes(d, n):
    if d == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if d == 2:
        m = 2 * n
        phi = 2.0 * np.pi * (np.arange(m) + 0.5) / m
        return np.column_stack([np.cos(phi), np.sin(phi)]), np.full(m, 2.0 * np.pi / m)
    a = (d - 3) / 2.0
    t, wt = roots_jacobi(n, a, a)
    sub, wsub = _sphere_nodes(d - 1, n)
    rad = np.sqrt(1.0 - t**2)
    nodes = np.concatenate([np.column_stack([np.full(len(sub), ti), ri * sub]) for ti, ri in zip(t, rad)])
    weights = np.concatenate([wi * wsub for wi in wt])
    return nodes, weights


def sphere_integrate(rule: SphereRule, f):
    """Integrate ``f`` over the unit sphere.

    Returns
    -------
    value, error : the rule's sum and its difference to the companion rule.
    """
    fine = np.tensordot(rule.weights, np.asarray(f(rule.nodes)), axes=(0, 0))
    coarse_rule = rule.companion()
    coarse = np.tensordot(coarse_rule.weights, np.asarray(f(coarse_rule.nodes)), axes=(0, 0))
    return fine, float(np.max(np.abs(fine - coarse)))


# --------------------------------------------------------------------------
# R^d
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialPanel:
    """Radial interval ``[a, b]`` with ``n`` Gauss-Legendre nodes.

    With ``mapped=True`` the nodes are pushed towards ``a`` by the algebraic
    substitution ``r = a + s u / (1 - (1 - s/(b-a)) u)``, ``s = max(1, a)``,
    which keeps resolution near ``a`` while reaching a large truncation radius
    ``b``.
    """

    a: float
    b: float
    n: int
    mapped: bool = False

    def nodes(self, n=None):
        n = n or self.n
        u, w = np.polynomial.legendre.leggauss(n)
        u = (u + 1.0) / 2.0
        w = w / 2.0
        if not self.mapped:
            return self.a + (self.b - self.a) * u, (self.b - self.a) * w
        s = min(max(1.0, self.a), (self.b - self.a) / 2.0)
        beta = 1.0 - s / (self.b - self.a)
        den = 1.0 - beta * u
        r = self.a + s * u / den
        jac = s / den**2
        return r, w * jac


class SpatialRule:
    """Sphere x radial product rule on the ball of radius ``r_max``.

    Parameters
    ----------
    d : int
    sphere_n : int
        Level of the sphere rule.
    panels : sequence of RadialPanel
        Contiguous radial panels; the last panel's ``b`` is the truncation
        radius.
    """

    def __init__(self, d, sphere_n, panels):
        self.d = int(d)
        self.sphere_n = int(sphere_n)
        self.panels = tuple(panels)
        if not self.panels:
            raise ValueError("at least one radial panel is required")

    @property
    def r_max(self) -> float:
        return self.panels[-1].b

    @cached_property
    def sphere(self) -> SphereRule:
        return sphere_rule(self.d, self.sphere_n)

    def _nodes(self, coarse):
        sph = self.sphere.companion() if coarse else self.sphere
        rs, wr = [], []
        for p in self.panels:
            n = max(2, (2 * p.n) // 3) if coarse else p.n
            r, w = p.nodes(n)
            rs.append(r)
            wr.append(w * r ** (self.d - 1))
        r = np.concatenate(rs)
        wr = np.concatenate(wr)
        x = (r[:, None, None] * sph.nodes[None, :, :]).reshape(-1, self.d)
        w = (wr[:, None] * sph.weights[None, :]).reshape(-1)
        return x, w

    @cached_property
    def fine(self):
        return self._nodes(False)

    @cached_property
    def coarse(self):
        return self._nodes(True)

    def describe(self) -> dict:
        return {
            "d": self.d,
            "sphere_n": self.sphere_n,
            "panels": [
                {"a": p.a, "b": p.b, "n": p.n, "mapped": p.mapped} for p in self.panels
            ],
            "n_nodes": int(len(self.fine[1])),
        }


def spatial_rule(d, breakpoints, r_max=None, sphere_n=24, radial_n=32, tail_n=None) -> SpatialRule:
    """Convenience constructor: GL panels between ``breakpoints`` and an
    optional mapped tail panel out to ``r_max``."""
    bps = [float(b) for b in breakpoints]
    panels = [RadialPanel(a, b, radial_n) for a, b in zip(bps[:-1], bps[1:]) if b > a]
    if r_max is not None and r_max > bps[-1]:
        panels.append(RadialPanel(bps[-1], float(r_max), tail_n or radial_n, mapped=True))
    return SpatialRule(d, sphere_n, panels)


@dataclass(frozen=True)
class SpaceIntegral:
    value: complex
    error: float
    quad_error: float
    tail_bound: float
    flagged: bool
    n_nodes: int

    def as_dict(self):
        v = complex(self.value)
        return {
            "value": v.real if v.imag == 0 else [v.real, v.imag],
            "error": self.error,
            "quad_error": self.quad_error,
            "tail_bound": self.tail_bound,
            "flagged": self.flagged,
            "n_nodes": self.n_nodes,
        }


def weighted_sum(x, w, f, threads=1, chunk_size=DEFAULT_CHUNK):
    """``sum_i w_i f(x_i)`` evaluated in fixed-size chunks.

    Chunk boundaries do not depend on ``threads`` and partial sums are reduced
    in chunk order, so the result is bitwise identical for any thread count.
    """
    starts = range(0, len(w), chunk_size)

    def part(s):
        vals = np.asarray(f(x[s : s + chunk_size]))
        return np.tensordot(w[s : s + chunk_size], vals, axes=(0, 0))

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(part, starts))
    else:
        parts = [part(s) for s in starts]
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    return total


def space_integrate(rule: SpatialRule, f, decay=None, tol=None, threads=1, chunk_size=DEFAULT_CHUNK) -> SpaceIntegral:
    """Integrate ``f`` over R^d.

    Parameters
    ----------
    f : callable
        Vectorised integrand, ``(N, d) -> (N,)`` (real or complex).
    decay : float, optional
        Exponent ``q`` with ``|f(x)| <~ |x|^{-q}``; used to bound the tail
        beyond ``rule.r_max`` as ``R^d avg_S |f(R y)| |S| / (q - d)``.
        ``None`` declares the integrand supported inside ``r_max``.
    tol : float, optional
        Requested accuracy; a tail bound above it sets ``flagged``.
    """
    xf, wf = rule.fine
    xc, wc = rule.coarse
    fine = weighted_sum(xf, wf, f, threads, chunk_size)
    coarse = weighted_sum(xc, wc, f, threads, chunk_size)
    quad_err = float(np.abs(fine - coarse))
    tail = 0.0
    if decay is not None:
        R = rule.r_max
        sph = rule.sphere
        s = float(np.dot(sph.weights, np.abs(np.asarray(f(R * sph.nodes)))))
        tail = math.inf if decay <= rule.d else s * R**rule.d / (decay - rule.d)
    flagged = bool(tol is not None and tail > tol)
    return SpaceIntegral(complex(fine), quad_err + tail, quad_err, tail, flagged, int(len(wf)))
