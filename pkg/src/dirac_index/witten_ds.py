"""Witten index of (d+1)-dimensional massless Dirac-Schroedinger operators
from the loop unitary ``U^V(x)``, the closed-form example integrand, and a
simplicial degree oracle for maps into SU(2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .clifford import CliffordRep, build_clifford, signed_permutations
from .errors import ConfigError, InvariantViolation, NonConvergenceError
from .evolution import EvolutionConfig, loop_unitary
from .quadrature import SpatialRule, space_integrate, spatial_rule

UNITARY_TOL = 1e-10
EVOLUTION_AGREEMENT_TOL = 1e-8

# Composite signs relating the index formulas to su2_degree, calibrated on the
# hedgehog profile (see calibrate_signs) and asserted everywhere else.
SIGN_CONVENTIONS = {
    "ds_witten_vs_degree": -1,
    "callias_vs_suspension_degree": -1,
}


# --------------------------------------------------------------------------
# profiles
# --------------------------------------------------------------------------


def bump_normalizer():
    val, _ = quad(lambda y: math.exp(-1.0 / (1.0 - y * y)), -1.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return 1.0 / val


_BUMP_C = bump_normalizer()


def bump(y):
    """``C exp(-1/(1-y^2))`` on ``|y| < 1`` with unit integral."""
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    inside = np.abs(y) < 1.0
    out[inside] = _BUMP_C * np.exp(-1.0 / (1.0 - y[inside] ** 2))
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ExamplePotentialSpec:
    """``V(x, y) = i (c . F(x)) phi(y)`` on ``R^3``, i.e. ``(sigma . F(x)) phi(y)``.

    Attributes
    ----------
    F : callable
        ``(N, 3) -> (N, 3)``.
    jac : callable or None
        ``(N, 3) -> (N, 3, 3)`` with ``jac[n, i, a] = d_a F_i``.
    phi : callable
        Profile in ``y`` with unit integral, supported in ``phi_support``.
    radius : float
        ``U^V`` is constant (or ``F`` radially constant) outside this radius.
    """

    F: Callable = field(repr=False)
    jac: Callable | None = field(default=None, repr=False)
    phi: Callable = field(default=bump, repr=False)
    phi_support: tuple = (-1.0, 1.0)
    radius: float = 2.0
    name: str = "user"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        a, b = self.phi_support
        val, _ = quad(lambda y: float(self.phi(np.array(y))), a, b, epsabs=1e-14, epsrel=1e-13, limit=200)
        if abs(val - 1.0) > 1e-10:
            raise ConfigError(f"profile phi integrates to {val!r}, expected 1")

    def jacobian(self, x, h=1e-5):
        if self.jac is not None:
            return self.jac(x)
        out = np.empty((len(x), 3, 3))
        for a in range(3):
            e = np.zeros(3)
            e[a] = h
            out[:, :, a] = (self.F(x + e) - self.F(x - e)) / (2 * h)
        return out

    def describe(self):
        return {"name": self.name, "params": self.params, "radius": self.radius}


def _smoothstep_poly(u):
    return u**3 * (10.0 - 15.0 * u + 6.0 * u**2)


def hedgehog_profile(amp=math.pi, radius=2.0) -> ExamplePotentialSpec:
    """``F(x) = amp * S(|x|/radius) x/|x|`` with the quintic smoothstep ``S``.

    ``F = g(|x|) x`` where ``g`` is a polynomial on ``|x| <= radius``, so ``F``
    is smooth at the origin.
    """
    amp, R1 = float(amp), float(radius)

    def g_and_dg_over_r(r):
        u = r / R1
        inside = u <= 1.0
        g = np.where(inside, amp * u**2 / R1 * (10.0 - 15.0 * u + 6.0 * u**2), 0.0)
        dg_r = np.where(inside, amp / R1**3 * (20.0 - 45.0 * u + 24.0 * u**2), 0.0)
        out = ~inside
        if out.any():
            ro = r[out]
            g[out] = amp / ro
            dg_r[out] = -amp / ro**3
        return g, dg_r

    def F(x):
        g, _ = g_and_dg_over_r(np.linalg.norm(x, axis=1))
        return g[:, None] * x

    def jac(x):
        g, dg_r = g_and_dg_over_r(np.linalg.norm(x, axis=1))
        return g[:, None, None] * np.eye(3)[None] + dg_r[:, None, None] * x[:, :, None] * x[:, None, :]

    return ExamplePotentialSpec(F, jac, bump, (-1.0, 1.0), R1, "hedgehog", {"amp": amp, "radius": R1})


# --------------------------------------------------------------------------
# loop fields
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LoopField:
    """``x -> U(x)`` unitary ``n x n`` on ``R^d`` with derivative access.

    ``dU`` returns ``(N, d, n, n)``; central differences with step
    ``1e-3 (1 + |x|)`` are used when it is absent.
    """

    d: int
    n: int
    U: Callable = field(repr=False)
    dU: Callable | None = field(default=None, repr=False)
    radius: float = math.inf
    name: str = "loop"
    evolution_check: float | None = None

    def eval(self, x):
        return self.U(np.atleast_2d(np.asarray(x, dtype=float)))

    def derivs(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.dU is not None:
            return self.dU(x)
        return self.fd_derivs(x)

    def fd_derivs(self, x, h=None):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if h is None:
            h = 1e-3 * (1.0 + np.linalg.norm(x, axis=1))
        h = np.broadcast_to(np.asarray(h, dtype=float), (len(x),))
        out = np.empty((len(x), self.d, self.n, self.n), dtype=complex)
        for a in range(self.d):
            e = np.zeros(self.d)
            e[a] = 1.0
            out[:, a] = (self.U(x + h[:, None] * e) - self.U(x - h[:, None] * e)) / (2.0 * h[:, None, None])
        return out

    def adjoint(self) -> "LoopField":
        """The pointwise inverse ``U*``."""

        def U(x):
            return np.conj(np.swapaxes(self.U(x), -1, -2))

        dU = None
        if self.dU is not None:

            def dU(x):
                return np.conj(np.swapaxes(self.dU(x), -1, -2))

        return LoopField(self.d, self.n, U, dU, self.radius, self.name + "*")

    def conjugated(self, W) -> "LoopField":
        """``x -> W U(x) W*`` for a fixed unitary ``W``."""
        W = np.asarray(W, dtype=complex)
        Wh = W.conj().T

        def U(x):
            return W @ self.U(x) @ Wh

        dU = None
        if self.dU is not None:

            def dU(x):
                return W @ self.dU(x) @ Wh

        return LoopField(self.d, self.n, U, dU, self.radius, self.name + "^W")

    def reflected(self, axis=0) -> "LoopField":
        """Precomposition with the reflection ``x_axis -> -x_axis``."""
        S = np.ones(self.d)
        S[axis] = -1.0

        def U(x):
            return self.U(x * S)

        dU = None
        if self.dU is not None:

            def dU(x):
                return self.dU(x * S) * S[None, :, None, None]

        return LoopField(self.d, self.n, U, dU, self.radius, self.name + "~refl")


def _su2_exp(F, sigma):
    """``exp(i sigma . F)`` and helpers for its derivative."""
    r = np.linalg.norm(F, axis=1)
    small = r < 1e-4
    rs = np.where(small, 1.0, r)
    sinc = np.where(small, 1.0 - r**2 / 6.0 + r**4 / 120.0, np.sin(rs) / rs)
    # d sinc / dr divided by r
    dsinc_r = np.where(small, -1.0 / 3.0 + r**2 / 30.0, (rs * np.cos(rs) - np.sin(rs)) / rs**3)
    sF = np.einsum("ni,ijk->njk", F, sigma)
    eye = np.eye(2)
    U = np.cos(r)[:, None, None] * eye + 1j * sinc[:, None, None] * sF
    return U, sinc, dsinc_r, sF


def analytic_loop(spec: ExamplePotentialSpec, rep: CliffordRep | None = None) -> LoopField:
    """Closed-form ``U(x) = exp(i sigma . F(x))`` with exact derivatives."""
    rep = rep or build_clifford(3)
    sigma = rep.sigma

    def U(x):
        return _su2_exp(spec.F(x), sigma)[0]

    def dU(x):
        F = spec.F(x)
        J = spec.jacobian(x)  # (N, i, a)
        _, sinc, dsinc_r, sF = _su2_exp(F, sigma)
        FdF = np.einsum("ni,nia->na", F, J)  # |F| d_a|F|
        dsF = np.einsum("nia,ijk->najk", J, sigma)
        eye = np.eye(2)
        # d cos|F| = -sinc * F.dF ; d sinc = (dsinc/dr / r) F.dF
        return (
            -(sinc[:, None] * FdF)[:, :, None, None] * eye
            + 1j * sinc[:, None, None, None] * dsF
            + 1j * (dsinc_r[:, None] * FdF)[:, :, None, None] * sF[:, None]
        )

    return LoopField(3, 2, U, dU, spec.radius, f"exp(i sigma.F)[{spec.name}]")


def example_potential(spec: ExamplePotentialSpec, rep: CliffordRep | None = None):
    """``V(x, y) = i (c . F(x)) phi(y)``, vectorised over a batch of ``x``."""
    rep = rep or build_clifford(3)
    ic = 1j * rep.generators

    def V(x, y):
        cF = np.einsum("ni,ijk->njk", spec.F(np.atleast_2d(x)), ic)
        return cF * float(spec.phi(np.array(y)))

    return V


def evolution_loop(spec: ExamplePotentialSpec, rep=None, cfg: EvolutionConfig | None = None) -> LoopField:
    """Loop field from numerical propagation; derivatives by central differences."""
    V = example_potential(spec, rep)
    cfg = cfg or EvolutionConfig(order=4, step=1e-2)

    def U(x):
        return loop_unitary(V, x, cfg, support=spec.phi_support).U

    return LoopField(3, 2, U, None, spec.radius, f"evolution[{spec.name}]")


def build_example_loop(
    spec: ExamplePotentialSpec,
    rep: CliffordRep | None = None,
    cfg: EvolutionConfig | None = None,
    n_check=100,
    seed=0,
    tol=EVOLUTION_AGREEMENT_TOL,
) -> LoopField:
    """Analytic loop field, validated against evolution at ``n_check`` random points.

    Raises
    ------
    InvariantViolation
        If the two constructions differ by more than ``tol`` anywhere.
    """
    rep = rep or build_clifford(3)
    analytic = analytic_loop(spec, rep)
    dev = 0.0
    if n_check:
        rng = np.random.default_rng(seed)
        x = rng.uniform(-1.2 * spec.radius, 1.2 * spec.radius, size=(n_check, 3))
        U_ev = evolution_loop(spec, rep, cfg).U(x)
        dev = float(np.abs(U_ev - analytic.U(x)).max())
        if not dev <= tol:
            raise InvariantViolation(f"analytic and evolved loop unitaries differ by {dev:.3e} > {tol:.1e}")
    return LoopField(analytic.d, analytic.n, analytic.U, analytic.dU, analytic.radius, analytic.name, dev)


# --------------------------------------------------------------------------
# index formula
# --------------------------------------------------------------------------


def ds_prefactor(d):
    return (2j * math.pi) ** (-(d + 1) / 2.0) * math.factorial((d - 1) // 2) / math.factorial(d)


def ds_density(loop: LoopField, x, check_unitary=True):
    """``sum_alpha eps_alpha tr prod_j (U^{-1} d_{alpha_j} U)`` at ``x``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    U = loop.eval(x)
    Uh = np.conj(np.swapaxes(U, -1, -2))
    if check_unitary:
        dev = np.abs(Uh @ U - np.eye(loop.n)).max(initial=0.0)
        if not dev <= UNITARY_TOL:
            raise InvariantViolation(f"loop unitary violates unitarity by {dev:.3e}")
    omega = Uh[:, None] @ loop.derivs(x)
    out = np.zeros(len(x), dtype=complex)
    for perm, sign in signed_permutations(loop.d):
        P = omega[:, perm[0]]
        for a in perm[1:]:
            P = P @ omega[:, a]
        out += sign * np.trace(P, axis1=-2, axis2=-1)
    return out


@dataclass(frozen=True)
class IndexReport:
    value: float
    imag_residual: float
    quad_error: float
    integer_distance: float
    nearest_integer: int
    rule: dict

    def as_dict(self):
        return dict(self.__dict__)


def default_ds_rule(radius, sphere_n=20, radial_n=40) -> SpatialRule:
    return spatial_rule(3, [0.0, radius], sphere_n=sphere_n, radial_n=radial_n)


def ds_witten_index(loop: LoopField, rep: CliffordRep | None = None, spatial: SpatialRule | None = None, decay=None, threads=1) -> IndexReport:
    """``(2 pi i)^{-(d+1)/2} ((d-1)/2)!/d! int tr (U^{-1} dU)^d``.

    With ``decay=None`` the density is assumed to vanish outside the rule's
    truncation radius (default: ``loop.radius``).
    """
    d = loop.d
    if spatial is None:
        if not math.isfinite(loop.radius):
            raise ConfigError("ds_witten_index needs a spatial rule for loops without a finite radius")
        spatial = default_ds_rule(loop.radius)
    res = space_integrate(spatial, lambda x: ds_density(loop, x), decay=decay, threads=threads)
    pref = ds_prefactor(d)
    total = pref * res.value
    value = float(total.real)
    nearest = int(round(value))
    return IndexReport(
        value,
        float(abs(total.imag)),
        float(abs(pref) * res.error),
        abs(value - nearest),
        nearest,
        spatial.describe(),
    )


# --------------------------------------------------------------------------
# closed-form example integrand
# --------------------------------------------------------------------------


def closed_form_density(spec: ExamplePotentialSpec, x, d=3):
    """``(|F|+d-1)(cos 2|F| - 1)^{(d-1)/2} / |F|^d * det DF`` (unregularised)."""
    F = spec.F(x)
    r = np.linalg.norm(F, axis=1)
    det = np.linalg.det(spec.jacobian(x))
    with np.errstate(divide="ignore", invalid="ignore"):
        return (r + d - 1) * (np.cos(2 * r) - 1) ** ((d - 1) // 2) / r**d * det


def closed_form_prefactor(d=3):
    return (2 * math.pi) ** (-(d + 1) / 2.0) * math.factorial((d - 1) // 2) / d


def example_closed_form(spec: ExamplePotentialSpec, spatial: SpatialRule | None = None, exclusion_eps=0.1, d=3) -> dict:
    """Integrate the closed-form density over ``{|F| >= eps}``.

    The density is not regularised near ``F = 0``; the excluded set is removed
    and its volume, the value at ``eps/2`` and ``eps/4``, and the size of
    ``|F| * density`` on the smallest retained shell are reported.
    """
    spatial = spatial or default_ds_rule(spec.radius)
    pref = closed_form_prefactor(d)

    def integral(eps):
        def f(x):
            r = np.linalg.norm(spec.F(x), axis=1)
            keep = r >= eps
            out = np.zeros(len(x))
            if keep.any():
                out[keep] = closed_form_density(spec, x[keep], d)
            return out

        return space_integrate(spatial, f)

    def excluded(eps):
        return space_integrate(spatial, lambda x: (np.linalg.norm(spec.F(x), axis=1) < eps).astype(float)).value.real

    main = integral(exclusion_eps)
    xf, _ = spatial.fine
    rF = np.linalg.norm(spec.F(xf), axis=1)
    keep = rF >= exclusion_eps
    near = keep & (rF <= 2.0 * exclusion_eps)
    near_scaled = float(np.abs(rF[near] * closed_form_density(spec, xf[near], d)).max()) if near.any() else 0.0
    return {
        "value": float(pref * main.value.real),
        "quad_error": float(abs(pref) * main.error),
        "exclusion_eps": exclusion_eps,
        "excluded_volume": float(excluded(exclusion_eps)),
        "sensitivity": {
            str(e): float(pref * integral(e).value.real) for e in (exclusion_eps / 2.0, exclusion_eps / 4.0)
        },
        "near_zero_abs_F_times_density": near_scaled,
        "prefactor": pref,
    }


def closed_form_comparison(spec: ExamplePotentialSpec, ds_report: IndexReport, **kwargs) -> dict:
    """Comparison report; the evolution-based index is treated as authoritative."""
    cf = example_closed_form(spec, **kwargs)
    diff = abs(cf["value"] - ds_report.value)
    return {
        "ds_witten": ds_report.as_dict(),
        "closed_form": cf,
        "difference": diff,
        "agree_within_errors": bool(diff <= cf["quad_error"] + ds_report.quad_error + 1e-2),
        "authoritative": "ds_witten",
    }


# --------------------------------------------------------------------------
# degree oracle
# --------------------------------------------------------------------------


def su2_coordinates(U):
    """``(a, b, c, e)`` with ``U = a I + i (b s1 + c s2 + e s3)`` for ``U`` in SU(2)."""
    a = 0.5 * np.trace(U, axis1=-2, axis2=-1).real
    b = 0.5 * (U[..., 0, 1] + U[..., 1, 0]).imag
    c = 0.5 * (U[..., 0, 1] - U[..., 1, 0]).real
    e = 0.5 * (U[..., 0, 0] - U[..., 1, 1]).imag
    return np.stack([a, b, c, e], axis=-1)


_KUHN = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]


def _kuhn_tets(n):
    """Vertex indices of the Kuhn triangulation of an ``n^3`` cube grid."""
    idx = np.arange((n + 1) ** 3).reshape(n + 1, n + 1, n + 1)
    base = np.stack(np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij"), -1).reshape(-1, 3)
    tets = []
    for perm in _KUHN:
        p = base.copy()
        verts = [idx[p[:, 0], p[:, 1], p[:, 2]]]
        for ax in perm:
            p = p.copy()
            p[:, ax] += 1
            verts.append(idx[p[:, 0], p[:, 1], p[:, 2]])
        tets.append(np.stack(verts, -1))
    return np.concatenate(tets)


def _count_preimages(coords, pts, tets, margin):
    P = coords[tets][..., 1:]  # (T, 4, 3) image in (b, c, e)
    A = coords[tets][..., 0]
    M = np.swapaxes(P[:, 1:] - P[:, :1], -1, -2)
    det = np.linalg.det(M)
    cand = (np.abs(det) > 1e-300) & (A.min(axis=1) > 0.0)
    cand &= (P.min(axis=1) <= 0.0).all(axis=1) & (P.max(axis=1) >= 0.0).all(axis=1)
    ii = np.flatnonzero(cand)
    if ii.size == 0:
        return 0, 0, False
    lam = np.linalg.solve(M[ii], -P[ii, 0][..., None])[..., 0]
    bary = np.column_stack([1.0 - lam.sum(axis=1), lam])
    inside = bary.min(axis=1) >= -margin
    degenerate = bool(np.any(inside & (bary.min(axis=1) <= margin)))
    hit = ii[inside]
    X = pts[tets[hit]]
    detx = np.linalg.det(np.swapaxes(X[:, 1:] - X[:, :1], -1, -2))
    signs = np.sign(det[hit]) * np.sign(detx)
    return int(signs.sum()), int(hit.size), degenerate


def default_regular_value():
    n = np.array([0.36, 0.48, 0.8])
    return analytic_loop(
        ExamplePotentialSpec(lambda x: np.tile(0.5 * math.pi * n, (len(x), 1)), name="const")
    ).U(np.zeros((1, 3)))[0]


def su2_degree(U_map, box=2.5, n=40, v=None, retries=4, seed=0, margin=1e-9) -> int:
    """Degree of ``U_map : R^3 -> SU(2)`` (constant outside ``[-box, box]^3``).

    Counts signed preimages of the regular value ``v`` on a Kuhn
    triangulation with ``n^3`` cubes, using the chart
    ``U = a I + i (b s1 + c s2 + e s3)`` (``a > 0``) around ``v``.  A
    preimage too close to a simplex boundary, or on the box boundary,
    triggers a retry with a perturbed ``v``.

    Parameters
    ----------
    U_map : callable or LoopField
        ``(N, 3) -> (N, 2, 2)``.
    """
    func = U_map.eval if isinstance(U_map, LoopField) else U_map
    g = np.linspace(-box, box, n + 1)
    pts = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3)
    tets = _kuhn_tets(n)
    Uvals = func(pts)
    rng = np.random.default_rng(seed)
    v = default_regular_value() if v is None else np.asarray(v, dtype=complex)
    for attempt in range(retries + 1):
        coords = su2_coordinates(np.conj(v.T)[None] @ Uvals)
        on_boundary = np.abs(pts).max(axis=1) >= box
        bnd = coords[on_boundary]
        near_bnd = np.any((bnd[:, 0] > 0) & (np.linalg.norm(bnd[:, 1:], axis=1) < 1e-6))
        deg, hits, degenerate = _count_preimages(coords, pts, tets, margin)
        if not degenerate and not near_bnd:
            return deg
        w = rng.normal(size=3)
        v = v @ analytic_loop(ExamplePotentialSpec(lambda x, w=w: np.tile(0.05 * w, (len(x), 1)), name="const")).U(
            np.zeros((1, 3))
        )[0]
    raise NonConvergenceError("no regular value found for su2_degree after perturbation retries")


def suspension_map(field_, R, rep=None):
    """``x -> exp(i pi psi(|x|) U(R x/|x|))`` with ``psi`` rising from 0 to 1 on ``[0, 1]``.

    ``U`` is the Callias phase of ``field_``; for an involution ``U`` the map is
    ``I`` at the origin and ``-I`` for ``|x| >= 1``.
    """
    from .callias import unitary_phase

    def func(x):
        r = np.linalg.norm(x, axis=1)
        psi = _smoothstep_poly(np.clip(r, 0.0, 1.0))
        y = np.where(r[:, None] > 0, x / np.where(r > 0, r, 1.0)[:, None], np.array([0.0, 0.0, 1.0]))
        U = unitary_phase(field_, R * y)
        eye = np.eye(U.shape[-1])
        th = math.pi * psi
        # U^2 = I, so exp(i th U) = cos(th) I + i sin(th) U
        return np.cos(th)[:, None, None] * eye + 1j * np.sin(th)[:, None, None] * U

    return func


def calibrate_signs(n=24) -> dict:
    """Recompute the composite signs on the hedgehog profile."""
    from .callias import callias_index
    from .potential import make_builtin

    spec = hedgehog_profile()
    loop = analytic_loop(spec)
    deg = su2_degree(loop, box=spec.radius + 0.5, n=n)
    ds = ds_witten_index(loop)
    h = make_builtin("hedgehog")
    cal = callias_index(h, radii=(8.0,))
    sdeg = su2_degree(suspension_map(h, 8.0), box=1.5, n=n)
    return {
        "ds_witten_vs_degree": int(round(ds.value)) * deg,
        "callias_vs_suspension_degree": int(round(cal.index)) * sdeg,
        "degree": deg,
        "suspension_degree": sdeg,
    }
