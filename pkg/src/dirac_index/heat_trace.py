"""Heat-trace difference ``tr(e^{-tD*D} - e^{-tDD*})`` as an integral of
matrix-valued one-forms, and its large-``t`` (Witten index) limit.

The spatial integrand at a point ``x`` is the coefficient of
``dx^1 ^ ... ^ dx^d`` in ``tr /\\_j (dA e^{-t s_{j-1} A^2})`` integrated over the
simplex ``s``.  In the eigenbasis ``A = V diag(lam) V*`` with
``G_a = V* (d_a A) V`` and ``mu = lam^2`` this is::

    sum_alpha eps_alpha sum_{k_1..k_d} prod_j G_{alpha_j}[k_{j-1}, k_j] W[k]

(``k_0 = k_d``) where ``W[k] = int_Delta exp(-t sum_j s_{j-1} mu_{k_j}) ds``.
``W`` is a divided difference of ``exp`` and is evaluated exactly by default;
a :class:`~dirac_index.quadrature.SimplexRule` may be supplied instead.
"""

from __future__ import annotations

import itertools
import math
import string
from dataclasses import dataclass, field

import numpy as np

from .clifford import CliffordRep, build_clifford, signed_permutations
from .errors import ConfigError, InvariantViolation
from .potential import CutoffSpec, PotentialField, RadialLimitField, audit_hypothesis, radial_extension
from .quadrature import SimplexRule, SpatialRule, simplex_exp_integral, space_integrate, spatial_rule

REAL_REL_TOL = 1e-8
REAL_ABS_TOL = 1e-10
DEFAULT_T_GRID = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)


def prefactor(rep: CliffordRep, t: float) -> complex:
    """``(2/d) (4 pi)^{-d/2} i^d kappa_c t^{d/2}``."""
    d = rep.d
    return (2.0 / d) * (4.0 * math.pi) ** (-d / 2.0) * (1j**d) * rep.kappa_c * t ** (d / 2.0)


# --------------------------------------------------------------------------
# pointwise density
# --------------------------------------------------------------------------


def wedge_density(field_: PotentialField, rep: CliffordRep, x, t, s):
    """Top-form coefficient of ``tr /\\_{j=1}^d (dA e^{-t s_{j-1} A^2})``.

    Parameters
    ----------
    x : array_like, shape (d,) or (N, d)
    t : float
    s : array_like, shape (d,) or (N, d)
        Barycentric simplex point ``(s_0, ..., s_{d-1})``.

    Returns
    -------
    complex or ndarray of complex
    """
    d = field_.d
    _check_dims(field_, rep)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    s = np.broadcast_to(np.asarray(s, dtype=float), (len(x), d))
    A = field_.eval(x)
    dA = field_.grad(x)
    lam, V = np.linalg.eigh(A)
    mu = lam**2
    Vh = np.conj(np.swapaxes(V, -1, -2))
    # M[:, j, i] = d_i A exp(-t s_j A^2)
    M = np.empty((len(x), d, d) + A.shape[1:], dtype=complex)
    for j in range(d):
        E = (V * np.exp(-t * s[:, j, None] * mu)[:, None, :]) @ Vh
        M[:, j] = dA @ E[:, None]
    out = np.zeros(len(x), dtype=complex)
    for perm, sign in signed_permutations(d):
        P = M[:, 0, perm[0]]
        for j in range(1, d):
            P = P @ M[:, j, perm[j]]
        out += sign * np.trace(P, axis1=-2, axis2=-1)
    return out[0] if single else out


def _check_dims(field_, rep):
    if field_.d != rep.d:
        raise ConfigError(f"field has d={field_.d} but Clifford representation has d={rep.d}")
    if rep.d < 3 or rep.d % 2 == 0:
        raise ConfigError("heat traces need odd d >= 3")


def _chain_subscripts(d):
    k = string.ascii_lowercase[:d]
    facs = [k[j - 1] + k[j] for j in range(d)]  # j=0 gives k_d k_1
    return facs, k


def _weights_exact(mu, t, d):
    """``W[n, k_1..k_d] = exp[-t mu_{k_1}, ..., -t mu_{k_d}]``.

    ``W`` is symmetric in ``k``, so it is evaluated once per multiset.
    """
    N, m = mu.shape
    combos = np.array(list(itertools.combinations_with_replacement(range(m), d)))
    lookup = {tuple(c): i for i, c in enumerate(combos)}
    full = np.array([lookup[tuple(sorted(k))] for k in itertools.product(range(m), repeat=d)])
    z = -t * mu[:, combos]  # (N, n_combos, d), rows already sorted by index
    W = simplex_exp_integral(z)
    return W[:, full].reshape((N,) + (m,) * d)


def _weights_rule(mu, t, rule: SimplexRule):
    N, m = mu.shape
    d = rule.l + 1
    idx = np.array(list(itertools.product(range(m), repeat=d)))
    W = np.zeros((N, len(idx)))
    for sq, wq in zip(rule.nodes, rule.weights):
        W += wq * np.exp(-t * (mu[:, idx] @ sq))
    return W.reshape((N,) + (m,) * d)


def integrated_density(field_: PotentialField, rep: CliffordRep, x, t, simplex="exact"):
    """Simplex-integrated density ``int_Delta wedge_density ds`` at points ``x``."""
    d = field_.d
    _check_dims(field_, rep)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    A = field_.eval(x)
    dA = field_.grad(x)
    lam, V = np.linalg.eigh(A)
    mu = lam**2
    Vh = np.conj(np.swapaxes(V, -1, -2))
    G = Vh[:, None] @ dA @ V[:, None]
    if isinstance(simplex, SimplexRule):
        if simplex.l != d - 1:
            raise ConfigError(f"simplex rule has l={simplex.l}, need {d - 1}")
        W = _weights_rule(mu, t, simplex)
    elif simplex == "exact":
        W = _weights_exact(mu, t, d)
    else:
        raise ConfigError(f"unknown simplex method {simplex!r}")
    facs, k = _chain_subscripts(d)
    expr = ",".join("n" + f for f in facs) + ",n" + k + "->n"
    out = np.zeros(len(x), dtype=complex)
    for perm, sign in signed_permutations(d):
        ops = [G[:, perm[j]] for j in range(d)] + [W]
        out += sign * np.einsum(expr, *ops)
    return out


# --------------------------------------------------------------------------
# heat trace
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class HeatTraceResult:
    t: float
    value: float
    imag_residual: float
    quad_error: float
    tail_bound: float
    cutoff: dict
    rules: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "t": self.t,
            "value": self.value,
            "imag_residual": self.imag_residual,
            "quad_error": self.quad_error,
            "tail_bound": self.tail_bound,
            "cutoff": self.cutoff,
            "rules": self.rules,
        }


def default_spatial_rule(d, breakpoints, r_max=400.0, sphere_n=40, radial_n=48, tail_n=48) -> SpatialRule:
    """Panels on the cutoff transition shell plus a mapped tail to ``r_max``."""
    return spatial_rule(d, breakpoints, r_max=r_max, sphere_n=sphere_n, radial_n=radial_n, tail_n=tail_n)


def estimate_decay(field_: PotentialField, r_min=10.0) -> float:
    """Decay exponent of the spatial integrand from the audited field exponents.

    Tangential derivatives decaying like ``|x|^-g`` and the radial one like
    ``|x|^-q`` give a top-form density of order ``|x|^{-(d-1) g - q}``.
    """
    radii = np.geomspace(r_min, 100.0 * r_min, 7)
    audit = audit_hypothesis(field_, radii=radii, sphere_n=3)
    g = min(audit.gradient_exponent.values())
    q = min(audit.radial_exponent.values())
    return (field_.d - 1) * g + q


def _evaluate(field_, rep, t, spatial, simplex, decay, threads, cutoff_desc):
    _check_dims(field_, rep)
    pref = prefactor(rep, t)

    def f(x):
        return integrated_density(field_, rep, x, t, simplex)

    res = space_integrate(spatial, f, decay=decay, threads=threads)
    total = pref * res.value
    quad = abs(pref) * res.quad_error
    rules = {"spatial": spatial.describe(), "decay": decay}
    if isinstance(simplex, SimplexRule):
        comp = simplex.companion()
        coarse = pref * space_integrate(spatial, lambda x: integrated_density(field_, rep, x, t, comp), threads=threads).value
        quad += abs(total - coarse)
        rules["simplex"] = simplex.describe()
    else:
        rules["simplex"] = {"scheme": "exact-divided-difference"}
    value = float(total.real)
    imag = float(abs(total.imag))
    if not imag <= REAL_REL_TOL * abs(value) + REAL_ABS_TOL:
        raise InvariantViolation(
            f"heat trace at t={t}: imaginary residual {imag:.3e} exceeds bound for value {value:.6g}"
        )
    tail = abs(pref) * res.tail_bound
    return HeatTraceResult(float(t), value, imag, quad + tail, tail, cutoff_desc, rules)


def heat_trace(
    field_: PotentialField,
    rep: CliffordRep | None,
    t: float,
    cutoff: CutoffSpec,
    simplex="exact",
    spatial: SpatialRule | None = None,
    decay="audit",
    threads=1,
) -> HeatTraceResult:
    """Heat-trace difference for the cutoff family ``A_phi``.

    Parameters
    ----------
    field_ : PotentialField
        The family ``A_phi``, typically from :func:`~dirac_index.potential.apply_cutoff`
        with the same ``cutoff``; it equals ``A0`` on ``|x| <= R0`` so the
        integration starts at ``R0``.
    rep : CliffordRep or None
        Defaults to the minimal representation for ``field_.d``.
    simplex : "exact" or SimplexRule
    spatial : SpatialRule, optional
        Defaults to :func:`default_spatial_rule` on ``[R0, R0 + w, 400]``.
    decay : float, "audit" or None
        Integrand decay exponent for the tail bound; ``"audit"`` estimates it
        from the field, ``None`` declares compact support.
    """
    rep = rep or build_clifford(field_.d)
    if t <= 0:
        raise ValueError("t must be positive")
    if spatial is None:
        spatial = default_spatial_rule(field_.d, cutoff.breakpoints)
    if decay == "audit":
        decay = estimate_decay(field_, r_min=max(10.0, 2.0 * sum(cutoff.breakpoints[1:])))
        if not np.isfinite(decay):
            decay = None
    return _evaluate(field_, rep, t, spatial, simplex, decay, threads, cutoff.describe())


def heat_trace_radial(
    limit: RadialLimitField,
    rep: CliffordRep | None,
    t: float,
    rho: CutoffSpec,
    A0,
    simplex="exact",
    spatial: SpatialRule | None = None,
    threads=1,
) -> HeatTraceResult:
    """Heat-trace formula evaluated on the radial extension of ``A°``.

    The extension ``A0 + (1 - rho(|x|))(A°(x/|x|) - A0)`` has vanishing
    tangential derivatives inside ``R0`` and vanishing radial derivative
    outside ``R0 + w``, so the integrand is supported on the shell.
    """
    field_ = radial_extension(limit, rho, A0)
    rep = rep or build_clifford(field_.d)
    if spatial is None:
        spatial = spatial_rule(field_.d, rho.breakpoints, sphere_n=40, radial_n=48)
    res = _evaluate(field_, rep, t, spatial, simplex, None, threads, {"rho": rho.describe(), "radial_limit": limit.family_id})
    return res


# --------------------------------------------------------------------------
# large-t limit
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WittenReport:
    t_grid: tuple
    values: tuple
    errors: tuple
    plateau: float
    plateau_spread: float
    converged: bool
    integer_distance: float
    nearest_integer: int
    imag_residuals: tuple = ()

    def as_dict(self):
        return dict(self.__dict__)


def witten_limit(
    field_: PotentialField,
    rep: CliffordRep | None,
    cutoff: CutoffSpec,
    t_grid=DEFAULT_T_GRID,
    plateau_tol=5e-3,
    **kwargs,
) -> WittenReport:
    """Heat traces on a geometric ``t`` grid and a plateau estimate.

    The plateau is the last grid value; it counts as converged when the last
    three values differ pairwise by at most ``plateau_tol``.  No rate of
    convergence is assumed.
    """
    t_grid = tuple(float(t) for t in t_grid)
    if len(t_grid) < 5:
        raise ConfigError("witten_limit needs at least 5 t values")
    ratios = np.array(t_grid[1:]) / np.array(t_grid[:-1])
    if np.any(ratios <= 1.0) or not np.allclose(ratios, ratios[0], rtol=1e-6):
        raise ConfigError("t grid must be geometric and increasing")
    results = [heat_trace(field_, rep, t, cutoff, **kwargs) for t in t_grid]
    return plateau_report(results, plateau_tol)


def plateau_report(results, plateau_tol=5e-3) -> WittenReport:
    """Plateau estimate from heat traces ordered by increasing ``t``."""
    vals = np.array([r.value for r in results])
    tail = vals[-3:]
    spread = float(tail.max() - tail.min())
    plateau = float(vals[-1])
    nearest = int(round(plateau))
    return WittenReport(
        tuple(r.t for r in results),
        tuple(vals.tolist()),
        tuple(r.quad_error for r in results),
        plateau,
        spread,
        bool(spread <= plateau_tol),
        abs(plateau - nearest),
        nearest,
        tuple(r.imag_residual for r in results),
    )
