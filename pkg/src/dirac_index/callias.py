"""Callias surface-integral index from the phase ``U = A |A|^{-1}``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clifford import CliffordRep, build_clifford, signed_permutations
from .errors import InvariantViolation, SpectralGapError
from .potential import PotentialField
from .quadrature import SphereRule, sphere_rule

DEFAULT_GAP_TOL = 1e-6
UNITARY_TOL = 1e-10


def unitary_phase(field_: PotentialField, x, gap_tol=DEFAULT_GAP_TOL, return_gap=False):
    """``U = sum_k sign(lam_k) P_k`` for ``A(x) = sum_k lam_k P_k``.

    Raises
    ------
    SpectralGapError
        If some eigenvalue of ``A(x)`` has modulus below ``gap_tol``.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    lam, V = np.linalg.eigh(field_.eval(x))
    absl = np.abs(lam)
    gaps = absl.min(axis=1)
    bad = np.flatnonzero(gaps < gap_tol)
    if bad.size:
        i = bad[0]
        raise SpectralGapError(x[i].tolist(), float(lam[i, np.argmin(absl[i])]), gap_tol)
    U = (V * np.sign(lam)[:, None, :]) @ np.conj(np.swapaxes(V, -1, -2))
    if single:
        return (U[0], float(gaps[0])) if return_gap else U[0]
    return (U, gaps) if return_gap else U


def tangent_frames(y):
    """Orthonormal tangent frames at unit vectors ``y`` (shape ``(N, d)``).

    Returns ``(N, d-1, d)`` rows ``e_1..e_{d-1}`` such that
    ``(y, e_1, ..., e_{d-1})`` is positively oriented.
    """
    N, d = y.shape
    frames = np.empty((N, d - 1, d))
    eye = np.eye(d)
    for n in range(N):
        k = np.argmin(np.abs(y[n]))
        M = np.column_stack([y[n]] + [eye[i] for i in range(d) if i != k][: d - 1])
        Q, R = np.linalg.qr(M)
        Q = Q * np.sign(np.diag(R))[None, :]
        if np.linalg.det(Q) < 0:
            Q[:, -1] *= -1.0
        frames[n] = Q[:, 1:].T
    return frames


@dataclass(frozen=True)
class CalliasResult:
    index: float
    radii: tuple
    per_radius: tuple
    spread: float
    converged: bool
    integer_distance: float
    nearest_integer: int
    min_gap: float
    quad_error: float

    def as_dict(self):
        return dict(self.__dict__)


def _surface_density(field_, y, R, h_arc, gap_tol):
    """Pullback density of ``tr U (dU)^{d-1}`` at ``R y`` per unit of ``R^{d-1} dS``."""
    N, d = y.shape
    frames = tangent_frames(y)
    dtheta = h_arc / R
    U, gaps = unitary_phase(field_, R * y, gap_tol, return_gap=True)
    eye = np.eye(U.shape[-1])
    herm = np.abs(U - np.conj(np.swapaxes(U, -1, -2))).max()
    invol = np.abs(U @ U - eye).max()
    if not max(herm, invol) <= UNITARY_TOL:
        raise InvariantViolation(f"phase at R={R} not a Hermitian involution ({herm:.2e}, {invol:.2e})")
    dU = []
    for a in range(d - 1):
        e = frames[:, a]
        yp = np.cos(dtheta) * y + np.sin(dtheta) * e
        ym = np.cos(dtheta) * y - np.sin(dtheta) * e
        Up = unitary_phase(field_, R * yp, gap_tol)
        Um = unitary_phase(field_, R * ym, gap_tol)
        # derivative per unit arc length on the sphere of radius R
        dU.append((Up - Um) / (2.0 * h_arc))
    out = np.zeros(N, dtype=complex)
    for perm, sign in signed_permutations(d - 1):
        P = U
        for a in perm:
            P = P @ dU[a]
        out += sign * np.trace(P, axis1=-2, axis2=-1)
    return out, gaps


def callias_prefactor(d):
    k = (d - 1) // 2
    return (1.0 / (2.0 * math.factorial(k))) * (1j / (8.0 * math.pi)) ** k


def callias_index(
    field_: PotentialField,
    rep: CliffordRep | None = None,
    radii=(4.0, 8.0, 16.0),
    sphere: SphereRule | None = None,
    gap_tol=DEFAULT_GAP_TOL,
    h_arc=1e-2,
    spread_tol=1e-2,
) -> CalliasResult:
    """Surface-integral index ``c_d int_{S_R} tr U (dU)^{d-1}`` on a grid of radii.

    The prefactor is ``(1/(2 k!)) (i/8pi)^k`` with ``k = (d-1)/2``.  The
    reported index is the value at the largest radius; ``spread`` is the
    range of the last three per-radius values and ``quad_error`` refers to
    the largest radius.  Tangential derivatives of
    ``U`` use central differences along great circles with arc step
    ``h_arc``.
    """
    d = field_.d
    rep = rep or build_clifford(d)
    if rep.d != d or d % 2 == 0 or d < 3:
        raise ValueError("callias_index needs odd d >= 3 matching the representation")
    sphere = sphere or sphere_rule(d, 24)
    coarse = sphere.companion()
    radii = tuple(float(r) for r in radii)
    pref = callias_prefactor(d)
    vals, min_gap, qerr = [], math.inf, 0.0
    for R in radii:
        dens, gaps = _surface_density(field_, sphere.nodes, R, h_arc, gap_tol)
        val = pref * R ** (d - 1) * np.dot(sphere.weights, dens)
        dens_c, _ = _surface_density(field_, coarse.nodes, R, h_arc, gap_tol)
        val_c = pref * R ** (d - 1) * np.dot(coarse.weights, dens_c)
        dens_h, _ = _surface_density(field_, sphere.nodes, R, 2.0 * h_arc, gap_tol)
        val_h = pref * R ** (d - 1) * np.dot(sphere.weights, dens_h)
        if not np.all(np.isfinite(dens)):
            raise InvariantViolation(f"non-finite Callias density at R={R}")
        if abs(val.imag) > 1e-8 * max(1.0, abs(val.real)):
            raise InvariantViolation(f"Callias integral at R={R} has imaginary part {val.imag:.3e}")
        vals.append(float(val.real))
        # sphere-rule difference plus the Richardson estimate of the O(h^2) FD error
        qerr = float(abs(val - val_c) + abs(val - val_h) / 3.0)
        min_gap = min(min_gap, float(gaps.min()))
    last = np.array(vals[-3:])
    spread = float(last.max() - last.min())
    index = vals[-1]
    nearest = int(round(index))
    return CalliasResult(
        index,
        radii,
        tuple(vals),
        spread,
        bool(spread <= spread_tol),
        abs(index - nearest),
        nearest,
        min_gap,
        float(qerr),
    )
