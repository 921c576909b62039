"""Lattice check of the one-dimensional resolvent trace identity.

``D = d/dx + A(x)`` on ``[-L, L]`` is discretised by the staggered (box)
scheme: ``D`` maps grid values ``u_k`` to half-grid values
``(u_{j+1} - u_j)/h + A(x_{j+1/2}) (u_j + u_{j+1})/2``, which is second-order
accurate and free of the doubled zero modes of a central difference.  The
interior trace ``sum_x chi(x) tr[(DD* - z)^{-1} - (D*D - z)^{-1}](x, x)`` with a
smooth cutoff ``chi`` is compared with
``(1/2z) tr(A_+ (A_+^2 - z)^{-1/2} - A_- (A_-^2 - z)^{-1/2})``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import ConditioningError, ConfigError

DENSE_BUDGET = 8000
Z_MIN_DISTANCE = 1e-3
MAX_SPACING = 0.05


def ramp(x):
    """``(1 + tanh x)/2``."""
    return 0.5 * (1.0 + np.tanh(x))


def taper(x, a, b):
    """``C^infinity`` cutoff equal to 1 on ``|x| <= a`` and 0 on ``|x| >= b``."""
    u = np.clip((np.abs(x) - a) / (b - a), 0.0, 1.0)

    def g(s):
        return np.where(s > 0, np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0)

    return g(1.0 - u) / (g(1.0 - u) + g(u))


def _hermitian(M, name):
    M = np.atleast_2d(np.asarray(M, dtype=complex))
    if M.shape[0] != M.shape[1] or np.abs(M - M.conj().T).max() > 1e-12:
        raise ConfigError(f"{name} must be a square Hermitian matrix")
    return M


@dataclass(frozen=True)
class OneDModel:
    """``A(x) = A_- + ramp(x) (A_+ - A_-)`` on a grid of ``N`` points in ``[-L, L]``.

    The trace is restricted by a smooth cutoff equal to 1 on
    ``|x| <= taper_inner * L`` and 0 beyond ``taper_outer * L``; Dirichlet
    truncation effects live outside that window.
    """

    A_minus: np.ndarray
    A_plus: np.ndarray
    L: float = 40.0
    N: int = 2000
    taper_inner: float = 0.375
    taper_outer: float = 0.75

    def __post_init__(self):
        Am = _hermitian(self.A_minus, "A_minus")
        Ap = _hermitian(self.A_plus, "A_plus")
        if Am.shape != Ap.shape:
            raise ConfigError("A_minus and A_plus must have the same size")
        object.__setattr__(self, "A_minus", Am)
        object.__setattr__(self, "A_plus", Ap)
        if self.h > MAX_SPACING:
            raise ConfigError(f"grid spacing {self.h:.3g} exceeds {MAX_SPACING}; increase N")
        sat = max(abs(ramp(-self.L)), abs(1.0 - ramp(self.L)))
        if sat > 1e-8:
            raise ConfigError(f"ramp not saturated at the boundary ({sat:.2e}); increase L")
        if not 0 < self.taper_inner < self.taper_outer < 1:
            raise ConfigError("need 0 < taper_inner < taper_outer < 1")

    @property
    def m(self):
        return self.A_minus.shape[0]

    @property
    def h(self):
        return 2.0 * self.L / (self.N - 1)

    @property
    def grid(self):
        return np.linspace(-self.L, self.L, self.N)

    @property
    def half_grid(self):
        x = self.grid
        return 0.5 * (x[1:] + x[:-1])

    def potential(self, x):
        return self.A_minus + ramp(np.asarray(x))[..., None, None] * (self.A_plus - self.A_minus)

    def blocks(self):
        """``(Lb, Rb)``: the two nonzero blocks of each row of ``D``."""
        A = self.potential(self.half_grid)
        eye = np.eye(self.m) / self.h
        return -eye + 0.5 * A, eye + 0.5 * A

    def dense_operator(self):
        m, N = self.m, self.N
        Lb, Rb = self.blocks()
        D = np.zeros(((N - 1) * m, N * m), dtype=complex)
        for j in range(N - 1):
            D[j * m : (j + 1) * m, j * m : (j + 1) * m] = Lb[j]
            D[j * m : (j + 1) * m, (j + 1) * m : (j + 2) * m] = Rb[j]
        return D

    def weights(self):
        a, b = self.taper_inner * self.L, self.taper_outer * self.L
        return taper(self.half_grid, a, b), taper(self.grid, a, b)

    def describe(self):
        return {
            "m": self.m,
            "L": self.L,
            "N": self.N,
            "h": self.h,
            "A_minus": [self.A_minus.real.tolist(), self.A_minus.imag.tolist()],
            "A_plus": [self.A_plus.real.tolist(), self.A_plus.imag.tolist()],
            "taper": [self.taper_inner, self.taper_outer],
            "scheme": "staggered-box",
        }


def _adj(M):
    return np.conj(np.swapaxes(M, -1, -2))


def block_tridiagonal_products(model: OneDModel):
    """Block tridiagonal ``(diag, upper, lower)`` of ``DD*`` and ``D*D``."""
    Lb, Rb = model.blocks()
    Lh, Rh = _adj(Lb), _adj(Rb)
    # DD* on the half grid
    dd_diag = Lb @ Lh + Rb @ Rh
    dd_up = Rb[:-1] @ Lh[1:]
    dd_lo = _adj(dd_up)
    # D*D on the grid
    m, N = model.m, model.N
    dsd_diag = np.zeros((N, m, m), dtype=complex)
    dsd_diag[:-1] += Lh @ Lb
    dsd_diag[1:] += Rh @ Rb
    dsd_up = Lh @ Rb
    dsd_lo = _adj(dsd_up)
    return (dd_diag, dd_up, dd_lo), (dsd_diag, dsd_up, dsd_lo)


def block_diag_of_inverse(diag, up, lo):
    """Diagonal blocks of the inverse of a block tridiagonal matrix.

    Two-sweep Schur recursion (recursive Green's functions): left- and
    right-connected inverses are combined as
    ``G_jj = (D_j - lo_{j-1} gL_{j-1} up_{j-1} - up_j gR_{j+1} lo_j)^{-1}``.
    """
    n = len(diag)
    inv = np.linalg.inv
    SL = np.zeros_like(diag)  # left self-energies
    gL = inv(diag[0])
    for j in range(1, n):
        SL[j] = lo[j - 1] @ gL @ up[j - 1]
        gL = inv(diag[j] - SL[j])
    SR = np.zeros_like(diag)
    gR = inv(diag[-1])
    for j in range(n - 2, -1, -1):
        SR[j] = up[j] @ gR @ lo[j]
        gR = inv(diag[j] - SR[j])
    return inv(diag - SL - SR)


def _check_z(z):
    z = complex(z)
    dist = abs(z.imag) if z.real >= 0 else abs(z)
    if dist < Z_MIN_DISTANCE:
        raise ConditioningError(f"z={z} lies within {Z_MIN_DISTANCE} of [0, oo)")
    return z


def lhs_resolvent_trace(model: OneDModel, z=-1.0, method="banded") -> complex:
    """Tapered ``tr[(DD* - z)^{-1} - (D*D - z)^{-1}]``.

    Parameters
    ----------
    method : {"banded", "dense"}
        Block-tridiagonal selected inversion (default) or dense inversion,
        the latter limited to ``N m <= 8000``.
    """
    z = _check_z(z)
    m = model.m
    w_half, w_grid = model.weights()
    if method == "dense":
        if model.N * m > DENSE_BUDGET:
            raise ConfigError(f"dense budget exceeded: N*m = {model.N * m} > {DENSE_BUDGET}")
        D = model.dense_operator()

        def diag_inv(K):
            K = K - z * np.eye(K.shape[0])
            if z.imag == 0 and z.real < 0:
                Kinv = sla.cho_solve(sla.cho_factor(K, lower=True), np.eye(K.shape[0]))
            else:
                Kinv = np.linalg.inv(K)
            return np.diag(Kinv).reshape(-1, m).sum(axis=1)

        g_half = diag_inv(D @ D.conj().T)
        g_grid = diag_inv(D.conj().T @ D)
    elif method == "banded":
        (a, b, c), (p, q, r) = block_tridiagonal_products(model)
        eye = np.eye(m)
        g_half = np.trace(block_diag_of_inverse(a - z * eye, b, c), axis1=-2, axis2=-1)
        g_grid = np.trace(block_diag_of_inverse(p - z * eye, q, r), axis1=-2, axis2=-1)
    else:
        raise ConfigError(f"unknown method {method!r}")
    return complex(np.dot(w_half, g_half) - np.dot(w_grid, g_grid))


def rhs_ssf_formula(A_minus, A_plus, z=-1.0) -> complex:
    """``(1/2z) tr(A_+ (A_+^2 - z)^{-1/2} - A_- (A_-^2 - z)^{-1/2})`` on the principal branch."""
    z = complex(z)
    if z == 0:
        raise ConditioningError("z = 0 is not allowed")

    def term(A):
        lam = np.linalg.eigvalsh(_hermitian(A, "endpoint"))
        w = lam**2 - z
        if np.any((np.abs(w.imag) <= 1e-14 * np.maximum(1.0, np.abs(w))) & (w.real <= 0)):
            raise ConditioningError(f"A^2 - z touches the branch cut (-oo, 0] for z={z}")
        return np.sum(lam / np.sqrt(w))

    return complex((term(A_plus) - term(A_minus)) / (2.0 * z))


@dataclass(frozen=True)
class RefinementRow:
    N: int
    h: float
    lhs: complex
    rhs: complex
    gap: float
    ratio: float | None


def refinement_table(model: OneDModel, z=-1.0, levels=(2000, 4000), method="banded"):
    """``|lhs - rhs|`` for a sequence of grid sizes at fixed ``L``.

    ``ratio`` is the gap reduction relative to the previous row.
    """
    from dataclasses import replace

    rhs = rhs_ssf_formula(model.A_minus, model.A_plus, z)
    rows, prev = [], None
    for N in levels:
        mod = replace(model, N=int(N))
        lhs = lhs_resolvent_trace(mod, z, method)
        gap = abs(lhs - rhs)
        rows.append(RefinementRow(int(N), mod.h, lhs, rhs, gap, prev / gap if prev and gap > 0 else None))
        prev = gap
    return rows
