"""Unitary propagators of ``u' = i A(y) u`` for Hermitian ``A``.

``propagate(A, y1, y2)`` returns ``U(y1, y2)`` with ``d/dy1 U = i A(y1) U``
and ``U(y2, y2) = I``.  Steps use the exponential midpoint rule (order 2) or
a fourth-order commutator-free exponential scheme, each exponential computed
from a Hermitian eigendecomposition, followed by a polar projection back onto
the unitary group.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, EvolutionError

_S3 = math.sqrt(3.0)
CF4_NODES = (0.5 - _S3 / 6.0, 0.5 + _S3 / 6.0)
# weights of the first and second exponential applied
CF4_A = ((0.25 + _S3 / 6.0, 0.25 - _S3 / 6.0), (0.25 - _S3 / 6.0, 0.25 + _S3 / 6.0))


@dataclass(frozen=True)
class EvolutionConfig:
    """Integrator settings.

    Attributes
    ----------
    order : {2, 4}
    step : float
        Fixed step, or the initial step when ``adaptive``.
    adaptive : bool
        Step-doubling control of the error per unit length against ``tol``.
    window : float, optional
        Half-width ``Y`` for loop unitaries.
    project : bool
        Polar projection after every step.
    """

    order: int = 4
    step: float = 1e-2
    adaptive: bool = False
    tol: float = 1e-10
    window: float | None = None
    min_step: float = 1e-12
    max_step: float = 1.0
    project: bool = True
    loop_tol: float = 1e-8

    def __post_init__(self):
        if self.order not in (2, 4):
            raise ConfigError("evolution order must be 2 or 4")
        if not self.step > 0:
            raise ConfigError("step must be positive")


def expi(H, h):
    """``exp(i h H)`` for Hermitian ``H`` of shape ``(..., n, n)``."""
    lam, V = np.linalg.eigh(H)
    return (V * np.exp(1j * h * lam)[..., None, :]) @ np.conj(np.swapaxes(V, -1, -2))


def polar(U):
    """Nearest unitary matrix ``W Z*`` from ``U = W S Z*``."""
    W, _, Zh = np.linalg.svd(U)
    return W @ Zh


def unitarity_defect(U):
    n = U.shape[-1]
    return float(np.abs(np.conj(np.swapaxes(U, -1, -2)) @ U - np.eye(n)).max())


def _sym(M):
    return 0.5 * (M + np.conj(np.swapaxes(M, -1, -2)))


def step_map(A, y, h, order):
    """One-step propagator from ``y`` to ``y + h``."""
    if order == 2:
        return expi(_sym(A(y + 0.5 * h)), h)
    A1 = A(y + CF4_NODES[0] * h)
    A2 = A(y + CF4_NODES[1] * h)
    (a11, a12), (a21, a22) = CF4_A
    first = expi(_sym(a11 * A1 + a12 * A2), h)
    second = expi(_sym(a21 * A1 + a22 * A2), h)
    return second @ first


def propagate(A, y1, y2, cfg: EvolutionConfig | None = None, support=None):
    """Propagator ``U(y1, y2)``.

    Parameters
    ----------
    A : callable
        ``y -> (..., n, n)`` Hermitian; leading batch dimensions are allowed.
    y1, y2 : float
        Final and initial points; ``y1 < y2`` propagates backwards.
    support : (float, float), optional
        Interval outside which ``A`` vanishes; integration is clipped to it.

    Raises
    ------
    EvolutionError
        If adaptive control drives the step below ``cfg.min_step``.
    """
    cfg = cfg or EvolutionConfig()
    y1, y2 = float(y1), float(y2)
    A0 = np.asarray(A(y2))
    eye = np.broadcast_to(np.eye(A0.shape[-1], dtype=complex), A0.shape).copy()
    if y1 == y2:
        return eye
    lo, hi = (y2, y1) if y2 < y1 else (y1, y2)
    if support is not None:
        lo, hi = max(lo, support[0]), min(hi, support[1])
        if lo >= hi:
            return eye
    start, end = (lo, hi) if y2 < y1 else (hi, lo)
    if cfg.adaptive:
        return _propagate_adaptive(A, start, end, cfg, eye)
    length = end - start
    n = max(1, math.ceil(abs(length) / cfg.step - 1e-9))
    h = length / n
    U = eye
    for k in range(n):
        U = step_map(A, start + k * h, h, cfg.order) @ U
        if cfg.project:
            U = polar(U)
    return U


def _propagate_adaptive(A, start, end, cfg, eye):
    direction = 1.0 if end > start else -1.0
    y = start
    h = min(cfg.step, cfg.max_step, abs(end - start))
    U = eye
    p = cfg.order
    while direction * (end - y) > 0:
        h = min(h, abs(end - y))
        hs = direction * h
        big = step_map(A, y, hs, p)
        half = step_map(A, y + 0.5 * hs, 0.5 * hs, p) @ step_map(A, y, 0.5 * hs, p)
        err = float(np.abs(big - half).max())
        if err <= cfg.tol * h or h <= cfg.min_step:
            if err > cfg.tol * h:
                raise EvolutionError(f"step underflow at y={y:.6g} (h={h:.3e}, error {err:.3e})")
            U = half @ U
            if cfg.project:
                U = polar(U)
            y = end if abs(end - y - hs) <= 1e-14 * max(1.0, abs(end)) else y + hs
            grow = 2.0 if err == 0 else min(2.0, 0.9 * (cfg.tol * h / err) ** (1.0 / p))
            h = min(max(h * grow, h), cfg.max_step)
        else:
            h = max(h * max(0.2, 0.9 * (cfg.tol * h / err) ** (1.0 / p)), cfg.min_step)
    return U


@dataclass(frozen=True)
class LoopResult:
    U: np.ndarray
    diagnostic: float
    converged: bool
    window: float


def loop_unitary(V, x, cfg: EvolutionConfig | None = None, support=None) -> LoopResult:
    """``U^{V(x, .)}(Y, -Y)`` and the diagnostic ``||U_Y - U_{Y/2}||``.

    Parameters
    ----------
    V : callable
        ``(x, y) -> (..., n, n)``; ``x`` may be a batch of points.
    support : (float, float), optional
        ``y``-support of ``V``.  The default window is four times its extent.
    """
    cfg = cfg or EvolutionConfig()
    if cfg.window is not None:
        Y = float(cfg.window)
    elif support is not None:
        Y = 4.0 * max(abs(support[0]), abs(support[1]))
    else:
        raise ConfigError("loop_unitary needs cfg.window or a support interval")

    def A(y):
        return V(x, y)

    U = propagate(A, Y, -Y, cfg, support)
    U_half = propagate(A, Y / 2.0, -Y / 2.0, cfg, support)
    diag = float(np.abs(U - U_half).max())
    return LoopResult(U, diag, bool(diag <= cfg.loop_tol), Y)
