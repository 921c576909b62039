"""Minimal-rank Clifford generators for odd dimensions.

The generators satisfy ``c^i c^j + c^j c^i = -2 delta_ij`` and are
anti-Hermitian.  For ``d = 3`` they are exactly ``c^j = -i sigma^j`` with the
standard Pauli matrices; higher odd dimensions are obtained by the recursion

    c'^j     = c^j (x) sigma^1,      j <= d
    c'^{d+1} = 1   (x) (-i sigma^2)
    c'^{d+2} = 1   (x) (-i sigma^3)

followed by a sign flip of the last generator when needed to land on the
representation with ``kappa_c = (2i)^((d-1)/2) (-i)^d``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


def minimal_rank(d: int) -> int:
    return 2 ** ((d - 1) // 2)


def kappa_minimal(d: int) -> complex:
    """``(2i)^((d-1)/2) (-i)^d``, the trace of ``c^1...c^d`` in minimal rank."""
    return complex((2j) ** ((d - 1) // 2) * (-1j) ** d)


@dataclass(frozen=True)
class CliffordRep:
    """Immutable Clifford representation.

    Attributes
    ----------
    d : int
        Odd dimension.
    r : int
        Matrix size, ``2**((d-1)/2)``.
    generators : ndarray, shape (d, r, r)
        ``generators[j-1]`` is ``c^j``.
    kappa_c : complex
        ``tr(c^1 ... c^d)``.
    """

    d: int
    r: int
    generators: np.ndarray = field(repr=False)
    kappa_c: complex

    def __post_init__(self):
        self.generators.setflags(write=False)

    @property
    def sigma(self) -> np.ndarray:
        """Hermitian matrices ``i c^j`` (the Pauli matrices for d=3)."""
        return 1j * self.generators

    def residuals(self) -> dict:
        return clifford_residuals(self)


def build_clifford(d: int) -> CliffordRep:
    if not isinstance(d, (int, np.integer)) or d <= 0 or d % 2 == 0:
        raise ValueError(f"Clifford dimension must be an odd positive integer, got {d!r}")
    d = int(d)
    gens = [np.array([[-1j]])]
    cur = 1
    while cur < d:
        r = gens[0].shape[0]
        eye = np.eye(r)
        gens = [np.kron(c, PAULI[0]) for c in gens]
        gens.append(np.kron(eye, -1j * PAULI[1]))
        gens.append(np.kron(eye, -1j * PAULI[2]))
        cur += 2
    gens = np.array(gens, dtype=complex)
    target = kappa_minimal(d)
    kappa = np.trace(_product(gens, range(d)))
    if abs(kappa + target) < abs(kappa - target):
        gens[-1] = -gens[-1]
        kappa = np.trace(_product(gens, range(d)))
    return CliffordRep(d=d, r=gens.shape[1], generators=gens, kappa_c=complex(kappa))


def _product(gens, indices):
    r = gens.shape[1]
    out = np.eye(r, dtype=complex)
    for i in indices:
        out = out @ gens[i]
    return out


def levi_civita(alpha) -> int:
    """Levi-Civita symbol for a sequence of ``d = len(alpha)`` indices in ``1..d``."""
    alpha = [int(a) for a in alpha]
    d = len(alpha)
    for a in alpha:
        if not 1 <= a <= d:
            raise ValueError(f"index {a} out of range 1..{d}")
    if len(set(alpha)) < d:
        return 0
    return permutation_sign([a - 1 for a in alpha])


def permutation_sign(perm) -> int:
    """Sign of a permutation of ``0..n-1`` via cycle decomposition."""
    perm = list(perm)
    seen = [False] * len(perm)
    sign = 1
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def signed_permutations(n: int):
    """List of ``(perm, sign)`` over all permutations of ``range(n)``."""
    return [(p, permutation_sign(p)) for p in itertools.permutations(range(n))]


def clifford_trace(rep: CliffordRep, word) -> complex:
    """Trace of the ordered product ``c^{w_1} ... c^{w_n}`` (1-based indices)."""
    word = [int(w) for w in word]
    for w in word:
        if not 1 <= w <= rep.d:
            raise ValueError(f"generator index {w} out of range 1..{rep.d}")
    return complex(np.trace(_product(rep.generators, [w - 1 for w in word])))


def clifford_residuals(rep: CliffordRep) -> dict:
    """Worst-case residuals of the defining invariants (all should be ~1e-16)."""
    c = rep.generators
    eye = np.eye(rep.r)
    anti = 0.0
    for i in range(rep.d):
        for j in range(rep.d):
            res = c[i] @ c[j] + c[j] @ c[i] + 2.0 * (i == j) * eye
            anti = max(anti, float(np.abs(res).max()))
    herm = max(float(np.abs(ci.conj().T + ci).max()) for ci in c)
    odd = 0.0
    for n in range(1, rep.d, 2):
        for word in itertools.product(range(1, rep.d + 1), repeat=n):
            odd = max(odd, abs(clifford_trace(rep, word)))
    eps = 0.0
    for perm, sign in signed_permutations(rep.d):
        val = clifford_trace(rep, [p + 1 for p in perm])
        eps = max(eps, abs(val - rep.kappa_c * sign))
    return {
        "anticommutator": anti,
        "anti_hermitian": herm,
        "odd_short_trace": odd,
        "levi_civita_trace": eps,
        "kappa_formula": abs(rep.kappa_c - kappa_minimal(rep.d)),
    }
