"""Exact commutator algebra in a truncated oscillator basis.

Each axis carries the ladder operators of an ``n``-level oscillator,
``X = sqrt(theta/2) (a + a^+)`` and ``P = i sqrt(theta/2) (a^+ - a)``, lifted to
the ``d``-fold tensor product.  Truncation makes ``[a, a^+] = I - n E``, where
``E`` projects on the top level, so identities hold only on part of the space.

Leakage lemma
-------------
A monomial in ladder operators of total degree ``q`` moves a basis state's
total excitation by at most ``q``.  A commutator identity between products
evaluated on a basis state of total excitation ``N`` is exact whenever no
intermediate state needs an axis level ``>= n``.  For the degree-1 and
degree-2 checks used here (``[X, P]``, ``[L, X]``, ``[L, P]``, ``[L, L]``) that
holds for ``N <= n - 2``; ``L`` conserves total excitation, so products of
rotation generators never leak.  Scalar checks against quadratic operators
such as ``P.P`` raise excitation by two and need ``N <= n - 3``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import ShapeMismatch, TruncationTooSmall
from .hilbert import PhysicsParams


@dataclass(frozen=True, eq=False)
class MatrixOperator:
    """Dense operator on ``n**axes`` basis states."""

    matrix: np.ndarray
    n: int
    axes: int
    label: str = ""

    def __matmul__(self, other: "MatrixOperator") -> "MatrixOperator":
        return MatrixOperator(self.matrix @ other.matrix, self.n, self.axes,
                              f"{self.label}{other.label}")

    def __add__(self, other):
        return MatrixOperator(self.matrix + _m(other), self.n, self.axes, f"{self.label}+{other.label}")

    def __sub__(self, other):
        return MatrixOperator(self.matrix - _m(other), self.n, self.axes, f"{self.label}-{other.label}")

    def __mul__(self, c):
        return MatrixOperator(c * self.matrix, self.n, self.axes, self.label)

    __rmul__ = __mul__

    @property
    def dagger(self) -> "MatrixOperator":
        return MatrixOperator(self.matrix.conj().T, self.n, self.axes, self.label + "^+")

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0) <= tol)


def _m(op) -> np.ndarray:
    return op.matrix if isinstance(op, MatrixOperator) else np.asarray(op)


def commutator(a: MatrixOperator, b: MatrixOperator) -> MatrixOperator:
    return MatrixOperator(a.matrix @ b.matrix - b.matrix @ a.matrix, a.n, a.axes,
                          f"[{a.label},{b.label}]")


def annihilation(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1).astype(np.complex128)


def _lift(single: np.ndarray, axis: int, axes: int) -> np.ndarray:
    n = single.shape[0]
    eye = np.eye(n, dtype=np.complex128)
    return reduce(np.kron, [single if a == axis else eye for a in range(axes)])


def excitation_numbers(n: int, axes: int) -> np.ndarray:
    """Total excitation of each tensor basis state, in kron ordering."""
    levels = np.arange(n)
    return reduce(lambda acc, nxt: (acc[:, None] + nxt[None, :]).ravel(),
                  [levels] * axes)


def safe_mask(n: int, axes: int, cutoff: int | None = None) -> np.ndarray:
    """Boolean mask of basis states with total excitation ``<= cutoff`` (default ``n - 2``)."""
    cutoff = n - 2 if cutoff is None else cutoff
    return excitation_numbers(n, axes) <= cutoff


def restricted_residual(matrix: np.ndarray, n: int, axes: int, cutoff: int | None = None) -> float:
    """Max-norm of ``matrix`` acting on safe-subspace states (its safe columns)."""
    cols = safe_mask(n, axes, cutoff)
    sub = matrix[:, cols]
    return float(np.max(np.abs(sub), initial=0.0))


def build_xp_matrices(n: int, axis_count: int, params: PhysicsParams):
    """Position and translation-generator matrices for every axis."""
    if n < 4:
        raise TruncationTooSmall(f"truncation n={n} is below the minimum of 4")
    a = annihilation(n)
    ad = a.conj().T
    s = math.sqrt(params.theta / 2.0)
    x1 = s * (a + ad)
    p1 = 1j * s * (ad - a)
    X = [MatrixOperator(_lift(x1, j, axis_count), n, axis_count, f"X{j + 1}") for j in range(axis_count)]
    P = [MatrixOperator(_lift(p1, j, axis_count), n, axis_count, f"P{j + 1}") for j in range(axis_count)]
    return X, P


def levi_civita(j: int, k: int, l: int) -> int:
    if len({j, k, l}) < 3:
        return 0
    perm = (j, k, l)
    return 1 if perm in ((0, 1, 2), (1, 2, 0), (2, 0, 1)) else -1


def build_rotation_generators(n: int, params: PhysicsParams):
    """``L_j = eps_jkl X_k P_l`` on the ``n**3`` space."""
    X, P = build_xp_matrices(n, 3, params)
    dim = n**3
    L = []
    for j in range(3):
        acc = np.zeros((dim, dim), dtype=np.complex128)
        for k, l in itertools.permutations(range(3), 2):
            e = levi_civita(j, k, l)
            if e:
                acc += e * (X[k].matrix @ P[l].matrix)
        L.append(MatrixOperator(acc, n, 3, f"L{j + 1}"))
    return tuple(L)


def galilean_generators(X, P, t: float, mass: float):
    """``G_j = t P_j - m X_j``."""
    return [t * p - mass * x for x, p in zip(X, P)]


def ccr_residual(X, P, params: PhysicsParams, cutoff: int | None = None) -> float:
    """Max over j,k of ``[X_j, P_k] - i theta delta_jk`` on the safe subspace.

    Only the safe columns of each commutator are formed, which keeps large
    truncations (``n**d`` in the thousands) cheap.
    """
    n, axes = X[0].n, X[0].axes
    cols = safe_mask(n, axes, cutoff)
    eye = np.eye(n**axes)[:, cols]
    worst = 0.0
    for j, k in itertools.product(range(axes), repeat=2):
        x, p = X[j].matrix, P[k].matrix
        r = x @ p[:, cols] - p @ x[:, cols] - (1j * params.theta * eye if j == k else 0)
        worst = max(worst, float(np.max(np.abs(r), initial=0.0)))
    return worst


def check_vector_operator(L, A, params: PhysicsParams, cutoff: int | None = None,
                          full: bool = False) -> dict:
    """Residual of ``[L_j, A_k] = i theta eps_jkl A_l``.

    Returns a dict with the max-norm residual on the safe subspace (and on the
    full space when ``full`` is set), plus the per-(j,k) table.
    """
    if len(L) != 3 or len(A) != 3:
        raise ShapeMismatch("rotation check needs triples of operators")
    shape = L[0].matrix.shape
    for op in (*L, *A):
        if op.matrix.shape != shape:
            raise ShapeMismatch(f"{op.label} has shape {op.matrix.shape}, expected {shape}")
    n, axes = L[0].n, L[0].axes
    table = {}
    worst = worst_full = 0.0
    for j, k in itertools.product(range(3), repeat=2):
        r = commutator(L[j], A[k]).matrix.copy()
        for l in range(3):
            e = levi_civita(j, k, l)
            if e:
                r -= 1j * params.theta * e * A[l].matrix
        res = restricted_residual(r, n, axes, cutoff)
        table[f"{j + 1}{k + 1}"] = res
        worst = max(worst, res)
        if full:
            worst_full = max(worst_full, float(np.max(np.abs(r))))
    out = {"residual": worst, "table": table}
    if full:
        out["residual_full"] = worst_full
    return out


def check_scalar(L, A, B, cutoff: int | None = None) -> float:
    """Max residual of ``[L_j, A.B] = 0`` on the safe subspace (default cutoff ``n - 3``)."""
    n, axes = L[0].n, L[0].axes
    cutoff = n - 3 if cutoff is None else cutoff
    dot = sum((a.matrix @ b.matrix for a, b in zip(A, B)), np.zeros_like(A[0].matrix))
    s = MatrixOperator(dot, n, axes, "A.B")
    return max(restricted_residual(commutator(Lj, s).matrix, n, axes, cutoff) for Lj in L)


def com_operators(X, P, m1: float, m2: float):
    """Centre-of-mass and relative operators from two single-axis particles.

    Returns ``(Xc, Pc, xr, pr)`` with ``Xc = (m1 X1 + m2 X2) / M``, ``Pc = P1 + P2``,
    ``xr = X1 - X2`` and ``pr = (m2 P1 - m1 P2) / M``.
    """
    M = m1 + m2
    Xc = (m1 / M) * X[0] + (m2 / M) * X[1]
    Pc = P[0] + P[1]
    xr = X[0] - X[1]
    pr = (m2 / M) * P[0] - (m1 / M) * P[1]
    return Xc, Pc, xr, pr
