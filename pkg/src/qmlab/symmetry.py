"""Translations, Galilean boosts and matrix-basis rotations.

Boosts use the factorized form

    U_G(V, t) = exp(-i m V^2 t / 2 theta) exp(i m V.r / theta) exp(-i V t.p / theta)
              = exp(+i m V^2 t / 2 theta) exp(-i V t.p / theta) exp(i m V.r / theta)

so each factor is diagonal in either position or momentum and no operator
splitting is involved.  The two lines are evaluated independently as a
cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
from scipy.linalg import expm

from .hilbert import (PhysicsParams, WaveFunction, check_leak, inner_product)
from .spectralops import expectation, momentum, position


@dataclass(frozen=True)
class SymmetryTransform:
    """Descriptor of a finite transformation.

    ``kind`` is ``translation`` (``shift``), ``boost`` (``velocity``, ``t``) or
    ``rotation`` (``angles``, matrix basis only).
    """

    kind: str
    params: PhysicsParams
    shift: tuple = ()
    velocity: tuple = ()
    t: float = 0.0
    angles: tuple = ()

    def apply(self, psi: WaveFunction) -> WaveFunction:
        if self.kind == "translation":
            return translate(psi, self.shift, self.params)
        if self.kind == "boost":
            return galilean_boost(psi, self.velocity, self.t, self.params)
        raise ValueError("rotations act on matrix-basis vectors; use rotation_operator")


def _vec(v, dim: int) -> np.ndarray:
    return np.broadcast_to(np.asarray(v, dtype=float), (dim,)).copy()


def _translate_raw(amp: np.ndarray, psi: WaveFunction, a: np.ndarray) -> np.ndarray:
    phase = np.exp(-1j * sum(ai * k for ai, k in zip(a, psi.grid.kgrid())))
    return sfft.ifftn(phase * sfft.fftn(amp))


def translate(psi: WaveFunction, a, params: PhysicsParams | None = None) -> WaveFunction:
    """``psi'(r) = psi(r - a)`` via the spectral phase ``exp(-i a.p / theta)``.

    ``p / theta = k`` on the grid, so ``theta`` drops out of the phase; it is
    accepted for symmetry with the other transforms.
    """
    a = _vec(a, psi.grid.dim)
    out = WaveFunction(psi.grid, _translate_raw(psi.amplitudes, psi, a))
    check_leak(psi, out)
    return out


def _position_phase(psi: WaveFunction, V: np.ndarray, params: PhysicsParams, mass: float):
    return np.exp(1j * mass / params.theta * sum(v * x for v, x in zip(V, psi.grid.coords())))


def galilean_boost(psi: WaveFunction, V, t: float, params: PhysicsParams, mass=None,
                   ordering: int = 1) -> WaveFunction:
    """Apply ``U_G(V, t)`` using the first (default) or second factor ordering."""
    mass = params.mass if mass is None else mass
    V = _vec(V, psi.grid.dim)
    v2 = float(V @ V)
    shift = V * t
    if ordering == 1:
        amp = _translate_raw(psi.amplitudes, psi, shift)
        amp = _position_phase(psi, V, params, mass) * amp
        amp = np.exp(-1j * mass * v2 * t / (2 * params.theta)) * amp
    elif ordering == 2:
        amp = _position_phase(psi, V, params, mass) * psi.amplitudes
        amp = _translate_raw(amp, psi, shift)
        amp = np.exp(1j * mass * v2 * t / (2 * params.theta)) * amp
    else:
        raise ValueError("ordering must be 1 or 2")
    out = WaveFunction(psi.grid, amp)
    check_leak(psi, out)
    return out


def check_boost_factorization(V, t: float, params: PhysicsParams, psi: WaveFunction,
                              mass=None) -> float:
    """``||U_G psi (ordering 1) - U_G psi (ordering 2)||``."""
    a = galilean_boost(psi, V, t, params, mass, ordering=1)
    b = galilean_boost(psi, V, t, params, mass, ordering=2)
    return math.sqrt(np.sum(np.abs(a.amplitudes - b.amplitudes) ** 2) * psi.grid.dv)


def generator_first_order(psi: WaveFunction, V, t: float, params: PhysicsParams,
                          mass=None) -> WaveFunction:
    """``(1 - (i / theta) V.(t p - m r)) psi``: the boost to first order in ``V``."""
    mass = params.mass if mass is None else mass
    grid = psi.grid
    V = _vec(V, grid.dim)
    G = np.zeros(grid.shape, dtype=np.complex128)
    for j in range(grid.dim):
        if V[j] == 0:
            continue
        Gj = t * momentum(grid, params, j).act(psi.amplitudes) - mass * grid.coords()[j] * psi.amplitudes
        G += V[j] * Gj
    return WaveFunction(grid, psi.amplitudes - 1j / params.theta * G)


def velocity_transform_check(psi: WaveFunction, V, params: PhysicsParams, mass=None,
                             t: float = 0.0) -> dict:
    """Mean velocity ``<p>/m`` before and after a boost by ``V``."""
    mass = params.mass if mass is None else mass
    grid = psi.grid
    V = _vec(V, grid.dim)
    boosted = galilean_boost(psi, V, t, params, mass)
    before = np.array([expectation(momentum(grid, params, j), psi).real for j in range(grid.dim)]) / mass
    after = np.array([expectation(momentum(grid, params, j), boosted).real for j in range(grid.dim)]) / mass
    err = float(np.max(np.abs(after - (before + V))))
    return {"v_before": before, "v_after": after, "expected": before + V, "error": err}


def mean_position(psi: WaveFunction, params: PhysicsParams) -> np.ndarray:
    return np.array([expectation(position(psi.grid, params, j), psi).real
                     for j in range(psi.grid.dim)])


def mean_momentum(psi: WaveFunction, params: PhysicsParams) -> np.ndarray:
    return np.array([expectation(momentum(psi.grid, params, j), psi).real
                     for j in range(psi.grid.dim)])


def fidelity(a: WaveFunction, b: WaveFunction) -> float:
    return abs(inner_product(a, b))


def rotation_operator(L, angles, params: PhysicsParams) -> np.ndarray:
    """``exp(-i phi.L / theta)`` in the truncated oscillator basis."""
    phi = np.asarray(angles, dtype=float)
    gen = sum(p * l.matrix for p, l in zip(phi, L))
    return expm(-1j * gen / params.theta)
