"""Position, momentum and free-Hamiltonian operators applied through the Fourier basis.

Every operator here is the sum of a part diagonal in position and a part
diagonal in momentum, which covers ``x_j``, ``p_j = -i theta d/dx_j``,
pointwise ``g(r)``, ``f(p)`` and ``H = (h / 4 pi theta m) p^2 + V(r)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

from .errors import GridMismatch, SpectralAliasing
from .hilbert import (GridSpec, PhysicsParams, WaveFunction, inner_product,
                      spectral_tail_fraction)

#: Fraction of the spectrum (from the Nyquist edge) that must be empty.
APPLY_BAND = 0.10
PRODUCT_BAND = 0.20
ALIAS_TOL = 1e-10


def kinetic_multiplier(grid: GridSpec, params: PhysicsParams, mass) -> np.ndarray:
    """``sum_j (h / 4 pi theta m_j) (theta k_j)^2`` on the FFT grid.

    ``mass`` may be a scalar or one value per axis (two-body configuration grids).
    """
    masses = np.broadcast_to(np.asarray(mass, dtype=float), (grid.dim,))
    pref = params.h / (4.0 * math.pi * params.theta)
    return sum(pref * (params.theta * k) ** 2 / m for k, m in zip(grid.kgrid(), masses))


@dataclass(frozen=True, eq=False)
class SpectralOperator:
    """``A = r_mult(r) + F^{-1} p_mult(k) F`` on a fixed grid.

    Either multiplier may be ``None``.  ``kind`` and ``label`` are descriptive.
    """

    kind: str
    grid: GridSpec
    params: PhysicsParams
    r_mult: np.ndarray | None = None
    p_mult: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        for name in ("r_mult", "p_mult"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr, copy=True)
                arr.flags.writeable = False
                object.__setattr__(self, name, arr)

    @property
    def self_adjoint(self) -> bool:
        return all(m is None or np.isrealobj(m) or not np.any(m.imag)
                   for m in (self.r_mult, self.p_mult))

    def __add__(self, other: "SpectralOperator") -> "SpectralOperator":
        if self.grid != other.grid:
            raise GridMismatch("operators live on different grids")

        def add(a, b):
            if a is None:
                return b
            if b is None:
                return a
            return a + b

        return SpectralOperator("sum", self.grid, self.params,
                                add(self.r_mult, other.r_mult),
                                add(self.p_mult, other.p_mult),
                                f"{self.label}+{other.label}")

    def act(self, amplitudes: np.ndarray) -> np.ndarray:
        """Apply to a raw amplitude array without any checks."""
        out = np.zeros_like(amplitudes, dtype=np.complex128)
        if self.r_mult is not None:
            out += self.r_mult * amplitudes
        if self.p_mult is not None:
            out += sfft.ifftn(self.p_mult * sfft.fftn(amplitudes))
        return out


def position(grid: GridSpec, params: PhysicsParams, axis: int = 0) -> SpectralOperator:
    return SpectralOperator("position", grid, params, r_mult=grid.coords()[axis], label=f"x{axis}")


def momentum(grid: GridSpec, params: PhysicsParams, axis: int = 0) -> SpectralOperator:
    return SpectralOperator("momentum", grid, params,
                            p_mult=params.theta * grid.kgrid()[axis], label=f"p{axis}")


def function_of_p(grid: GridSpec, params: PhysicsParams,
                  f: Callable[..., np.ndarray], label: str = "f(p)") -> SpectralOperator:
    """``f`` receives one momentum array per axis."""
    p = [params.theta * k for k in grid.kgrid()]
    return SpectralOperator("function_of_p", grid, params, p_mult=np.asarray(f(*p)), label=label)


def function_of_r(grid: GridSpec, params: PhysicsParams,
                  g: Callable[..., np.ndarray], label: str = "g(r)") -> SpectralOperator:
    """``g`` receives one coordinate array per axis."""
    return SpectralOperator("function_of_r", grid, params,
                            r_mult=np.asarray(g(*grid.coords())), label=label)


def free_hamiltonian(grid: GridSpec, params: PhysicsParams, mass=None) -> SpectralOperator:
    mass = params.mass if mass is None else mass
    return SpectralOperator("free_hamiltonian", grid, params,
                            p_mult=kinetic_multiplier(grid, params, mass), label="H0")


def hamiltonian(grid: GridSpec, params: PhysicsParams, potential: np.ndarray | None = None,
                mass=None) -> SpectralOperator:
    """Free Hamiltonian plus a real local potential sampled on the grid."""
    h0 = free_hamiltonian(grid, params, mass)
    if potential is None:
        return h0
    return SpectralOperator("hamiltonian", grid, params, r_mult=np.asarray(potential, dtype=float),
                            p_mult=h0.p_mult, label="H")


def velocity(grid: GridSpec, params: PhysicsParams, axis: int = 0, mass=None) -> SpectralOperator:
    mass = params.mass if mass is None else mass
    return SpectralOperator("velocity", grid, params,
                            p_mult=params.theta * grid.kgrid()[axis] / mass, label=f"v{axis}")


def _warn_alias(psi: WaveFunction, band: float):
    tail = spectral_tail_fraction(psi, band)
    if tail > ALIAS_TOL:
        warnings.warn(f"top {band:.0%} of spectrum holds {tail:.2e} of the norm",
                      SpectralAliasing, stacklevel=3)


def apply(op: SpectralOperator, psi: WaveFunction) -> WaveFunction:
    if op.grid != psi.grid:
        raise GridMismatch(f"operator grid {op.grid} != state grid {psi.grid}")
    if op.p_mult is not None:
        _warn_alias(psi, APPLY_BAND)
    return WaveFunction(psi.grid, op.act(psi.amplitudes))


def expectation(op: SpectralOperator, psi: WaveFunction) -> complex:
    """``<psi|A|psi>``; complex so that the imaginary part can serve as a diagnostic."""
    return inner_product(psi, apply(op, psi))


def commutator_expectation(a: SpectralOperator, b: SpectralOperator,
                           psi: WaveFunction) -> complex:
    """``<psi|(AB - BA)|psi>`` evaluated by successive application."""
    for op in (a, b):
        if op.grid != psi.grid:
            raise GridMismatch("operator and state grids differ")
    _warn_alias(psi, PRODUCT_BAND)
    x = psi.amplitudes
    ab = a.act(b.act(x))
    ba = b.act(a.act(x))
    return complex(np.vdot(x, ab - ba) * psi.grid.dv)


def expectations(ops: Sequence[SpectralOperator], psi: WaveFunction) -> np.ndarray:
    return np.array([expectation(op, psi) for op in ops])
