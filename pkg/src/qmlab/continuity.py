"""Probability currents, the higher-order divergence identities and continuity residuals.

For ``D = nabla^2`` the identity

    psi* (D^n psi) - (D^n psi*) psi = div J_2n

holds with ``J_2n`` a sum of ``n`` antisymmetric brackets::

    + [ (D^q psi*) grad(D^(n-1-q) psi) - grad(D^(n-1-q) psi*) (D^q psi) ]     (bracket 2q)
    - [ grad(D^q psi*) (D^(n-1-q) psi) - (D^(n-1-q) psi*) grad(D^q psi) ]     (bracket 2q+1)

for bracket indices ``0 .. n-1``.  All derivatives are spectral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import ConfigInvalid, InsufficientSnapshots
from .hilbert import GridSpec, PhysicsParams, WaveFunction, probability_density
from .spectralops import _warn_alias, kinetic_multiplier


@dataclass(frozen=True, eq=False)
class CurrentField:
    grid: GridSpec
    order: int
    components: np.ndarray  # shape (dim, *grid.shape)


def _fft_deriv(grid: GridSpec):
    ks = grid.kgrid()
    k2 = grid.k_squared()

    def grad(f):
        F = sfft.fftn(f)
        return np.array([sfft.ifftn(1j * k * F) for k in ks])

    def lap_pow(f, q):
        if q == 0:
            return f
        return sfft.ifftn((-k2) ** q * sfft.fftn(f))

    def div(v):
        return sum(sfft.ifftn(1j * k * sfft.fftn(c)) for k, c in zip(ks, v))

    return grad, lap_pow, div


def divergence(field: np.ndarray, grid: GridSpec) -> np.ndarray:
    return _fft_deriv(grid)[2](field)


def _j2n(a: np.ndarray, b: np.ndarray, n: int, grid: GridSpec) -> np.ndarray:
    """Bracket-sum current for ``a D^n b - (D^n a) b`` (``a = psi*``, ``b = psi``)."""
    grad, lap, _ = _fft_deriv(grid)
    J = np.zeros((grid.dim, *grid.shape), dtype=np.complex128)
    for i in range(n):
        q = i // 2
        r = n - 1 - q
        Da_q, Db_q = lap(a, q), lap(b, q)
        Da_r, Db_r = lap(a, r), lap(b, r)
        if i % 2 == 0:
            J += Da_q * grad(Db_r) - grad(Da_r) * Db_q
        else:
            J -= grad(Da_q) * Db_r - Da_r * grad(Db_q)
    return J


def higher_current(psi: WaveFunction, n: int, params: PhysicsParams | None = None) -> CurrentField:
    """The order-``n`` current ``J_2n`` built from ``psi`` and ``psi*``.

    ``J_2n`` is purely imaginary (each bracket flips sign under complex
    conjugation); the returned components are that imaginary field divided by
    ``i`` so that ``div J_2n = i * div(components)``.  Use
    :func:`higher_current_complex` for the raw field.
    """
    J = higher_current_complex(psi, n)
    return CurrentField(psi.grid, n, J.imag.copy())


def higher_current_complex(psi: WaveFunction, n: int) -> np.ndarray:
    if n not in (1, 2, 3):
        raise ConfigInvalid(f"current order must be 1, 2 or 3, got {n}")
    _warn_alias(psi, 0.5)
    b = psi.amplitudes
    return _j2n(np.conj(b), b, n, psi.grid)


def divergence_identity_residual(psi: WaveFunction, n: int,
                                 params: PhysicsParams | None = None) -> float:
    """Relative L2 residual of ``psi* D^n psi - (D^n psi*) psi - div J_2n``.

    The scale is ``||psi* D^n psi|| + ||(D^n psi*) psi||`` so that states for
    which the left side cancels (plane waves, real states) are not divided by
    zero.
    """
    J = higher_current_complex(psi, n)
    grid = psi.grid
    _, lap, div = _fft_deriv(grid)
    b = psi.amplitudes
    a = np.conj(b)
    t1 = a * lap(b, n)
    t2 = lap(a, n) * b
    res = t1 - t2 - div(J)
    scale = np.linalg.norm(t1) + np.linalg.norm(t2)
    if scale == 0:
        return float(np.linalg.norm(res))
    return float(np.linalg.norm(res) / scale)


def identity_lhs_integral(psi: WaveFunction, n: int) -> complex:
    """``int [psi* D^n psi - (D^n psi*) psi] dV``; a periodic divergence integrates to zero."""
    _, lap, _ = _fft_deriv(psi.grid)
    b = psi.amplitudes
    a = np.conj(b)
    return complex(np.sum(a * lap(b, n) - lap(a, n) * b) * psi.grid.dv)


def standard_current(psi: WaveFunction, params: PhysicsParams, mass=None) -> CurrentField:
    """``J = (theta / m) Im(psi* grad psi)``.

    The coefficient follows from ``i (h/2pi) d psi/dt = (h / 4 pi theta m) p^2 psi``
    with ``p = -i theta grad``: ``h`` cancels and only ``theta / m`` remains.
    ``mass`` may be per-axis.
    """
    grid = psi.grid
    mass = params.mass if mass is None else mass
    masses = np.broadcast_to(np.asarray(mass, dtype=float), (grid.dim,))
    _warn_alias(psi, 0.1)
    grad, _, _ = _fft_deriv(grid)
    g = grad(psi.amplitudes)
    J = np.array([params.theta / masses[j] * np.imag(np.conj(psi.amplitudes) * g[j])
                  for j in range(grid.dim)])
    return CurrentField(grid, 1, J)


def _continuity_series(snapshots, dt_snap: float, params: PhysicsParams, mass):
    if len(snapshots) < 3:
        raise InsufficientSnapshots(f"need at least 3 snapshots, got {len(snapshots)}")
    grid = snapshots[0].grid
    rhos = [probability_density(s) for s in snapshots]
    out = []
    for i in range(1, len(snapshots) - 1):
        dr = (rhos[i + 1] - rhos[i - 1]) / (2.0 * dt_snap)
        divj = divergence(standard_current(snapshots[i], params, mass).components, grid).real
        out.append(math.sqrt(np.sum((dr + divj) ** 2) * grid.dv))
    return np.array(out)


def continuity_residual(traj, params: PhysicsParams | None = None) -> np.ndarray:
    """``||d rho/dt + div J||_L2`` at each interior snapshot (centered differences in time)."""
    params = params or traj.config.params
    return _continuity_series(traj.snapshots, traj.snapshot_dt, params, traj.mass)


def marginal_continuity_residual(traj, axis: int, params: PhysicsParams | None = None) -> np.ndarray:
    """Continuity of one coordinate's marginal density, integrating out the others."""
    params = params or traj.config.params
    snaps = traj.snapshots
    if len(snaps) < 3:
        raise InsufficientSnapshots("need at least 3 snapshots")
    grid = snaps[0].grid
    other = tuple(a for a in range(grid.dim) if a != axis)
    line = GridSpec(1, grid.n, grid.length)
    k = line.wavenumbers()
    marg = [probability_density(s).sum(axis=other) * grid.dx ** len(other) for s in snaps]
    dt = traj.snapshot_dt
    out = []
    for i in range(1, len(snaps) - 1):
        J = standard_current(snaps[i], params, traj.mass).components[axis]
        Jm = J.sum(axis=other) * grid.dx ** len(other)
        divj = sfft.ifft(1j * k * sfft.fft(Jm)).real
        dr = (marg[i + 1] - marg[i - 1]) / (2 * dt)
        out.append(math.sqrt(np.sum((dr + divj) ** 2) * grid.dx))
    return np.array(out)


def modified_free_evolution(psi0: WaveFunction, c12: float, params: PhysicsParams, dt: float,
                            steps: int, mass=None) -> list[WaveFunction]:
    """Exact evolution under ``i (c10 + c12 p^2) d psi/dt = H psi`` with ``c10 = h/2pi``, V = 0.

    Both sides are functions of ``p`` only, so every Fourier mode just picks up
    the phase ``exp(-i H(k) t / (c10 + c12 theta^2 k^2))``.
    """
    grid = psi0.grid
    mass = params.mass if mass is None else mass
    Hk = kinetic_multiplier(grid, params, mass)
    ck = params.hbar + c12 * params.theta**2 * grid.k_squared()
    if np.any(ck <= 0):
        raise ConfigInvalid("c10 + c12 p^2 must stay positive on the grid")
    step = np.exp(-1j * dt * Hk / ck)
    F = sfft.fftn(psi0.amplitudes)
    out = [psi0]
    for _ in range(steps):
        F = F * step
        out.append(WaveFunction(grid, sfft.ifftn(F)))
    return out


def broken_continuity_probe(psi0: WaveFunction, c12: float, params: PhysicsParams,
                            dt: float = 1e-3, steps: int = 64, mass=None) -> dict:
    """Continuity residual of the standard current under a momentum-dependent time-derivative term.

    Runs the same state with ``c12 = 0`` as the baseline floor.  The global
    norm is still conserved; only the local balance fails.
    """
    snaps = modified_free_evolution(psi0, c12, params, dt, steps, mass)
    base = modified_free_evolution(psi0, 0.0, params, dt, steps, mass)
    mass = params.mass if mass is None else mass
    res = _continuity_series(snaps, dt, params, mass)
    floor = _continuity_series(base, dt, params, mass)
    norms = np.array([s.norm_squared for s in snaps])
    return {
        "c12": c12,
        "residual": float(res.max()),
        "residual_series": res,
        "floor": float(floor.max()),
        "floor_ratio": float(res.max() / max(floor.max(), 1e-300)),
        "norm_drift": float(np.max(np.abs(norms - norms[0]))),
    }
