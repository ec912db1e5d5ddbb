"""Mean-field classical-quantum dynamics.

A classical particle ``(M, R, P)`` and a quantum particle ``psi`` interact
through ``V(R - r)``:

    i (h/2pi) d psi/dt = [(h / 4 pi theta m) p^2 + V(R - r)] psi
    M d^2R/dt^2       = -grad_R <psi|V(R - r)|psi>

One step nests the quantum split-step inside a velocity-Verlet kick-drift-kick:
half kicks of ``P`` and of ``psi``'s phase at ``R_n``, a drift of ``R`` and a
kinetic drift of ``psi``, then the same half kicks at ``R_{n+1}``.  The scheme
is symmetric, hence time-reversible, and the momentum exchanged in each step
is the trapezoidal average of the force at the two ends.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .dynamics import EvolutionConfig, dt_bound
from .errors import ConfigInvalid, InsufficientSnapshots
from .hilbert import GridSpec, PhysicsParams, WaveFunction, check_leak
from .spectralops import kinetic_multiplier


@dataclass(frozen=True)
class CouplingPotential:
    """Gaussian well ``V(d) = v0 exp(-|d|^2 / 2 w^2)`` with ``d = R - r`` under minimum image."""

    v0: float = -1.0
    width: float = 1.0

    def separation(self, R: np.ndarray, grid: GridSpec) -> list[np.ndarray]:
        L = grid.length
        out = []
        for j, x in enumerate(grid.coords()):
            d = R[j] - x
            out.append(d - L * np.round(d / L))
        return out

    def values(self, R: np.ndarray, grid: GridSpec) -> np.ndarray:
        d = self.separation(R, grid)
        return self.v0 * np.exp(-sum(c**2 for c in d) / (2.0 * self.width**2))

    def grad_R(self, R: np.ndarray, grid: GridSpec) -> np.ndarray:
        """Analytic ``grad_R V(R - r)`` sampled on the grid, shape ``(dim, *grid.shape)``."""
        d = self.separation(R, grid)
        v = self.v0 * np.exp(-sum(c**2 for c in d) / (2.0 * self.width**2))
        return np.array([-c / self.width**2 * v for c in d])

    def mean_grad(self, R: np.ndarray, psi_amp: np.ndarray, grid: GridSpec) -> np.ndarray:
        """``grad_R <psi|V(R - r)|psi>`` contracted against the density."""
        rho = np.abs(psi_amp) ** 2
        g = self.grad_R(R, grid)
        return np.array([np.sum(rho * gj) * grid.dv for gj in g])

    def mean_value(self, R: np.ndarray, psi_amp: np.ndarray, grid: GridSpec) -> float:
        return float(np.sum(np.abs(psi_amp) ** 2 * self.values(R, grid)) * grid.dv)


@dataclass(frozen=True)
class HybridState:
    R: np.ndarray
    P: np.ndarray
    psi: WaveFunction
    M: float = 10.0
    t: float = 0.0

    def __post_init__(self):
        dim = self.psi.grid.dim
        for name in ("R", "P"):
            v = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (dim,)).copy()
            v.flags.writeable = False
            object.__setattr__(self, name, v)
        if not self.M > 0:
            raise ConfigInvalid("classical mass must be positive")


class _HybridStepper:
    def __init__(self, grid: GridSpec, params: PhysicsParams, coupling: CouplingPotential,
                 dt: float, M: float):
        self.grid, self.params, self.coupling, self.dt, self.M = grid, params, coupling, dt, M
        self.hbar = params.h / (2.0 * math.pi)
        self.kinetic = kinetic_multiplier(grid, params, params.mass)
        self.drift = np.exp(-1j * dt * self.kinetic / self.hbar)

    def step(self, R, P, amp):
        dt, grid, cpl = self.dt, self.grid, self.coupling
        g0 = cpl.mean_grad(R, amp, grid)
        P = P - 0.5 * dt * g0
        amp = np.exp(-0.5j * dt * cpl.values(R, grid) / self.hbar) * amp
        R = R + dt * P / self.M
        amp = sfft.ifftn(self.drift * sfft.fftn(amp))
        amp = np.exp(-0.5j * dt * cpl.values(R, grid) / self.hbar) * amp
        g1 = cpl.mean_grad(R, amp, grid)
        P = P - 0.5 * dt * g1
        return R, P, amp, g0, g1


def _check_cfg(state: HybridState, cfg: EvolutionConfig):
    bound = dt_bound(state.psi.grid, cfg.params, cfg.params.mass)
    if cfg.dt > bound:
        raise ConfigInvalid(f"dt={cfg.dt} exceeds the accuracy bound {bound:.3g}")


def hybrid_step(state: HybridState, cfg: EvolutionConfig, coupling: CouplingPotential,
                backward: bool = False) -> HybridState:
    """Advance one step of ``cfg.dt`` (or ``-cfg.dt`` when ``backward``)."""
    _check_cfg(state, cfg)
    dt = -cfg.dt if backward else cfg.dt
    st = _HybridStepper(state.psi.grid, cfg.params, coupling, dt, state.M)
    R, P, amp, _, _ = st.step(np.array(state.R), np.array(state.P), np.array(state.psi.amplitudes))
    psi = WaveFunction(state.psi.grid, amp)
    check_leak(state.psi, psi)
    return HybridState(R, P, psi, state.M, state.t + dt)


def total_energy(state: HybridState, coupling: CouplingPotential, params: PhysicsParams) -> float:
    """``P^2/2M + <(h / 4 pi theta m) p^2> + <V(R - r)>``."""
    grid = state.psi.grid
    amp = state.psi.amplitudes
    pw = np.abs(sfft.fftn(amp)) ** 2 * grid.dv / amp.size
    kin_q = float(np.sum(pw * kinetic_multiplier(grid, params, params.mass)))
    return float(state.P @ state.P) / (2 * state.M) + kin_q + coupling.mean_value(state.R, amp, grid)


def _mean_p(amp: np.ndarray, grid: GridSpec, theta: float) -> np.ndarray:
    pw = np.abs(sfft.fftn(amp)) ** 2 * grid.dv / amp.size
    return np.array([theta * np.sum(pw * k) for k in grid.kgrid()])


def _mean_x(amp: np.ndarray, grid: GridSpec) -> np.ndarray:
    rho = np.abs(amp) ** 2
    return np.array([np.sum(rho * c) * grid.dv for c in grid.coords()])


@dataclass
class HybridTrajectory:
    """Per-step records of a hybrid run.  ``grad_lo``/``grad_hi`` are ``grad_R <V>``
    at the start and end of each step."""

    t: np.ndarray
    R: np.ndarray
    P: np.ndarray
    x: np.ndarray
    p: np.ndarray
    energy: np.ndarray
    grad_lo: np.ndarray
    grad_hi: np.ndarray
    final: HybridState
    params: PhysicsParams
    dt: float

    @property
    def total_momentum(self) -> np.ndarray:
        return self.P + self.p

    def csv_rows(self):
        drift, pred = total_momentum_drift(self)
        dim = self.R.shape[1]
        header = (["t"] + [f"R{j}" for j in range(dim)] + [f"P{j}" for j in range(dim)]
                  + [f"x{j}" for j in range(dim)] + [f"p{j}" for j in range(dim)]
                  + [f"Ptot{j}" for j in range(dim)] + ["E_total"]
                  + [f"drift_measured{j}" for j in range(dim)]
                  + [f"drift_predicted{j}" for j in range(dim)])
        rows = []
        nan = [float("nan")] * dim
        for i in range(len(self.t)):
            dm = list(drift[i - 1]) if i else nan
            dp = list(pred[i - 1]) if i else nan
            rows.append([self.t[i], *self.R[i], *self.P[i], *self.x[i], *self.p[i],
                         *self.total_momentum[i], self.energy[i], *dm, *dp])
        return header, rows


def run_hybrid(state: HybridState, cfg: EvolutionConfig, coupling: CouplingPotential,
               backward: bool = False) -> HybridTrajectory:
    _check_cfg(state, cfg)
    params = cfg.params
    grid = state.psi.grid
    dt = -cfg.dt if backward else cfg.dt
    st = _HybridStepper(grid, params, coupling, dt, state.M)
    n = cfg.steps
    dim = grid.dim
    R, P, amp = np.array(state.R), np.array(state.P), np.array(state.psi.amplitudes)
    Rs, Ps, xs, ps = (np.empty((n + 1, dim)) for _ in range(4))
    es = np.empty(n + 1)
    glo, ghi = np.empty((n, dim)), np.empty((n, dim))

    def record(i, R, P, amp):
        Rs[i], Ps[i] = R, P
        xs[i] = _mean_x(amp, grid)
        ps[i] = _mean_p(amp, grid, params.theta)
        es[i] = total_energy(HybridState(R, P, WaveFunction(grid, amp), state.M), coupling, params)

    record(0, R, P, amp)
    for i in range(n):
        R, P, amp, g0, g1 = st.step(R, P, amp)
        glo[i], ghi[i] = g0, g1
        record(i + 1, R, P, amp)
        if (i + 1) % cfg.snapshot_stride == 0:
            check_leak(state.psi, WaveFunction(grid, amp))
    final = HybridState(R, P, WaveFunction(grid, amp), state.M, state.t + n * dt)
    return HybridTrajectory(state.t + np.arange(n + 1) * dt, Rs, Ps, xs, ps, es, glo, ghi,
                            final, params, dt)


def total_momentum_drift(run: HybridTrajectory):
    """Measured ``d(P + <p>)/dt`` per step and the prediction ``(2 pi theta / h - 1) grad_R <V>``.

    The prediction uses the step-average of ``grad_R <V>`` over the two force
    evaluations of each step, which is where the integrator samples it.
    """
    if len(run.t) < 2:
        raise InsufficientSnapshots("need at least one step")
    tot = run.total_momentum
    measured = np.diff(tot, axis=0) / run.dt
    factor = 2.0 * math.pi * run.params.theta / run.params.h - 1.0
    predicted = factor * 0.5 * (run.grad_lo + run.grad_hi)
    return measured, predicted
