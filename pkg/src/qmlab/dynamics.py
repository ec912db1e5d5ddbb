"""Time evolution ``i (h/2pi) d|psi>/dt = H|psi>`` by Strang split-step.

With ``H = (h / 4 pi theta m) p^2 + V(r)`` and ``p = theta k`` on the grid, one
step is a potential half-kick, an exact kinetic drift in Fourier space and a
second half-kick.  Each factor is unitary and diagonal in its own basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

from .errors import (ConfigInvalid, InsufficientSnapshots, PhaseUnwrapAmbiguity,
                     UnsupportedPotential)
from .hilbert import (GridSpec, PhysicsParams, WaveFunction, check_leak, inner_product,
                      plane_wave)
from .spectralops import (commutator_expectation, hamiltonian, kinetic_multiplier, position)


@dataclass(frozen=True)
class Potential:
    """Real local potential ``V(r)``.

    kinds: ``none``, ``sampled`` (``values`` on the grid), ``harmonic``
    (``V = k |r - c|^2 / 2``), ``gaussian_well`` (``V = v0 exp(-|r - c|^2 / 2 w^2)``)
    and ``momentum_dependent`` (a ``V(r, p)`` callable the propagator rejects).
    """

    kind: str = "none"
    k: float = 0.0
    v0: float = 0.0
    width: float = 1.0
    center: float | Sequence[float] = 0.0
    values: np.ndarray | None = None
    func: Callable | None = None

    @classmethod
    def harmonic(cls, k: float, center=0.0) -> "Potential":
        return cls("harmonic", k=k, center=center)

    @classmethod
    def gaussian_well(cls, v0: float, width: float, center=0.0) -> "Potential":
        return cls("gaussian_well", v0=v0, width=width, center=center)

    @classmethod
    def sampled(cls, values: np.ndarray) -> "Potential":
        vals = np.asarray(values)
        if np.iscomplexobj(vals):
            if np.any(vals.imag):
                raise ConfigInvalid("potential must be real-valued")
            vals = vals.real
        return cls("sampled", values=vals.astype(float))

    def evaluate(self, *coords: np.ndarray) -> np.ndarray:
        """Evaluate at arbitrary coordinate arrays (one per axis)."""
        c = np.broadcast_to(np.asarray(self.center, dtype=float), (len(coords),))
        r2 = sum((x - c[a]) ** 2 for a, x in enumerate(coords))
        if self.kind == "none":
            return np.zeros_like(r2, dtype=float)
        if self.kind == "harmonic":
            return 0.5 * self.k * r2
        if self.kind == "gaussian_well":
            return self.v0 * np.exp(-r2 / (2.0 * self.width**2))
        if self.kind == "momentum_dependent":
            raise UnsupportedPotential("momentum-dependent potentials are not propagated")
        raise ConfigInvalid(f"cannot evaluate a {self.kind!r} potential off-grid")

    def sample(self, grid: GridSpec) -> np.ndarray:
        if self.kind == "sampled":
            if self.values.shape != grid.shape:
                raise ConfigInvalid("sampled potential does not match grid")
            return self.values
        return self.evaluate(*grid.coords())

    def to_dict(self) -> dict:
        if self.kind == "sampled":
            return {"kind": "sampled"}
        return {"kind": self.kind, "k": self.k, "v0": self.v0, "width": self.width,
                "center": np.asarray(self.center, dtype=float).tolist()}


FREE = Potential()


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float
    steps: int
    params: PhysicsParams = field(default_factory=PhysicsParams)
    snapshot_stride: int = 1
    scheme: int = 2

    def __post_init__(self):
        if not (isinstance(self.dt, (int, float)) and math.isfinite(self.dt) and self.dt > 0):
            raise ConfigInvalid(f"dt must be a positive finite number, got {self.dt!r}")
        if int(self.steps) != self.steps or self.steps < 1:
            raise ConfigInvalid(f"steps must be a positive integer, got {self.steps!r}")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ConfigInvalid("snapshot_stride must be a positive integer")
        if self.scheme != 2:
            raise ConfigInvalid("only the second-order Strang scheme is available")

    def to_dict(self) -> dict:
        return {"dt": self.dt, "steps": self.steps, "snapshot_stride": self.snapshot_stride,
                "scheme": self.scheme, "params": self.params.to_dict()}


def dt_bound(grid: GridSpec, params: PhysicsParams, mass) -> float:
    """Accuracy heuristic ``0.5 m theta dx^2 (4 pi / h)``; the scheme itself is unconditionally stable."""
    m = float(np.min(np.atleast_1d(mass)))
    return 0.5 * m * params.theta * grid.dx**2 * 4.0 * math.pi / params.h


@dataclass
class Trajectory:
    """Snapshots every ``snapshot_stride`` steps and observables at every step."""

    times: np.ndarray
    snapshots: list[WaveFunction]
    snapshot_times: np.ndarray
    x: np.ndarray
    p: np.ndarray
    energy: np.ndarray
    norm: np.ndarray
    config: EvolutionConfig
    potential: Potential
    mass: float | tuple

    @property
    def snapshot_dt(self) -> float:
        return self.config.dt * self.config.snapshot_stride

    def to_rows(self):
        for i, t in enumerate(self.times):
            yield [t, *self.x[i], *self.p[i], self.energy[i], self.norm[i]]

    def csv_header(self) -> list[str]:
        d = self.x.shape[1]
        return (["t"] + [f"x{j}" for j in range(d)] + [f"p{j}" for j in range(d)]
                + ["H", "norm"])


class SplitStepper:
    """Precomputed Strang factors for a fixed grid, potential and step."""

    def __init__(self, grid: GridSpec, params: PhysicsParams, potential_values: np.ndarray,
                 dt: float, mass):
        hbar = params.h / (2.0 * math.pi)
        self.kinetic = kinetic_multiplier(grid, params, mass)
        self.half_kick = np.exp(-0.5j * dt * potential_values / hbar)
        self.drift = np.exp(-1j * dt * self.kinetic / hbar)

    def step(self, amp: np.ndarray) -> np.ndarray:
        amp = self.half_kick * amp
        amp = sfft.ifftn(self.drift * sfft.fftn(amp))
        return self.half_kick * amp


def _observables(amp: np.ndarray, grid: GridSpec, coords, kgrid, theta: float,
                 kinetic: np.ndarray, vvals: np.ndarray):
    rho = np.abs(amp) ** 2
    dv = grid.dv
    norm = rho.sum() * dv
    x = [float((rho * c).sum() * dv) for c in coords]
    pw = np.abs(sfft.fftn(amp)) ** 2 * dv / amp.size
    p = [float(theta * (pw * k).sum()) for k in kgrid]
    e = float((pw * kinetic).sum() + (rho * vvals).sum() * dv)
    return x, p, e, float(norm)


def evolve(psi0: WaveFunction, pot: Potential, cfg: EvolutionConfig, mass=None) -> Trajectory:
    """Propagate ``psi0`` for ``cfg.steps`` steps.

    ``mass`` defaults to ``cfg.params.mass``; a per-axis tuple gives each
    configuration axis its own mass (two particles on a line).
    """
    if pot.kind == "momentum_dependent":
        raise UnsupportedPotential("the propagator only handles local potentials V(r)")
    grid = psi0.grid
    params = cfg.params
    mass = params.mass if mass is None else mass
    if cfg.dt > dt_bound(grid, params, mass):
        raise ConfigInvalid(f"dt={cfg.dt} exceeds the accuracy bound {dt_bound(grid, params, mass):.3g}")
    vvals = pot.sample(grid)
    stepper = SplitStepper(grid, params, vvals, cfg.dt, mass)
    coords, kgrid = grid.coords(), grid.kgrid()

    n = cfg.steps
    xs = np.empty((n + 1, grid.dim))
    ps = np.empty((n + 1, grid.dim))
    es = np.empty(n + 1)
    norms = np.empty(n + 1)
    snaps, snap_t = [psi0], [0.0]
    amp = np.array(psi0.amplitudes)
    xs[0], ps[0], es[0], norms[0] = _observables(amp, grid, coords, kgrid, params.theta,
                                                 stepper.kinetic, vvals)
    for i in range(1, n + 1):
        amp = stepper.step(amp)
        xs[i], ps[i], es[i], norms[i] = _observables(amp, grid, coords, kgrid, params.theta,
                                                     stepper.kinetic, vvals)
        if i % cfg.snapshot_stride == 0:
            snap = WaveFunction(grid, amp)
            check_leak(psi0, snap)
            snaps.append(snap)
            snap_t.append(i * cfg.dt)
    return Trajectory(np.arange(n + 1) * cfg.dt, snaps, np.array(snap_t), xs, ps, es, norms,
                      cfg, pot, mass)


@dataclass(frozen=True)
class PhaseFrequency:
    energy: float
    nu: float
    ratio: float


def einstein_debroglie_check(p, T: float, params: PhysicsParams, grid: GridSpec | None = None,
                             dt: float = 1e-3, mass=None) -> PhaseFrequency:
    """Evolve a momentum eigenstate and read the frequency off ``arg <psi(0)|psi(t)>``.

    ``ratio`` is ``E / (h nu)`` with ``E = <H>``; it is NaN when ``nu == 0``.
    """
    grid = grid or GridSpec(1, 64, 16.0 * math.pi)
    mass = params.mass if mass is None else mass
    psi0 = plane_wave(grid, p, params)
    if psi0.meta["snapped"]:
        raise ConfigInvalid(f"momentum {p} is not a grid mode; nearest is {psi0.meta['momentum']}")
    energy = float(inner_product(psi0, _apply_h(psi0, params, mass)).real)
    if dt * abs(energy) / params.hbar > math.pi / 4:
        raise PhaseUnwrapAmbiguity("phase advance per step exceeds pi/4; reduce dt")
    steps = max(2, int(round(T / dt)))
    stepper = SplitStepper(grid, params, np.zeros(grid.shape), dt, mass)
    amp = np.array(psi0.amplitudes)
    phases = np.empty(steps + 1)
    for i in range(steps + 1):
        phases[i] = np.angle(np.vdot(psi0.amplitudes, amp) * grid.dv)
        amp = stepper.step(amp)
    phases = np.unwrap(phases)
    t = np.arange(steps + 1) * dt
    slope = np.polyfit(t, phases, 1)[0]
    nu = -slope / (2.0 * math.pi)
    ratio = energy / (params.h * nu) if nu != 0 else float("nan")
    return PhaseFrequency(energy, float(nu), float(ratio))


def _apply_h(psi: WaveFunction, params: PhysicsParams, mass) -> WaveFunction:
    return WaveFunction(psi.grid, hamiltonian(psi.grid, params, None, mass).act(psi.amplitudes))


def velocity_operator_check(traj: Trajectory, params: PhysicsParams | None = None,
                            rtol: float = 1e-5, atol: float = 1e-8) -> dict:
    """Compare three routes to the velocity at every interior snapshot.

    (a) centered difference of ``<r>``; (b) ``<(2 pi / i h)[r, H]>``;
    (c) ``<p> / m``.  Differences are reported absolute and relative to the
    largest ``|<p>/m|`` seen along the run.
    """
    params = params or traj.config.params
    stride = traj.config.snapshot_stride
    if len(traj.snapshots) < 3 and len(traj.times) < 3:
        raise InsufficientSnapshots("need at least 3 time points")
    grid = traj.snapshots[0].grid
    dt = traj.config.dt
    masses = np.broadcast_to(np.asarray(traj.mass, dtype=float), (grid.dim,))
    H = hamiltonian(grid, params, traj.potential.sample(grid), traj.mass)
    X = [position(grid, params, j) for j in range(grid.dim)]
    a, b, c, ts = [], [], [], []
    for s, snap in enumerate(traj.snapshots):
        i = s * stride
        if i == 0 or i >= len(traj.times) - 1:
            continue
        a.append((traj.x[i + 1] - traj.x[i - 1]) / (2 * dt))
        b.append([(2 * math.pi / (1j * params.h) * commutator_expectation(X[j], H, snap)).real
                  for j in range(grid.dim)])
        c.append(traj.p[i] / masses)
        ts.append(traj.times[i])
    if not ts:
        raise InsufficientSnapshots("no interior snapshots to compare")
    a, b, c = np.array(a), np.array(b), np.array(c)
    scale = max(float(np.max(np.abs(c))), 1e-300)
    diffs = {"ab": float(np.max(np.abs(a - b))), "ac": float(np.max(np.abs(a - c))),
             "bc": float(np.max(np.abs(b - c)))}
    rel = {k: v / scale for k, v in diffs.items()}
    passed = all(rel[k] < rtol or diffs[k] < atol for k in diffs)
    return {"times": np.array(ts), "finite_difference": a, "commutator": b, "momentum_over_mass": c,
            "abs": diffs, "rel": rel, "scale": scale, "passed": passed}


def conservation_check(traj: Trajectory, generators: Sequence[str] = ("p", "H"),
                       tol: float = 1e-8) -> dict:
    """Drift of ``<p>`` and ``<H>`` along a trajectory.

    ``<p>`` is only expected to be conserved when the potential is absent.
    """
    span = max(traj.times[-1] - traj.times[0], 1e-300)
    out = {}
    for g in generators:
        if g == "p":
            if traj.potential.kind != "none":
                continue
            drift = float(np.max(np.abs(traj.p - traj.p[0])))
        elif g == "H":
            drift = float(np.max(np.abs(traj.energy - traj.energy[0])))
        else:
            raise ValueError(f"unknown generator {g!r}")
        out[g] = {"drift": drift, "drift_per_time": drift / span, "passed": drift < tol}
    return out
