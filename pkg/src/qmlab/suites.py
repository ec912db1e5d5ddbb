"""Named verification suites.

A suite is a list of tasks; each task runs one experiment and yields one or
more checks.  Every task draws its random states from a generator forked off
the run seed by hashing the task name, so adding or reordering tasks never
changes another task's states.  Any exception inside a task becomes a failed
check carrying the error text.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import matrixrep as mr
from .continuity import (broken_continuity_probe, continuity_residual,
                         divergence_identity_residual)
from .dynamics import (FREE, EvolutionConfig, Potential, einstein_debroglie_check, evolve,
                       velocity_operator_check)
from .errors import ConfigInvalid, IoFailure
from .hilbert import (GridSpec, PhysicsParams, WaveFunction, gaussian_packet, normalize,
                      plane_wave, random_packet_state)
from .hybrid import CouplingPotential, HybridState, run_hybrid, total_momentum_drift
from .report import CheckRecord, VerificationReport, _jsonable
from .spectralops import commutator_expectation, momentum, position
from .symmetry import check_boost_factorization, galilean_boost, mean_momentum, translate
from .twobody import (ComCoordinates, TwoBodyState, com_separation_check, evolve_two_body,
                      marginal_norms, marginal_residuals, product_state, reduced_mass,
                      relative_observables, two_body_continuity_residual)

SUITES = ("ccr", "rotation", "symmetry", "continuity", "dynamics", "hybrid-theta-sweep",
          "twobody")
ALL = "all"


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines a verification run.

    ``tolerances`` maps check ids to replacement tolerances; ``tolerance_scale``
    multiplies every upper-bound tolerance afterwards.
    """

    suite: str
    seed: int = 0
    output_dir: str = "verify-out"
    theta_over_hbar: tuple[float, ...] = (0.5, 1.0, 2.0)
    tolerance_scale: float = 1.0
    tolerances: dict = field(default_factory=dict)
    dt: float = 1e-3
    n_states: int = 20
    n_identity_states: int = 10
    hybrid_T: float = 10.0
    twobody_T: float = 5.0
    twobody_dt: float = 5e-3

    def __post_init__(self):
        object.__setattr__(self, "theta_over_hbar", tuple(float(r) for r in self.theta_over_hbar))
        object.__setattr__(self, "tolerances", dict(self.tolerances))
        if self.suite not in (*SUITES, ALL):
            raise ConfigInvalid(f"unknown suite {self.suite!r}; choose from {', '.join((*SUITES, ALL))}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigInvalid(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        for name in ("dt", "tolerance_scale", "hybrid_T", "twobody_T", "twobody_dt"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigInvalid(f"{name} must be a positive finite number, got {v!r}")
        for name in ("n_states", "n_identity_states"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigInvalid(f"{name} must be a positive integer, got {v!r}")
        if not self.theta_over_hbar or any(not (math.isfinite(r) and r > 0) for r in self.theta_over_hbar):
            raise ConfigInvalid(f"theta_over_hbar ratios must be positive, got {self.theta_over_hbar}")
        for k, v in self.tolerances.items():
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0):
                raise ConfigInvalid(f"tolerance override for {k!r} must be a non-negative number")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigInvalid(f"unknown config keys: {', '.join(sorted(extra))}")
        if "suite" not in d:
            raise ConfigInvalid("config needs a 'suite'")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigInvalid(str(exc)) from exc

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["theta_over_hbar"] = list(self.theta_over_hbar)
        return d


@dataclass(frozen=True)
class CheckSpec:
    check_id: str
    anchor: str
    tolerance: float
    sense: str = "upper"


@dataclass
class Task:
    name: str
    specs: list[CheckSpec]
    fn: Callable[["Context"], dict]


class Context:
    """What a task sees: the config, its private generator and an output sink."""

    def __init__(self, cfg: RunConfig, task: str, out_dir: Path | None):
        self.cfg = cfg
        self.rng = task_rng(cfg.seed, task)
        self.out_dir = out_dir

    def write_csv(self, name: str, header, rows) -> None:
        if self.out_dir is None:
            return
        path = self.out_dir / "series" / f"{name}.csv"
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(header)
                for row in rows:
                    w.writerow([repr(float(v)) for v in row])
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc

    def write_json(self, name: str, obj) -> None:
        if self.out_dir is None:
            return
        path = self.out_dir / f"{name}.json"
        try:
            path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc


def task_rng(seed: int, name: str) -> np.random.Generator:
    """Generator forked from ``seed`` by a stable hash of ``name``."""
    digest = hashlib.sha256(name.encode()).digest()
    key = tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _series(*cols):
    return zip(*cols)


# --------------------------------------------------------------------------- ccr

def _ccr_grid_states(ctx: Context) -> dict:
    params = PhysicsParams()
    n = ctx.cfg.n_states
    grids = [GridSpec(1, 128, 30.0)] * ((n + 1) // 2) + [GridSpec(2, 128, 30.0)] * (n // 2)
    worst, rows = 0.0, []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        for i, g in enumerate(grids):
            psi = random_packet_state(g, ctx.rng)
            X = [position(g, params, j) for j in range(g.dim)]
            P = [momentum(g, params, j) for j in range(g.dim)]
            err = 0.0
            for j in range(g.dim):
                for k in range(g.dim):
                    val = commutator_expectation(X[j], P[k], psi)
                    err = max(err, abs(val - (1j * params.theta if j == k else 0)))
            rows.append((i, g.dim, err))
            worst = max(worst, err)
    ctx.write_csv("ccr_grid_states", ["state", "dim", "residual"], rows)
    return {"ccr.grid_states": (worst, {"states": len(grids), "aliasing_warnings": len(caught)})}


def _ccr_matrix(ctx: Context) -> dict:
    params = PhysicsParams()
    X, P = mr.build_xp_matrices(12, 3, params)
    safe = mr.ccr_residual(X, P, params)
    # the truncation artifact lives on single axes; show it on one
    X1, P1 = mr.build_xp_matrices(12, 1, params)
    full = mr.ccr_residual(X1, P1, params, cutoff=11)
    return {"ccr.matrix_n12": (safe, {"n": 12, "axes": 3, "cutoff": 10,
                                      "full_space_residual_1d": full})}


def _ccr_com(ctx: Context) -> dict:
    params = PhysicsParams()
    m1, m2 = 1.0, 3.0
    n = 10
    X, P = mr.build_xp_matrices(n, 2, params)
    Xc, Pc, xr, pr = mr.com_operators(X, P, m1, m2)
    eye = np.eye(n * n)
    table = {
        "[X,P]": mr.commutator(Xc, Pc).matrix - 1j * params.theta * eye,
        "[x,p]": mr.commutator(xr, pr).matrix - 1j * params.theta * eye,
        "[X,p]": mr.commutator(Xc, pr).matrix,
        "[x,P]": mr.commutator(xr, Pc).matrix,
    }
    res = {k: mr.restricted_residual(v, n, 2) for k, v in table.items()}
    M = m1 + m2
    p1 = (m1 / M) * Pc + pr
    p2 = (m2 / M) * Pc - pr
    inv = max(float(np.max(np.abs(p1.matrix - P[0].matrix))),
              float(np.max(np.abs(p2.matrix - P[1].matrix))))
    return {"ccr.com_table": (max(res.values()), {"table": res, "m1": m1, "m2": m2}),
            "ccr.com_inverse": (inv, {})}


# ---------------------------------------------------------------------- rotation

def _rotation(ctx: Context) -> dict:
    params = PhysicsParams()
    n = 8
    X, P = mr.build_xp_matrices(n, 3, params)
    L = mr.build_rotation_generators(n, params)
    out = {}
    for key, A in (("X", X), ("P", P), ("L", L)):
        r = mr.check_vector_operator(L, A, params, full=True)
        out[f"rotation.L_{key}"] = (r["residual"], {"table": r["table"],
                                                    "full_space_residual": r["residual_full"]})
    out["rotation.scalar_PP"] = (mr.check_scalar(L, P, P), {"cutoff": n - 3})
    return out


# ---------------------------------------------------------------------- symmetry

def _symmetry_boosts(ctx: Context) -> dict:
    params = PhysicsParams()
    g = GridSpec(1, 256, 40.0)
    psi = gaussian_packet(g, 0.0, 1.0, 0.5, params)
    p0 = mean_momentum(psi, params)[0]
    worst_shift = worst_order = 0.0
    rows = []
    for m in (0.5, 1.0, 2.0):
        for V in (-0.5, 0.25, 1.0):
            boosted = galilean_boost(psi, V, 0.3, params, mass=m)
            shift = mean_momentum(boosted, params)[0] - p0
            err = abs(shift - m * V)
            order = check_boost_factorization(V, 0.3, params, psi, mass=m)
            rows.append((m, V, shift, err, order))
            worst_shift, worst_order = max(worst_shift, err), max(worst_order, order)
    ctx.write_csv("symmetry_boosts", ["m", "V", "momentum_shift", "shift_error",
                                      "ordering_difference"], rows)
    return {"symmetry.boost_momentum_shift": (worst_shift, {"pairs": len(rows)}),
            "symmetry.boost_orderings": (worst_order, {})}


def _symmetry_unitarity(ctx: Context) -> dict:
    params = PhysicsParams()
    g = GridSpec(1, 128, 30.0)
    worst = 0.0
    for _ in range(5):
        psi = random_packet_state(g, ctx.rng)
        a = ctx.rng.uniform(-1.0, 1.0)
        V = ctx.rng.uniform(-1.0, 1.0)
        for out in (translate(psi, a), galilean_boost(psi, V, 0.5, params)):
            worst = max(worst, abs(math.sqrt(out.norm_squared) - 1.0))
    pw = plane_wave(GridSpec(1, 64, 20.0), 2 * math.pi / 20.0 * 3, params)
    shifted = translate(pw, 0.7)
    phase = np.exp(-1j * pw.meta["momentum"][0] * 0.7 / params.theta)
    pw_err = float(np.max(np.abs(shifted.amplitudes - phase * pw.amplitudes)))
    return {"symmetry.unitarity": (worst, {}),
            "symmetry.plane_wave_phase": (pw_err, {"momentum": pw.meta["momentum"][0]})}


# -------------------------------------------------------------------- continuity

def _continuity_identities(ctx: Context) -> dict:
    k = ctx.cfg.n_identity_states
    states = ([random_packet_state(GridSpec(1, 128, 30.0), ctx.rng) for _ in range(k)]
              + [random_packet_state(GridSpec(2, 128, 30.0), ctx.rng) for _ in range(k)])
    out, rows = {}, []
    for n in (1, 2, 3):
        res = [divergence_identity_residual(s, n) for s in states]
        rows += [(n, s.grid.dim, r) for s, r in zip(states, res)]
        out[f"continuity.identity_n{n}"] = (max(res), {"states_per_dim": k,
                                                       "worst_1d": max(res[:k]),
                                                       "worst_2d": max(res[k:])})
    ctx.write_csv("continuity_identities", ["n", "dim", "relative_residual"], rows)
    return out


def _continuity_evolution(ctx: Context) -> dict:
    params = PhysicsParams()
    g = GridSpec(1, 256, 40.0)
    dt = ctx.cfg.dt
    cases = {"free": (FREE, gaussian_packet(g, 0.0, 1.0, 1.0, params)),
             "well": (Potential.gaussian_well(-1.0, 1.0), gaussian_packet(g, -1.0, 1.0, 0.5, params))}
    out = {}
    for name, (pot, psi) in cases.items():
        runs = [evolve(psi, pot, EvolutionConfig(dt / s, 64 * s, params)) for s in (1, 2)]
        res = [continuity_residual(r) for r in runs]
        ctx.write_csv(f"continuity_{name}", ["t", "residual"],
                      _series(runs[0].snapshot_times[1:-1], res[0]))
        ctx.write_csv(f"continuity_{name}_half_dt", ["t", "residual"],
                      _series(runs[1].snapshot_times[1:-1], res[1]))
        ratio = float(res[0].max() / res[1].max())
        out[f"continuity.{name}_dt"] = (float(res[0].max()), {"dt": dt, "steps": 64})
        out[f"continuity.{name}_order"] = (abs(ratio - 4.0), {"halving_ratio": ratio,
                                                               "accepted_range": [3.5, 4.5]})
    return out


def _continuity_broken(ctx: Context) -> dict:
    params = PhysicsParams()
    g = GridSpec(1, 256, 80.0)
    psi = gaussian_packet(g, 0.0, 4.0, 0.25, params)
    a = broken_continuity_probe(psi, 0.1, params, dt=ctx.cfg.dt)
    b = broken_continuity_probe(psi, 0.2, params, dt=ctx.cfg.dt)
    ratio = b["residual"] / a["residual"]
    ctx.write_csv("continuity_broken", ["step", "residual_c12_0.1", "residual_c12_0.2"],
                  _series(np.arange(1, len(a["residual_series"]) + 1), a["residual_series"],
                          b["residual_series"]))
    return {"continuity.broken_floor": (a["floor_ratio"], {"residual": a["residual"],
                                                           "floor": a["floor"],
                                                           "norm_drift": a["norm_drift"]}),
            "continuity.broken_linearity": (abs(ratio - 2.0) / 2.0, {"ratio": ratio})}


# ---------------------------------------------------------------------- dynamics

def _dynamics_phase(ctx: Context) -> dict:
    params = PhysicsParams()
    worst, detail = 0.0, {}
    for m, p in ((1.0, 1.0), (2.0, 2.0), (0.5, 1.5)):
        r = einstein_debroglie_check(p, 1.0, params, dt=ctx.cfg.dt, mass=m)
        detail[f"m={m:g},p={p:g}"] = {"energy": r.energy, "nu": r.nu, "ratio": r.ratio}
        worst = max(worst, abs(r.ratio - 1.0))
    return {"dynamics.einstein_debroglie": (worst, detail)}


def _dynamics_velocity(ctx: Context) -> dict:
    params = PhysicsParams()
    g = GridSpec(1, 256, 40.0)
    cases = {"free": (FREE, -2.0), "well": (Potential.gaussian_well(-1.0, 1.0), -1.0),
             "harmonic": (Potential.harmonic(1.0), -2.0)}
    out = {}
    for name, (pot, c) in cases.items():
        psi = gaussian_packet(g, c, 1.0, 1.0, params)
        tr = evolve(psi, pot, EvolutionConfig(ctx.cfg.dt, 2000, params, snapshot_stride=100))
        ctx.write_csv(f"dynamics_{name}", tr.csv_header(), tr.to_rows())
        r = velocity_operator_check(tr, params)
        out[f"dynamics.velocity_{name}"] = (max(r["rel"].values()), {"abs": r["abs"], "rel": r["rel"]})
    return out


def _dynamics_conservation(ctx: Context) -> dict:
    params = PhysicsParams()
    g = GridSpec(1, 256, 80.0)
    dt = ctx.cfg.dt
    psi = gaussian_packet(g, 0.0, 2.0, 0.0, params)
    steps = int(round(10.0 / dt))
    tr = evolve(psi, Potential.gaussian_well(-1.0, 2.0),
                EvolutionConfig(dt, steps, params, snapshot_stride=max(1, steps // 10)))
    ctx.write_csv("dynamics_well_energy", tr.csv_header(), tr.to_rows())
    free = evolve(gaussian_packet(g, 0.0, 1.0, 1.0, params), FREE,
                  EvolutionConfig(dt, 1000, params, snapshot_stride=100))
    return {"dynamics.energy_well": (float(np.max(np.abs(tr.energy - tr.energy[0]))),
                                     {"T": 10.0, "dt": dt, "E0": float(tr.energy[0])}),
            "dynamics.norm": (float(np.max(np.abs(tr.norm - 1.0))), {}),
            "dynamics.free_momentum": (float(np.max(np.abs(free.p - free.p[0]))), {})}


# ------------------------------------------------------------------------ hybrid

HYBRID_SETUP = {"grid": {"dim": 1, "n": 2048, "length": 256.0}, "packet_width": 3.0,
                "R0": -5.0, "P0": 10.0, "M": 10.0, "coupling": {"v0": -1.0, "width": 1.0},
                "gradient_mask": 1e-3}


def _ratio_key(r: float) -> str:
    return f"{r:g}"


def _hybrid_run(ratio: float, cfg: RunConfig):
    s = HYBRID_SETUP
    params = PhysicsParams.with_theta_ratio(ratio)
    g = GridSpec(**{k: s["grid"][k] for k in ("dim", "n", "length")})
    psi = gaussian_packet(g, 0.0, s["packet_width"], 0.0, params)
    state = HybridState(R=s["R0"], P=s["P0"], psi=psi, M=s["M"])
    steps = int(round(cfg.hybrid_T / cfg.dt))
    return run_hybrid(state, EvolutionConfig(cfg.dt, steps, params, snapshot_stride=max(1, steps // 10)),
                      CouplingPotential(**s["coupling"]))


def _hybrid_task(ratio: float):
    key = _ratio_key(ratio)

    def fn(ctx: Context) -> dict:
        run = _hybrid_run(ratio, ctx.cfg)
        header, rows = run.csv_rows()
        ctx.write_csv(f"hybrid_theta_{key}", header, rows)
        measured, predicted = total_momentum_drift(run)
        tot = run.total_momentum
        dP = float(np.max(np.abs(tot - tot[0])))
        relE = float(np.max(np.abs(run.energy - run.energy[0])) / abs(run.energy[0]))
        mean_g = 0.5 * (run.grad_lo + run.grad_hi)
        mask = np.abs(mean_g) > HYBRID_SETUP["gradient_mask"]
        summary = {"theta_over_hbar": ratio, "momentum_change": dP, "relative_energy_drift": relE,
                   "max_measured_drift": float(np.max(np.abs(measured))),
                   "final_R": run.final.R.tolist()}
        out = {f"hybrid.theta_{key}.energy": (relE, {"E0": float(run.energy[0])})}
        if math.isclose(ratio, 1.0):
            out[f"hybrid.theta_{key}.momentum"] = (dP, {})
        else:
            rel = np.abs(measured - predicted)[mask] / np.abs(predicted[mask])
            worst = float(np.max(rel)) if rel.size else float("nan")
            summary["drift_match"] = worst
            summary["masked_fraction"] = float(mask.mean())
            out[f"hybrid.theta_{key}.drift_match"] = (worst, {"compared_steps": int(mask.sum())})
        for cid in out:
            out[cid][1].update(summary)
        return out

    return fn


# ----------------------------------------------------------------------- twobody

TWOBODY_SETUP = {"grid2d": {"n": 256, "length": 64.0}, "com_line": {"n": 256, "length": 64.0},
                 "relative_line": {"n": 512, "length": 128.0}, "com_width": 1.0,
                 "relative_width": 2.0, "well": {"v0": -1.0, "width": 1.0},
                 "masses": [1.0, 3.0], "boost_momentum": 2.0}


def _twobody_separation(ctx: Context) -> dict:
    s = TWOBODY_SETUP
    params = PhysicsParams()
    m1, m2 = s["masses"]
    g2 = GridSpec(2, **s["grid2d"])
    gc = GridSpec(1, **s["com_line"])
    gr = GridSpec(1, **s["relative_line"])
    V = Potential.gaussian_well(**s["well"])
    phi = gaussian_packet(gr, 0.0, s["relative_width"], 0.0, params)
    steps = int(round(ctx.cfg.twobody_T / ctx.cfg.twobody_dt))
    cfg = EvolutionConfig(ctx.cfg.twobody_dt, steps, params, snapshot_stride=max(1, steps // 10))
    runs = {}
    for P0 in (0.0, s["boost_momentum"]):
        Psi = gaussian_packet(gc, 0.0, s["com_width"], P0 / params.theta, params)
        runs[P0] = com_separation_check(Psi, phi, V, cfg, m1, m2, g2)
    base = runs[0.0]
    ctx.write_csv("twobody_fidelity", ["t", "fidelity", "fidelity_boosted"],
                  _series(base.times, base.fidelity, runs[s["boost_momentum"]].fidelity))
    xa, pa = relative_observables(base.full, m1, m2)
    xb, pb = relative_observables(runs[s["boost_momentum"]].full, m1, m2)
    boost_err = float(max(np.max(np.abs(xa - xb)), np.max(np.abs(pa - pb))))
    x = g2.axis()
    rows = []
    for t, snap in zip(base.full.snapshot_times, base.full.snapshots):
        rho = np.abs(snap.amplitudes) ** 2
        r1, r2 = rho.sum(axis=1) * g2.dx, rho.sum(axis=0) * g2.dx
        rows += [(t, xi, a, b) for xi, a, b in zip(x, r1, r2)]
    ctx.write_csv("twobody_marginals", ["t", "x", "rho1", "rho2"], rows)
    com = ComCoordinates(m1, m2)
    ctx.write_json("twobody_metadata", {"com": com.to_dict(), "setup": s,
                                        "X_convention": "x1 - (m2/M) * minimum_image(x1 - x2)",
                                        "dt": cfg.dt, "steps": cfg.steps})
    fid = float(min(base.fidelity.min(), runs[s["boost_momentum"]].fidelity.min()))
    return {"twobody.com_fidelity": (1.0 - fid, {"min_fidelity": fid, "mu": com.mu, "M": com.M}),
            "twobody.boost_relative": (boost_err, {"boost_momentum": s["boost_momentum"]})}


def _twobody_dynamics(ctx: Context) -> dict:
    params = PhysicsParams()
    dt = ctx.cfg.dt
    out = {"twobody.reduced_mass": (abs(reduced_mass(1.0, 3.0) - 0.75), {"value": reduced_mass(1.0, 3.0)})}
    # continuity, masses (1, 3)
    g2 = GridSpec(2, 256, 64.0)
    gc, gr = GridSpec(1, 256, 64.0), GridSpec(1, 512, 128.0)
    phi = gaussian_packet(gr, 0.0, 2.0, 0.0, params)
    psi0 = product_state(g2, ComCoordinates(1.0, 3.0), gaussian_packet(gc, 0.0, 1.0, 0.5, params), phi)
    state = TwoBodyState(psi0, 1.0, 3.0, params)
    well = evolve_two_body(state, Potential.gaussian_well(-1.0, 1.0), EvolutionConfig(dt, 64, params))
    free = evolve_two_body(state, FREE, EvolutionConfig(dt, 64, params))
    rw, rf = two_body_continuity_residual(well), two_body_continuity_residual(free)
    m1r, m2r = marginal_residuals(free)
    ctx.write_csv("twobody_continuity", ["t", "residual_well", "residual_free", "marginal1_free",
                                         "marginal2_free"],
                  _series(well.snapshot_times[1:-1], rw, rf, m1r, m2r))
    norms = np.concatenate([marginal_norms(well), marginal_norms(free)])
    out["twobody.continuity_well"] = (float(rw.max()), {"dt": dt})
    out["twobody.continuity_free"] = (float(rf.max()), {"dt": dt})
    out["twobody.marginal_continuity"] = (float(max(m1r.max(), m2r.max())), {})
    out["twobody.marginal_norms"] = (float(np.max(np.abs(norms - 1.0))), {})
    # stationary product of plane waves
    gs = GridSpec(2, 64, 20.0)
    k = 2 * math.pi / 20.0
    x1, x2 = gs.coords()
    pw = normalize(WaveFunction(gs, np.exp(1j * (2 * k * x1 - 3 * k * x2))))
    st = evolve_two_body(TwoBodyState(pw, 1.0, 3.0, params), FREE, EvolutionConfig(dt, 8, params))
    out["twobody.stationary"] = (float(two_body_continuity_residual(st).max()), {})
    # conservation, equal masses
    g2c = GridSpec(2, 128, 64.0)
    psi_eq = product_state(g2c, ComCoordinates(1.0, 1.0),
                           gaussian_packet(GridSpec(1, 128, 64.0), 0.0, 1.0, 0.5, params),
                           gaussian_packet(GridSpec(1, 256, 128.0), 0.0, 2.0, 0.0, params))
    steps = int(round(ctx.cfg.twobody_T / dt))
    tr = evolve_two_body(TwoBodyState(psi_eq, 1.0, 1.0, params), Potential.gaussian_well(-1.0, 2.0),
                         EvolutionConfig(dt, steps, params, snapshot_stride=max(1, steps // 5)))
    P = tr.p.sum(axis=1)
    ctx.write_csv("twobody_conservation", ["t", "P_total", "H"], _series(tr.times, P, tr.energy))
    out["twobody.momentum"] = (float(np.max(np.abs(P - P[0]))), {"T": ctx.cfg.twobody_T})
    out["twobody.energy"] = (float(np.max(np.abs(tr.energy / tr.energy[0] - 1.0))),
                             {"E0": float(tr.energy[0])})
    return out


# ---------------------------------------------------------------------- registry

def _tasks_for(suite: str, cfg: RunConfig) -> list[Task]:
    C = CheckSpec
    if suite == "ccr":
        return [
            Task("ccr.grid_states", [C("ccr.grid_states", "canonical commutator [x_j, p_k] = i theta delta_jk on grid states", 1e-7)], _ccr_grid_states),
            Task("ccr.matrix", [C("ccr.matrix_n12", "canonical commutator in the truncated ladder basis", 1e-12)], _ccr_matrix),
            Task("ccr.com", [C("ccr.com_table", "centre-of-mass and relative commutators", 1e-12),
                             C("ccr.com_inverse", "p1 = (m1/M) P + p, p2 = (m2/M) P - p", 1e-12)], _ccr_com),
        ]
    if suite == "rotation":
        return [Task("rotation.algebra", [
            C("rotation.L_X", "[L_j, X_k] = i theta eps_jkl X_l", 1e-12),
            C("rotation.L_P", "[L_j, P_k] = i theta eps_jkl P_l", 1e-12),
            C("rotation.L_L", "[L_j, L_k] = i theta eps_jkl L_l", 1e-12),
            C("rotation.scalar_PP", "[L_j, P.P] = 0", 1e-12)], _rotation)]
    if suite == "symmetry":
        return [
            Task("symmetry.boosts", [C("symmetry.boost_momentum_shift", "boost shifts momentum by m V", 1e-9),
                                     C("symmetry.boost_orderings", "factor orderings of the boost agree", 1e-10)],
                 _symmetry_boosts),
            Task("symmetry.unitarity", [C("symmetry.unitarity", "translations and boosts are unitary", 1e-12),
                                        C("symmetry.plane_wave_phase", "translated plane wave gains exp(-i p a / theta)", 1e-12)],
                 _symmetry_unitarity),
        ]
    if suite == "continuity":
        return [
            Task("continuity.identities", [C(f"continuity.identity_n{n}", f"psi* D^{n} psi - (D^{n} psi*) psi = div J_{2 * n}", 1e-8)
                                           for n in (1, 2, 3)], _continuity_identities),
            Task("continuity.evolution", [C("continuity.free_dt", "continuity d rho/dt + div J = 0, free", 1e-6),
                                          C("continuity.free_order", "continuity residual halving ratio 4 +- 0.5, free", 0.5),
                                          C("continuity.well_dt", "continuity d rho/dt + div J = 0, Gaussian well", 1e-6),
                                          C("continuity.well_order", "continuity residual halving ratio 4 +- 0.5, well", 0.5)],
                 _continuity_evolution),
            Task("continuity.broken", [C("continuity.broken_floor", "momentum-dependent time-derivative term breaks continuity", 100.0, "lower"),
                                       C("continuity.broken_linearity", "breaking residual linear in c12 (ratio 2 +- 20%)", 0.2)],
                 _continuity_broken),
        ]
    if suite == "dynamics":
        return [
            Task("dynamics.phase", [C("dynamics.einstein_debroglie", "E = h nu from the phase of a momentum eigenstate", 1e-6)], _dynamics_phase),
            Task("dynamics.velocity", [C(f"dynamics.velocity_{k}", f"p = m v: three velocity routes agree ({k})", 1e-5)
                                       for k in ("free", "well", "harmonic")], _dynamics_velocity),
            Task("dynamics.conservation", [C("dynamics.energy_well", "<H> conserved by the split-step scheme", 1e-8),
                                           C("dynamics.norm", "norm conserved", 1e-10),
                                           C("dynamics.free_momentum", "<p> conserved without a potential", 1e-12)],
                 _dynamics_conservation),
        ]
    if suite == "hybrid-theta-sweep":
        tasks = []
        for r in cfg.theta_over_hbar:
            key = _ratio_key(r)
            specs = [C(f"hybrid.theta_{key}.energy", "hybrid total energy conserved for every theta", 1e-6)]
            if math.isclose(r, 1.0):
                specs.append(C(f"hybrid.theta_{key}.momentum", "P + <p> conserved iff theta = h / 2 pi", 1e-8))
            else:
                specs.append(C(f"hybrid.theta_{key}.drift_match", "d(P + <p>)/dt = (2 pi theta / h - 1) grad_R <V>", 0.01))
            tasks.append(Task(f"hybrid.theta_{key}", specs, _hybrid_task(r)))
        return tasks
    if suite == "twobody":
        return [
            Task("twobody.separation", [C("twobody.com_fidelity", "two-body motion separates into centre-of-mass and relative parts", 1e-6),
                                        C("twobody.boost_relative", "relative motion unchanged by a centre-of-mass boost", 1e-7)],
                 _twobody_separation),
            Task("twobody.dynamics", [C("twobody.reduced_mass", "mu = m1 m2 / (m1 + m2)", 0.0),
                                      C("twobody.continuity_well", "two-particle continuity, local interaction", 1e-6),
                                      C("twobody.continuity_free", "two-particle continuity, free", 1e-6),
                                      C("twobody.marginal_continuity", "each particle's marginal obeys its own continuity", 1e-6),
                                      C("twobody.marginal_norms", "marginal densities integrate to 1", 1e-10),
                                      C("twobody.stationary", "stationary product state has zero residual", 1e-10),
                                      C("twobody.momentum", "total momentum conserved under a pair interaction", 1e-9),
                                      C("twobody.energy", "two-body energy conserved", 1e-7)],
                 _twobody_dynamics),
        ]
    raise ConfigInvalid(f"unknown suite {suite!r}")


def build_tasks(cfg: RunConfig) -> list[Task]:
    suites = SUITES if cfg.suite == ALL else (cfg.suite,)
    return [t for s in suites for t in _tasks_for(s, cfg)]


def _tolerance(spec: CheckSpec, cfg: RunConfig) -> float:
    tol = float(cfg.tolerances.get(spec.check_id, spec.tolerance))
    return tol * cfg.tolerance_scale if spec.sense == "upper" else tol


def run_suite(cfg: RunConfig, out_dir: Path | None = None) -> VerificationReport:
    """Run every task of ``cfg.suite``; module errors become failed checks."""
    report = VerificationReport(cfg.suite, cfg.seed, cfg.to_dict())
    sweep = {}
    for task in build_tasks(cfg):
        ctx = Context(cfg, task.name, out_dir)
        t0 = time.perf_counter()
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                results = task.fn(ctx)
            error = None
        except Exception as exc:  # noqa: BLE001 - a broken check must not abort the suite
            results, error = {}, f"{type(exc).__name__}: {exc}"
        runtime = time.perf_counter() - t0
        for spec in task.specs:
            tol = _tolerance(spec, cfg)
            if spec.check_id in results:
                measured, detail = results[spec.check_id]
                measured = float(measured)
            else:
                measured, detail = float("nan"), {"error": error or "check produced no value"}
            report.checks.append(CheckRecord(spec.check_id, spec.anchor, measured, tol, spec.sense,
                                             CheckRecord.evaluate(measured, tol, spec.sense),
                                             runtime, detail))
            if spec.check_id.startswith("hybrid.theta_"):
                # ratio keys such as "0.5" contain a dot, so split from the right
                head, metric = spec.check_id.rsplit(".", 1)
                key = head[len("hybrid.theta_"):]
                sweep.setdefault(key, {})[metric] = {
                    "measured": measured, "tolerance": tol,
                    "passed": CheckRecord.evaluate(measured, tol, spec.sense)}
                sweep[key].update({k: v for k, v in detail.items() if k != "error"} if isinstance(detail, dict) else {})
    if sweep:
        Context(cfg, "sweep", out_dir).write_json("sweep_summary", sweep)
    return report
