"""Constants, periodic grids and wavefunction states.

Wavefunctions live on a periodic box ``[-L/2, L/2)^dim`` sampled at ``N``
points per axis.  Inner products use the Riemann convention
``<phi|psi> = sum(conj(phi) * psi) * dV`` so that continuum formulas carry
over verbatim for band-limited states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np
import scipy.fft as sfft

from .errors import BoundaryLeak, GridMismatch, ZeroNorm

#: Tail mass in the edge band above which a localized state counts as leaking.
LEAK_TOL = 1e-10


@dataclass(frozen=True)
class PhysicsParams:
    """Physical constants.

    ``theta`` scales every symmetry generator, ``h`` multiplies the time
    derivative in the equation of motion.  They are independent knobs; the
    physically consistent choice is ``h == 2*pi*theta``.
    """

    theta: float = 1.0
    h: float = 2.0 * math.pi
    masses: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        from .errors import ConfigInvalid, NonpositiveMass

        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))
        if not (self.theta > 0 and math.isfinite(self.theta)):
            raise ConfigInvalid(f"theta must be positive, got {self.theta}")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise ConfigInvalid(f"h must be positive, got {self.h}")
        if not self.masses:
            raise NonpositiveMass("at least one mass is required")
        for m in self.masses:
            if not m > 0:
                raise NonpositiveMass(f"mass must be positive, got {m}")

    @property
    def hbar(self) -> float:
        return self.h / (2.0 * math.pi)

    @property
    def mass(self) -> float:
        return self.masses[0]

    @classmethod
    def with_theta_ratio(cls, ratio: float, h: float = 2.0 * math.pi,
                         masses: Sequence[float] = (1.0,)) -> "PhysicsParams":
        """Parameters with ``theta = ratio * h / (2 pi)``."""
        return cls(theta=ratio * h / (2.0 * math.pi), h=h, masses=tuple(masses))

    def to_dict(self) -> dict:
        return {"theta": self.theta, "h": self.h, "masses": list(self.masses)}


@dataclass(frozen=True)
class GridSpec:
    """Periodic cubic grid with ``n`` points per axis over a box of side ``length``."""

    dim: int
    n: int
    length: float

    def __post_init__(self):
        from .errors import ConfigInvalid

        if self.dim not in (1, 2, 3):
            raise ConfigInvalid(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ConfigInvalid(f"points per axis must be a power of two >= 8, got {self.n}")
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ConfigInvalid(f"box length must be positive, got {self.length}")

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def dv(self) -> float:
        return self.dx ** self.dim

    @property
    def dk(self) -> float:
        return 2.0 * math.pi / self.length

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def k_nyquist(self) -> float:
        return math.pi / self.dx

    def axis(self) -> np.ndarray:
        return -0.5 * self.length + self.dx * np.arange(self.n)

    def wavenumbers(self) -> np.ndarray:
        return 2.0 * math.pi * sfft.fftfreq(self.n, d=self.dx)

    def coords(self) -> list[np.ndarray]:
        """Coordinate arrays, one per axis, broadcast to the full grid shape."""
        return np.meshgrid(*([self.axis()] * self.dim), indexing="ij")

    def kgrid(self) -> list[np.ndarray]:
        return np.meshgrid(*([self.wavenumbers()] * self.dim), indexing="ij")

    def k_squared(self) -> np.ndarray:
        return sum(k**2 for k in self.kgrid())

    def edge_mask(self) -> np.ndarray:
        """Cells within the outer 1/16 of the box on any axis."""
        band = max(2, self.n // 16)
        idx = np.arange(self.n)
        edge1d = (idx < band) | (idx >= self.n - band)
        mask = np.zeros(self.shape, dtype=bool)
        for ax in range(self.dim):
            shape = [1] * self.dim
            shape[ax] = self.n
            mask |= edge1d.reshape(shape)
        return mask

    def to_dict(self) -> dict:
        return {"dim": self.dim, "n": self.n, "length": self.length, "periodic": True}


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Immutable complex amplitude field ``psi(r) = <r|psi>`` on a grid."""

    grid: GridSpec
    amplitudes: np.ndarray
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=np.complex128, copy=True)
        if a.shape != self.grid.shape:
            raise GridMismatch(f"amplitude shape {a.shape} does not match grid {self.grid.shape}")
        a.flags.writeable = False
        object.__setattr__(self, "amplitudes", a)
        object.__setattr__(self, "meta", MappingProxyType(dict(self.meta)))

    @property
    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.grid.dv)

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm_squared - 1.0) < 1e-12

    def with_amplitudes(self, amplitudes: np.ndarray, **meta) -> "WaveFunction":
        return WaveFunction(self.grid, amplitudes, meta)

    def __add__(self, other: "WaveFunction") -> "WaveFunction":
        _check_grid(self, other)
        return WaveFunction(self.grid, self.amplitudes + other.amplitudes)

    def __mul__(self, scalar) -> "WaveFunction":
        return WaveFunction(self.grid, scalar * self.amplitudes)

    __rmul__ = __mul__


def _check_grid(a: WaveFunction, b: WaveFunction):
    if a.grid != b.grid:
        raise GridMismatch(f"{a.grid} != {b.grid}")


def normalize(psi: WaveFunction) -> WaveFunction:
    """Return ``psi / ||psi||``."""
    n2 = psi.norm_squared
    if n2 < 1e-300:
        raise ZeroNorm("cannot normalize a state with vanishing norm")
    return WaveFunction(psi.grid, psi.amplitudes / math.sqrt(n2), psi.meta)


def inner_product(phi: WaveFunction, psi: WaveFunction) -> complex:
    """Discrete ``<phi|psi>``, antilinear in ``phi``."""
    _check_grid(phi, psi)
    return complex(np.vdot(phi.amplitudes, psi.amplitudes) * phi.grid.dv)


def probability_density(psi: WaveFunction) -> np.ndarray:
    return np.abs(psi.amplitudes) ** 2


def edge_mass(psi: WaveFunction) -> float:
    """Probability carried by the boundary band of the box."""
    rho = probability_density(psi)
    return float(np.sum(rho[psi.grid.edge_mask()]) * psi.grid.dv)


def check_leak(before: WaveFunction | None, after: WaveFunction, tol: float = LEAK_TOL):
    """Raise BoundaryLeak if a state that was localized now touches the edge.

    States already spread over the box (plane waves, standing waves) are
    periodic by construction and pass through unchecked.
    """
    if before is not None and edge_mass(before) > tol:
        return
    leak = edge_mass(after)
    if leak > tol:
        raise BoundaryLeak(f"edge mass {leak:.3e} exceeds {tol:.0e}")


def momentum_amplitudes(psi: WaveFunction) -> np.ndarray:
    """Continuum-normalized momentum-space amplitudes on the FFT wavenumber grid.

    With ``dV_k = (2 pi / L)^dim`` the sum ``sum |psi_k|^2 dV_k`` equals the
    position-space norm (discrete Parseval).
    """
    g = psi.grid
    x0 = g.axis()[0]
    phase = np.exp(-1j * sum(k * x0 for k in g.kgrid()))
    return sfft.fftn(psi.amplitudes) * phase * g.dv / (2.0 * math.pi) ** (g.dim / 2)


def momentum_norm_squared(psi: WaveFunction) -> float:
    g = psi.grid
    return float(np.sum(np.abs(momentum_amplitudes(psi)) ** 2) * g.dk**g.dim)


def spectral_tail_fraction(psi: WaveFunction, band: float) -> float:
    """Fraction of the norm held by modes with ``|k_j| > (1 - band) k_nyquist`` on any axis."""
    g = psi.grid
    power = np.abs(sfft.fftn(psi.amplitudes)) ** 2
    total = power.sum()
    if total == 0:
        return 0.0
    cut = (1.0 - band) * g.k_nyquist
    mask = np.zeros(g.shape, dtype=bool)
    for k in g.kgrid():
        mask |= np.abs(k) > cut
    return float(power[mask].sum() / total)


def gaussian_packet(grid: GridSpec, center=0.0, width=1.0, wavevector=0.0,
                    params: PhysicsParams | None = None) -> WaveFunction:
    """Normalized ``exp(-(r - r0)^2 / 4 sigma^2 + i k0.r)``.

    ``center``, ``width`` and ``wavevector`` accept scalars (applied to every
    axis) or per-axis sequences.  The mean momentum is ``theta * k0``.
    """
    r0 = np.broadcast_to(np.asarray(center, dtype=float), (grid.dim,))
    sig = np.broadcast_to(np.asarray(width, dtype=float), (grid.dim,))
    k0 = np.broadcast_to(np.asarray(wavevector, dtype=float), (grid.dim,))
    if np.any(sig <= 0):
        raise ValueError("width must be positive")
    expo = np.zeros(grid.shape, dtype=np.complex128)
    for ax, x in enumerate(grid.coords()):
        expo += -((x - r0[ax]) ** 2) / (4.0 * sig[ax] ** 2) + 1j * k0[ax] * x
    psi = normalize(WaveFunction(grid, np.exp(expo)))
    check_leak(None, psi)
    theta = (params or PhysicsParams()).theta
    return WaveFunction(grid, psi.amplitudes, {"kind": "gaussian", "center": r0.tolist(),
                                               "width": sig.tolist(),
                                               "momentum": (theta * k0).tolist()})


def plane_wave(grid: GridSpec, p=0.0, params: PhysicsParams | None = None) -> WaveFunction:
    """Box-normalized momentum eigenstate, snapped to the nearest grid mode.

    The requested and snapped momenta, and the continuum normalization
    constant ``(2 pi theta)^(-dim/2)``, are recorded in ``meta``.
    """
    params = params or PhysicsParams()
    p_req = np.broadcast_to(np.asarray(p, dtype=float), (grid.dim,))
    modes = np.rint(p_req * grid.length / (2.0 * math.pi * params.theta)).astype(int)
    half = grid.n // 2
    modes = np.clip(modes, -half + 1, half - 1)
    k = 2.0 * math.pi * modes / grid.length
    p_snap = params.theta * k
    phase = sum(kk * x for kk, x in zip(k, grid.coords()))
    amp = np.exp(1j * phase) / math.sqrt(grid.length**grid.dim)
    snapped = bool(np.any(np.abs(p_snap - p_req) > 1e-12 * max(1.0, float(np.max(np.abs(p_req))))))
    meta = {
        "kind": "plane_wave",
        "requested_momentum": p_req.tolist(),
        "momentum": p_snap.tolist(),
        "mode": modes.tolist(),
        "snapped": snapped,
        "continuum_norm": (2.0 * math.pi * params.theta) ** (-grid.dim / 2),
    }
    return WaveFunction(grid, amp, meta)


def random_packet_state(grid: GridSpec, rng: np.random.Generator, n_packets: int = 3,
                        kmax: float = 1.0, widths: tuple[float, float] | None = None) -> WaveFunction:
    """Seeded superposition of localized Gaussian packets.

    The result is localized in position (safe for multiplication by
    coordinates) and in momentum (well inside the Nyquist band), which is what
    the spectral identities need.
    """
    L = grid.length
    lo, hi = widths or (L / 45, L / 30)
    amp = np.zeros(grid.shape, dtype=np.complex128)
    coords = grid.coords()
    for _ in range(n_packets):
        c = rng.uniform(-L / 10, L / 10, grid.dim)
        s = rng.uniform(lo, hi, grid.dim)
        k0 = rng.uniform(-kmax, kmax, grid.dim)
        w = rng.normal() + 1j * rng.normal()
        expo = sum(-((x - c[a]) ** 2) / (4 * s[a] ** 2) + 1j * k0[a] * x
                   for a, x in enumerate(coords))
        amp += w * np.exp(expo)
    return normalize(WaveFunction(grid, amp, {"kind": "random_packets"}))
