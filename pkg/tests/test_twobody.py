import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmlab.dynamics import FREE, EvolutionConfig, Potential, evolve
from qmlab.errors import ConfigInvalid, NonpositiveMass, UnsupportedPotential
from qmlab.hilbert import GridSpec, PhysicsParams, WaveFunction, gaussian_packet, plane_wave
from qmlab.twobody import (ComCoordinates, TwoBodyState, com_separation_check, evolve_two_body,
                           fourier_interpolate, marginal_norms, marginal_residuals, minimum_image,
                           product_state, reduced_mass, relative_observables,
                           two_body_continuity_residual)

P0 = PhysicsParams()
G2 = GridSpec(2, 128, 40.0)
G1 = GridSpec(1, 128, 40.0)


@pytest.mark.parametrize("m1, m2, mu", [(1.0, 3.0, 0.75), (2.0, 2.0, 1.0), (1.0, 1e9, 1.0 - 1e-9)])
def test_reduced_mass(m1, m2, mu):
    assert reduced_mass(m1, m2) == pytest.approx(mu, rel=1e-12)


@pytest.mark.parametrize("m1, m2", [(0.0, 1.0), (1.0, -2.0), (float("nan"), 1.0)])
def test_nonpositive_mass(m1, m2):
    with pytest.raises(NonpositiveMass):
        reduced_mass(m1, m2)


@settings(max_examples=30, deadline=None)
@given(m1=st.floats(0.1, 10), m2=st.floats(0.1, 10), x1=st.floats(-5, 5), x2=st.floats(-5, 5),
       p1=st.floats(-5, 5), p2=st.floats(-5, 5))
def test_com_round_trip(m1, m2, x1, x2, p1, p2):
    c = ComCoordinates(m1, m2)
    assert np.allclose(c.from_com(*c.to_com(x1, x2)), (x1, x2), atol=1e-12)
    assert np.allclose(c.momenta_from_com(*c.momenta_to_com(p1, p2)), (p1, p2), atol=1e-12)
    # kinetic energy splits into COM and relative parts
    P, p = c.momenta_to_com(p1, p2)
    ke = p1**2 / (2 * m1) + p2**2 / (2 * m2)
    assert P**2 / (2 * c.M) + p**2 / (2 * c.mu) == pytest.approx(ke, rel=1e-10, abs=1e-12)
    assert abs(c.jacobian) == 1.0


def test_periodic_com_is_torus_consistent():
    c = ComCoordinates(1.0, 3.0)
    L = 40.0
    X, x = c.to_com_periodic(np.array([19.0, -21.0]), np.array([18.0, 18.0]), L)
    # wrapping particle 1 shifts X by exactly L and leaves x alone
    assert x[0] == pytest.approx(x[1])
    assert X[0] - X[1] == pytest.approx(L)
    assert minimum_image(np.array([25.0]), L)[0] == pytest.approx(-15.0)


def test_fourier_interpolation_exact_on_grid_and_between():
    psi = gaussian_packet(G1, 0.0, 1.5, 0.4)
    x = G1.axis()
    np.testing.assert_allclose(fourier_interpolate(psi, x), psi.amplitudes, atol=1e-12)
    mid = x[:-1] + 0.5 * G1.dx
    ref = np.exp(-mid**2 / (4 * 1.5**2) + 0.4j * mid) / (2 * np.pi * 1.5**2) ** 0.25
    np.testing.assert_allclose(fourier_interpolate(psi, mid), ref, atol=1e-10)


def test_product_state_norm_and_marginal_means():
    c = ComCoordinates(1.0, 3.0)
    Psi = gaussian_packet(G1, 2.0, 1.0)
    phi = gaussian_packet(G1, 1.0, 1.5)
    psi = product_state(G2, c, Psi, phi)
    assert psi.norm_squared == pytest.approx(1.0, abs=1e-12)
    x1, x2 = G2.coords()
    rho = np.abs(psi.amplitudes) ** 2
    # x1 = X + (m2/M) x, x2 = X - (m1/M) x
    assert np.sum(rho * x1) * G2.dv == pytest.approx(2.0 + 0.75, abs=1e-9)
    assert np.sum(rho * x2) * G2.dv == pytest.approx(2.0 - 0.25, abs=1e-9)


def test_free_two_body_is_tensor_product():
    a = gaussian_packet(G1, -3.0, 1.0, 1.0)
    b = gaussian_packet(G1, 3.0, 1.5, -0.5)
    psi = WaveFunction(G2, np.outer(a.amplitudes, b.amplitudes))
    cfg = EvolutionConfig(1e-3, 500, P0, snapshot_stride=500)
    full = evolve_two_body(TwoBodyState(psi, 1.0, 3.0, P0), FREE, cfg).snapshots[-1]
    ea = evolve(a, FREE, cfg, mass=1.0).snapshots[-1]
    eb = evolve(b, FREE, cfg, mass=3.0).snapshots[-1]
    ov = np.vdot(full.amplitudes, np.outer(ea.amplitudes, eb.amplitudes)) * G2.dv
    assert abs(ov) > 1 - 1e-10


@pytest.fixture(scope="module")
def well_run():
    a = gaussian_packet(G1, -1.5, 1.0, 0.8)
    b = gaussian_packet(G1, 1.5, 1.0, -0.4)
    psi = WaveFunction(G2, np.outer(a.amplitudes, b.amplitudes))
    st_ = TwoBodyState(psi, 1.0, 2.0, P0)
    return evolve_two_body(st_, Potential.gaussian_well(-1.0, 1.0), EvolutionConfig(1e-3, 64, P0))


def test_two_body_continuity(well_run):
    assert two_body_continuity_residual(well_run).max() < 1e-6
    r1, r2 = marginal_residuals(well_run)
    assert r1.max() < 1e-6 and r2.max() < 1e-6
    assert np.max(np.abs(marginal_norms(well_run) - 1)) < 1e-10


def test_internal_force_conserves_total_momentum(well_run):
    ptot = well_run.p[:, 0] + well_run.p[:, 1]
    assert np.max(np.abs(ptot - ptot[0])) < 1e-9
    x, p = relative_observables(well_run, 1.0, 2.0)
    assert x[0] == pytest.approx(-3.0, abs=1e-9)


def test_stationary_plane_wave_product():
    # a plane wave in each particle under a constant pair potential stays a product
    g = GridSpec(2, 32, 20.0)
    k = 2 * np.pi / 20.0
    a = plane_wave(GridSpec(1, 32, 20.0), 2 * k)
    b = plane_wave(GridSpec(1, 32, 20.0), -k)
    psi = WaveFunction(g, np.outer(a.amplitudes, b.amplitudes))
    tr = evolve_two_body(TwoBodyState(psi, 1.0, 3.0, P0), FREE, EvolutionConfig(1e-2, 20, P0))
    rho = np.abs(tr.snapshots[-1].amplitudes) ** 2
    assert np.max(np.abs(rho - rho.mean())) < 1e-10


def test_com_separation_small():
    gc = GridSpec(1, 128, 40.0)
    gr = GridSpec(1, 256, 80.0)
    Psi = gaussian_packet(gc, 0.0, 1.0, 1.0)
    phi = gaussian_packet(gr, 0.0, 2.0)
    res = com_separation_check(Psi, phi, Potential.gaussian_well(-1.0, 1.0),
                               EvolutionConfig(5e-3, 200, P0, snapshot_stride=50), 1.0, 3.0,
                               grid2d=GridSpec(2, 128, 40.0))
    assert len(res.fidelity) == 5
    assert 1 - res.fidelity.min() < 1e-6


def test_errors():
    with pytest.raises(ConfigInvalid):
        TwoBodyState(gaussian_packet(G1), 1.0, 1.0, P0)
    with pytest.raises(NonpositiveMass):
        TwoBodyState(gaussian_packet(G2), 1.0, 0.0, P0)
    with pytest.raises(UnsupportedPotential):
        evolve_two_body(TwoBodyState(gaussian_packet(G2), 1.0, 1.0, P0), Potential("momentum_dependent"),
                        EvolutionConfig(1e-3, 1, P0))
    with pytest.raises(ConfigInvalid):
        fourier_interpolate(gaussian_packet(G2), np.zeros(3))
