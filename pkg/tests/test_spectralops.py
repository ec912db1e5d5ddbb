import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmlab.errors import GridMismatch, SpectralAliasing
from qmlab.hilbert import GridSpec, PhysicsParams, gaussian_packet, plane_wave, random_packet_state
from qmlab.spectralops import (apply, commutator_expectation, expectation, free_hamiltonian,
                               function_of_p, function_of_r, hamiltonian, kinetic_multiplier,
                               momentum, position, velocity)

G = GridSpec(1, 256, 40.0)
P0 = PhysicsParams()


@pytest.mark.parametrize("k0", [0.0, 1.0, 2.0, -1.5])
def test_mean_momentum(k0):
    psi = gaussian_packet(G, 0.0, 1.0, k0)
    assert expectation(momentum(G, P0), psi) == pytest.approx(k0, abs=1e-12)


@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
def test_momentum_scales_with_theta(theta):
    params = PhysicsParams(theta=theta)
    psi = gaussian_packet(G, 0.0, 1.0, 2.0)
    assert expectation(momentum(G, params), psi).real == pytest.approx(2.0 * theta, abs=1e-12)


def test_free_energy_of_gaussian():
    # <p^2> = 1 / (4 sigma^2) for the sigma=1 packet, so <H> = 1/8
    psi = gaussian_packet(G, 0.0, 1.0)
    assert expectation(free_hamiltonian(G, P0), psi).real == pytest.approx(0.125, abs=1e-12)


def test_kinetic_multiplier_mass_axes():
    g = GridSpec(2, 16, 10.0)
    k1, k2 = g.kgrid()
    m = kinetic_multiplier(g, P0, (1.0, 4.0))
    np.testing.assert_allclose(m, 0.5 * k1**2 + 0.125 * k2**2)


@pytest.mark.parametrize("theta", [0.5, 1.0, 3.0])
def test_ccr_on_gaussian(theta):
    params = PhysicsParams(theta=theta)
    psi = gaussian_packet(G, 0.5, 1.0, 0.7)
    val = commutator_expectation(position(G, params), momentum(G, params), psi)
    assert val == pytest.approx(1j * theta, abs=1e-12)


def test_commutator_p_x_squared():
    psi = gaussian_packet(G, 1.0, 1.0)
    x2 = function_of_r(G, P0, lambda x: x**2, "x^2")
    val = commutator_expectation(momentum(G, P0), x2, psi)
    # [p, x^2] = -2 i theta x, and <x> = 1
    assert val == pytest.approx(-2j, abs=1e-11)


def test_cross_axes_commute():
    g = GridSpec(2, 64, 20.0)
    psi = random_packet_state(g, np.random.default_rng(3))
    assert abs(commutator_expectation(position(g, P0, 0), momentum(g, P0, 1), psi)) < 1e-13
    assert abs(commutator_expectation(momentum(g, P0, 0), momentum(g, P0, 1), psi)) < 1e-13


def test_hamiltonian_sum_and_self_adjoint():
    V = 0.5 * G.coords()[0] ** 2
    H = hamiltonian(G, P0, V)
    alt = free_hamiltonian(G, P0) + function_of_r(G, P0, lambda x: 0.5 * x**2)
    psi = gaussian_packet(G, 0.3, 1.0, 0.4)
    assert expectation(H, psi) == pytest.approx(expectation(alt, psi), abs=1e-13)
    assert H.self_adjoint
    assert abs(expectation(H, psi).imag) < 1e-14


def test_velocity_is_p_over_m():
    psi = gaussian_packet(G, 0.0, 1.0, 1.0)
    assert expectation(velocity(G, P0, mass=2.0), psi).real == pytest.approx(0.5, abs=1e-12)


def test_function_of_p_matches_momentum_square():
    psi = gaussian_packet(G, 0.0, 1.0, 1.0)
    p2 = function_of_p(G, P0, lambda p: p**2)
    assert expectation(p2, psi).real == pytest.approx(1.0 + 0.25, abs=1e-12)


def test_plane_wave_is_eigenstate():
    g = GridSpec(1, 64, 20.0)
    pw = plane_wave(g, 3 * 2 * math.pi / 20.0)
    out = apply(momentum(g, P0), pw)
    np.testing.assert_allclose(out.amplitudes, pw.meta["momentum"][0] * pw.amplitudes, atol=1e-13)


def test_aliasing_warning():
    g = GridSpec(1, 32, 10.0)
    pw = plane_wave(g, 0.95 * g.k_nyquist)
    with pytest.warns(SpectralAliasing):
        apply(momentum(g, P0), pw)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        apply(momentum(G, P0), gaussian_packet(G))


def test_grid_mismatch():
    with pytest.raises(GridMismatch):
        apply(momentum(GridSpec(1, 128, 40.0), P0), gaussian_packet(G))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), theta=st.floats(0.2, 5.0))
def test_ccr_random_states(seed, theta):
    params = PhysicsParams(theta=theta)
    g = GridSpec(1, 128, 30.0)
    psi = random_packet_state(g, np.random.default_rng(seed))
    val = commutator_expectation(position(g, params), momentum(g, params), psi)
    assert abs(val - 1j * theta) < 1e-7


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_momentum_hermitian(seed):
    g = GridSpec(1, 128, 30.0)
    rng = np.random.default_rng(seed)
    a, b = random_packet_state(g, rng), random_packet_state(g, rng)
    from qmlab.hilbert import inner_product
    p = momentum(g, P0)
    assert inner_product(a, apply(p, b)) == pytest.approx(np.conj(inner_product(b, apply(p, a))),
                                                          abs=1e-12)
