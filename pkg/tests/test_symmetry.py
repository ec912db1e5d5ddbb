import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from qmlab.hilbert import (GridSpec, PhysicsParams, WaveFunction, gaussian_packet, inner_product,
                           plane_wave, random_packet_state)
from qmlab.matrixrep import build_rotation_generators, build_xp_matrices, safe_mask
from qmlab.symmetry import (SymmetryTransform, check_boost_factorization, fidelity,
                            galilean_boost, generator_first_order, mean_momentum, mean_position,
                            rotation_operator, translate, velocity_transform_check)

G = GridSpec(1, 256, 40.0)
P0 = PhysicsParams()


@pytest.mark.parametrize("a", [0.5, -1.25, 3.0])
def test_translation_moves_mean(a):
    psi = gaussian_packet(G, 0.0, 1.0, 0.5)
    out = translate(psi, a)
    assert mean_position(out, P0)[0] == pytest.approx(a, abs=1e-12)
    assert mean_momentum(out, P0)[0] == pytest.approx(0.5, abs=1e-12)


def test_translation_by_grid_step_is_roll():
    psi = gaussian_packet(G, 0.0, 1.0, 0.3)
    out = translate(psi, 3 * G.dx)
    np.testing.assert_allclose(out.amplitudes, np.roll(psi.amplitudes, 3), atol=1e-13)


def test_plane_wave_phase():
    g = GridSpec(1, 64, 20.0)
    pw = plane_wave(g, 2 * math.pi / 20.0 * 4)
    p = pw.meta["momentum"][0]
    out = translate(pw, 0.9)
    np.testing.assert_allclose(out.amplitudes, np.exp(-1j * p * 0.9) * pw.amplitudes, atol=1e-13)
    assert fidelity(out, pw) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("m", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("V", [-0.5, 0.25, 1.0])
def test_boost_shifts_momentum(m, V):
    psi = gaussian_packet(G, 0.0, 1.0, 0.5)
    out = galilean_boost(psi, V, 0.3, P0, mass=m)
    assert mean_momentum(out, P0)[0] - 0.5 == pytest.approx(m * V, abs=1e-9)
    assert mean_position(out, P0)[0] == pytest.approx(V * 0.3, abs=1e-12)


@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
def test_boost_orderings_agree(theta):
    params = PhysicsParams(theta=theta)
    psi = gaussian_packet(G, 0.0, 1.0, 0.2, params)
    assert check_boost_factorization(0.7, 1.3, params, psi) < 1e-10


def test_boost_has_explicit_phase():
    # with t = 0 the translation is trivial, leaving only exp(i m V x / theta)
    psi = gaussian_packet(G, 0.0, 1.0)
    out = galilean_boost(psi, 0.4, 0.0, P0, mass=1.5)
    expected = np.exp(1j * 1.5 * 0.4 * G.coords()[0]) * psi.amplitudes
    np.testing.assert_allclose(out.amplitudes, expected, atol=1e-13)


def test_velocity_transform():
    psi = gaussian_packet(G, 0.0, 1.0, 1.0)
    r = velocity_transform_check(psi, 0.5, P0, mass=2.0)
    assert r["error"] < 1e-12
    assert r["v_after"][0] == pytest.approx(1.0, abs=1e-12)


def test_generator_first_order():
    psi = gaussian_packet(G, 0.0, 1.0, 0.5)
    V = 1e-4
    exact = galilean_boost(psi, V, 0.2, P0)
    lin = generator_first_order(psi, V, 0.2, P0)
    err = np.sqrt(np.sum(np.abs(exact.amplitudes - lin.amplitudes) ** 2) * G.dv)
    assert err < 1e-7


def test_descriptor():
    psi = gaussian_packet(G, 0.0, 1.0)
    tr = SymmetryTransform("translation", P0, shift=(1.0,))
    assert mean_position(tr.apply(psi), P0)[0] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        SymmetryTransform("rotation", P0, angles=(0.1, 0, 0)).apply(psi)


def test_rotation_operator_unitary_and_preserves_l2():
    L = build_rotation_generators(6, P0)
    U = rotation_operator(L, (0.3, -0.2, 0.5), P0)
    np.testing.assert_allclose(U.conj().T @ U, np.eye(216), atol=1e-12)
    L2 = sum(l.matrix @ l.matrix for l in L)
    # L^2 commutes with every L_j on states that do not touch the top level
    mask = safe_mask(6, 3, 3)
    res = (U @ L2 - L2 @ U)[:, mask]
    assert np.max(np.abs(res)) < 1e-10


def test_rotation_about_z_rotates_x_into_y():
    X, P = build_xp_matrices(6, 3, P0)
    L = build_rotation_generators(6, P0)
    phi = 0.4
    U = rotation_operator(L, (0.0, 0.0, phi), P0)
    mask = safe_mask(6, 3, 2)
    lhs = (U.conj().T @ X[0].matrix @ U)[:, mask]
    rhs = (math.cos(phi) * X[0].matrix - math.sin(phi) * X[1].matrix)[:, mask]
    # sign follows exp(-i phi L / theta): U^+ X U = cos X - sin Y
    assert np.max(np.abs(lhs - rhs)) < 1e-10


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-2, 2), V=st.floats(-1, 1))
def test_transforms_are_unitary(seed, a, V):
    g = GridSpec(1, 128, 30.0)
    psi = random_packet_state(g, np.random.default_rng(seed))
    for out in (translate(psi, a), galilean_boost(psi, V, 0.5, P0)):
        assert out.norm_squared == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), a=st.floats(-2, 2), b=st.floats(-2, 2))
def test_translations_compose(seed, a, b):
    g = GridSpec(1, 128, 30.0)
    psi = random_packet_state(g, np.random.default_rng(seed))
    two = translate(translate(psi, a), b)
    one = translate(psi, a + b)
    assert abs(inner_product(two, one)) == pytest.approx(1.0, abs=1e-12)
