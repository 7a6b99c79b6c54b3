import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from eapf.config import data_path, load_robot
from eapf.dynamics import (JointState, coriolis_matrix, dynamics_terms, fast_terms,
                           forward_dynamics, gravity_vector, inverse_dynamics,
                           kinetic_energy, link_velocities, mass_matrix,
                           mass_matrix_partials, potential_energy, total_energy)
from eapf.kinematics import forward_kinematics
from eapf.simulator import step

from conftest import planar_arm, random_states

G0 = 9.81


def two_link_closed_form(q, qd, L1=0.6, L2=0.4, m1=2.0, m2=1.0):
    lc1, lc2 = L1 / 2, L2 / 2
    I1, I2 = m1 * L1**2 / 12, m2 * L2**2 / 12
    c2, s2 = np.cos(q[1]), np.sin(q[1])
    M = np.array([[I1 + I2 + m1 * lc1**2 + m2 * (L1**2 + lc2**2 + 2 * L1 * lc2 * c2),
                   I2 + m2 * (lc2**2 + L1 * lc2 * c2)],
                  [I2 + m2 * (lc2**2 + L1 * lc2 * c2), I2 + m2 * lc2**2]])
    h = m2 * L1 * lc2 * s2
    C = np.array([[-h * qd[1], -h * (qd[0] + qd[1])], [h * qd[0], 0.0]])
    G = G0 * np.array([(m1 * lc1 + m2 * L1) * np.cos(q[0]) + m2 * lc2 * np.cos(q[0] + q[1]),
                       m2 * lc2 * np.cos(q[0] + q[1])])
    return M, C, G


angle = st.floats(-np.pi, np.pi)
rate = st.floats(-3, 3)


@given(angle, angle, rate, rate)
def test_two_link_matches_closed_form(q1, q2, v1, v2):
    arm = planar_arm([0.6, 0.4], [2.0, 1.0])
    q, qd = np.array([q1, q2]), np.array([v1, v2])
    M, C, G = two_link_closed_form(q, qd)
    assert np.allclose(mass_matrix(arm, q), M, atol=1e-12)
    assert np.allclose(gravity_vector(arm, q), G, atol=1e-12)
    # the Christoffel C is unique up to terms vanishing against qd; compare C qd
    assert np.allclose(coriolis_matrix(arm, q, qd) @ qd, C @ qd, atol=1e-7)


def test_pendulum_constant_mass(one_link):
    # rotation about the vertical axis: no gravity torque, M = I_zz + m lc^2
    for q in (0.0, 1.0, -2.5):
        assert mass_matrix(one_link, [q])[0, 0] == pytest.approx(0.5**2 / 12 + 0.25**2, rel=1e-12)
        assert gravity_vector(one_link, [q])[0] == pytest.approx(0.0, abs=1e-14)


def test_mass_matrix_symmetric_positive_definite(gen3):
    qs, _ = random_states(7, 30, seed=1)
    for q in qs:
        M = mass_matrix(gen3, q)
        assert np.max(np.abs(M - M.T)) <= 1e-9 * np.max(np.abs(M))
        assert np.all(np.linalg.eigvalsh(0.5 * (M + M.T)) > 0)


def test_skew_symmetry(gen3):
    qs, qds = random_states(7, 20, seed=2)
    rng = np.random.default_rng(3)
    for q, qd in zip(qs, qds):
        Mdot = np.einsum("kij,k->ij", mass_matrix_partials(gen3, q), qd)
        N = Mdot - 2 * coriolis_matrix(gen3, q, qd)
        x = rng.normal(size=7)
        assert abs(x @ N @ x) <= 1e-6


def test_gravity_is_gradient_of_potential(gen3):
    qs, _ = random_states(7, 20, seed=4)
    h = 1e-6
    for q in qs:
        fd = np.array([(potential_energy(gen3, q + h * e) - potential_energy(gen3, q - h * e)) / (2 * h)
                       for e in np.eye(7)])
        assert np.allclose(gravity_vector(gen3, q), fd, atol=1e-6)


def test_recursive_bias_matches_christoffel(gen3):
    qs, qds = random_states(7, 20, seed=5)
    for q, qd in zip(qs, qds):
        slow = dynamics_terms(gen3, q, qd)
        fast = fast_terms(gen3, q, qd)
        assert np.allclose(fast.m, slow.m, atol=1e-12)
        assert np.allclose(fast.bias(qd), slow.bias(qd), atol=1e-7)


@given(arrays(float, 7, elements=st.floats(-3, 3)), arrays(float, 7, elements=st.floats(-2, 2)),
       arrays(float, 7, elements=st.floats(-5, 5)))
def test_inverse_then_forward_roundtrip(q, qd, qdd):
    model = load_robot(data_path("gen3.yaml"))
    tau = inverse_dynamics(model, q, qd, qdd)
    back = forward_dynamics(model, JointState(q, qd), tau, fast_terms(model, q, qd))
    assert np.allclose(back, qdd, atol=1e-8)


def test_energy_conserved_two_link(two_link):
    # zero torque, gravity on: total energy is constant up to RK4 error
    state = JointState([0.4, -0.3], [1.0, -0.5])
    E0 = total_energy(two_link, state)
    for _ in range(2000):
        state = step(two_link, state, np.zeros(2), 1e-4)
    assert abs(total_energy(two_link, state) - E0) <= 1e-6 * abs(E0)


def test_kinetic_energy_from_link_velocities(gen3):
    q, qd = random_states(7, 1, seed=9)
    state = JointState(q[0], qd[0])
    v, w = link_velocities(gen3, state)
    # rebuild 0.5 m v^2 + 0.5 w^T I w link by link
    frames = forward_kinematics(gen3, state.q)
    T = 0.0
    for i, link in enumerate(gen3.links):
        R = frames[i].rotation
        T += 0.5 * link.mass * v[i] @ v[i] + 0.5 * w[i] @ (R @ link.inertia @ R.T) @ w[i]
    assert kinetic_energy(gen3, state) == pytest.approx(T, rel=1e-10)


def test_forward_dynamics_rejects_bad_torque(gen3):
    with pytest.raises(ValueError):
        forward_dynamics(gen3, JointState(np.zeros(7), np.zeros(7)), np.zeros(3))
