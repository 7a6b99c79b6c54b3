import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from eapf.config import data_path, load_robot
from eapf.kinematics import (LinkParams, RobotModel, Transform, control_points_batch,
                             dh_transform, forward_kinematics, point_jacobian)

from conftest import planar_arm

angles = st.floats(-np.pi, np.pi, allow_nan=False)


def test_dh_identity():
    assert np.allclose(dh_transform(0, 0, 0, 0).matrix, np.eye(4), atol=0)


def test_dh_quarter_turn_about_x():
    T = dh_transform(np.pi / 2, 0.0, 0.0, 0.0).matrix
    R = np.array([[1, 0, 0], [0, 0, -1], [0, 1, 0]], dtype=float)
    assert np.allclose(T[:3, :3], R, atol=1e-15)


def test_dh_order_translates_along_new_z():
    # Rx(alpha) then Dz(d): the offset lands along the rotated z axis
    T = dh_transform(np.pi / 2, 0.3, 0.0, 0.2).matrix
    assert np.allclose(T[:3, 3], [0.3, -0.2, 0.0], atol=1e-15)


@given(angles, angles)
def test_two_link_fk_exact(q1, q2):
    arm = planar_arm([0.6, 0.4])
    ee = forward_kinematics(arm, [q1, q2])[-1].translation
    expect = [0.6 * np.cos(q1) + 0.4 * np.cos(q1 + q2),
              0.6 * np.sin(q1) + 0.4 * np.sin(q1 + q2), 0.0]
    assert np.max(np.abs(ee - expect)) <= 1e-12


def test_gen3_frame_count_and_home_height(gen3):
    frames = forward_kinematics(gen3, np.zeros(7))
    assert len(frames) == 8
    # the arm stands upright at home: the tool sits above every joint
    z = [f.translation[2] for f in frames]
    assert z[-1] == max(z) and z[-1] > 1.0


def test_transform_inverse_roundtrip(gen3):
    T = forward_kinematics(gen3, np.linspace(-1, 1, 7))[-1]
    assert np.allclose((T @ T.inverse()).matrix, np.eye(4), atol=1e-12)


def test_control_points(gen3):
    q = np.linspace(-0.5, 0.5, 7)
    pts, jv, frames = control_points_batch(gen3, q)
    assert pts.shape == (8, 3) and jv.shape == (8, 3, 7)
    fk = forward_kinematics(gen3, q)
    assert np.allclose(pts, [f.translation for f in fk], atol=1e-14)


def test_jacobian_columns_after_point_are_zero(gen3):
    J = point_jacobian(gen3, np.full(7, 0.3), 3, (0.1, 0.0, 0.05))
    assert np.all(J.jv[:, 3:] == 0) and np.all(J.jw[:, 3:] == 0)


def _fd_jacobian(model, q, frame, local, h=1e-6):
    cols = []
    for k in range(model.n):
        dq = np.zeros(model.n)
        dq[k] = h
        p_plus = forward_kinematics(model, q + dq)[frame - 1].apply(local)
        p_minus = forward_kinematics(model, q - dq)[frame - 1].apply(local)
        cols.append((p_plus - p_minus) / (2 * h))
    return np.array(cols).T


def test_jacobian_matches_central_difference(gen3):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        q = rng.uniform(-np.pi, np.pi, 7)
        frame = int(rng.integers(1, 9))
        local = rng.uniform(-0.1, 0.1, 3)
        J = point_jacobian(gen3, q, frame, local).jv
        worst = max(worst, np.max(np.abs(J - _fd_jacobian(gen3, q, frame, local))))
    assert worst <= 1e-6


@given(arrays(float, 7, elements=angles))
def test_batch_jacobian_matches_single(q):
    model = load_robot(data_path("gen3.yaml"))
    _, jv, _ = control_points_batch(model, q)
    for j in (0, 4, 7):
        assert np.allclose(jv[j], point_jacobian(model, q, j + 1).jv, atol=1e-12)


def test_angular_jacobian_is_joint_axes(two_link):
    J = point_jacobian(two_link, [0.2, -0.4], 3)
    assert np.allclose(J.jw, [[0, 0], [0, 0], [1, 1]])


def test_bad_configuration_length(gen3):
    with pytest.raises(ValueError):
        forward_kinematics(gen3, np.zeros(6))


def test_rejects_nonphysical_inertia():
    with pytest.raises(ValueError):
        LinkParams(0, 0, 0, 0, 1.0, (0, 0, 0), np.diag([1.0, 0.1, 0.1]))  # triangle inequality


def test_ee_offset_applied():
    arm = RobotModel((LinkParams(0, 0, 0),), (0, 0, 0), Transform(np.eye(3), (0.0, 0.0, 0.25)))
    assert np.allclose(forward_kinematics(arm, [1.0])[-1].translation, [0, 0, 0.25])
