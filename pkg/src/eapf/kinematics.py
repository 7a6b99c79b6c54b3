"""Modified-DH kinematics for serial arms with revolute joints.

Frame ``i`` is attached to link ``i`` and its z-axis is the axis of joint
``i``.  The link transform from frame ``i-1`` to frame ``i`` is

    Rx(alpha_prev) @ Dx(a_prev) @ Rz(theta) @ Dz(d)

All public functions take angles in radians.  The ``*_batch`` helpers work
on stacked configurations of shape ``(..., n)`` and are what the dynamics
and planner use internally.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

ORTHO_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Transform:
    """Rigid-body pose: ``p_parent = rotation @ p_child + translation``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float).reshape(3, 3)
        p = np.array(self.translation, dtype=float).reshape(3)
        if np.linalg.norm(R.T @ R - np.eye(3)) > ORTHO_TOL:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > ORTHO_TOL:
            raise ValueError("rotation is not proper (det != 1)")
        R.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", p)

    @classmethod
    def identity(cls) -> Transform:
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, T) -> Transform:
        T = np.asarray(T, dtype=float)
        return cls(T[:3, :3], T[:3, 3])

    @property
    def matrix(self) -> np.ndarray:
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T

    def __matmul__(self, other: Transform) -> Transform:
        return Transform(self.rotation @ other.rotation,
                         self.rotation @ other.translation + self.translation)

    def apply(self, p) -> np.ndarray:
        return self.rotation @ np.asarray(p, dtype=float) + self.translation

    def inverse(self) -> Transform:
        Rt = self.rotation.T
        return Transform(Rt, -Rt @ self.translation)

    def __eq__(self, other):
        if not isinstance(other, Transform):
            return NotImplemented
        return (np.array_equal(self.rotation, other.rotation)
                and np.array_equal(self.translation, other.translation))

    def __repr__(self):
        return (f"Transform(rotation={self.rotation.tolist()}, "
                f"translation={self.translation.tolist()})")


def _check_inertia(inertia: np.ndarray) -> None:
    if not np.allclose(inertia, inertia.T, rtol=0.0, atol=1e-12):
        raise ValueError("inertia tensor is not symmetric")
    eig = np.linalg.eigvalsh(inertia)
    if eig[0] <= 0.0:
        raise ValueError("inertia tensor is not positive definite")
    a, b, c = eig
    # principal moments of a physical body obey the triangle inequality
    slack = 1e-12 * max(c, 1.0)
    if a + b < c - slack:
        raise ValueError("principal moments violate the triangle inequality")


@dataclass(frozen=True, eq=False)
class LinkParams:
    """One link: modified-DH geometry plus rigid-body inertial data.

    ``com`` and ``inertia`` are expressed in the link's own frame; the
    inertia is taken about the center of mass.
    """

    alpha_prev: float
    a_prev: float
    d: float
    theta_offset: float = 0.0
    mass: float = 1.0
    com: np.ndarray = field(default_factory=lambda: np.zeros(3))
    inertia: np.ndarray = field(default_factory=lambda: 1e-3 * np.eye(3))

    def __post_init__(self):
        for name in ("alpha_prev", "a_prev", "d", "theta_offset", "mass"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not self.mass > 0.0:
            raise ValueError(f"link mass must be positive, got {self.mass}")
        com = np.array(self.com, dtype=float).reshape(3)
        inertia = np.array(self.inertia, dtype=float).reshape(3, 3)
        _check_inertia(inertia)
        com.flags.writeable = False
        inertia.flags.writeable = False
        object.__setattr__(self, "com", com)
        object.__setattr__(self, "inertia", inertia)


@dataclass(frozen=True, eq=False)
class RobotModel:
    links: tuple
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    ee_offset: Transform = field(default_factory=Transform.identity)
    name: str = "robot"

    def __post_init__(self):
        links = tuple(self.links)
        if not links:
            raise ValueError("a robot needs at least one link")
        g = np.array(self.gravity, dtype=float).reshape(3)
        g.flags.writeable = False
        object.__setattr__(self, "links", links)
        object.__setattr__(self, "gravity", g)

    @property
    def n(self) -> int:
        return len(self.links)

    def with_gravity(self, gravity) -> RobotModel:
        return RobotModel(self.links, gravity, self.ee_offset, self.name)

    # Stacked parameter arrays for the vectorized kernels.
    @cached_property
    def _alpha(self):
        return np.array([l.alpha_prev for l in self.links])

    @cached_property
    def _a(self):
        return np.array([l.a_prev for l in self.links])

    @cached_property
    def _d(self):
        return np.array([l.d for l in self.links])

    @cached_property
    def _offset(self):
        return np.array([l.theta_offset for l in self.links])

    @cached_property
    def masses(self) -> np.ndarray:
        return np.array([l.mass for l in self.links])

    @cached_property
    def coms(self) -> np.ndarray:
        return np.stack([l.com for l in self.links])

    @cached_property
    def inertias(self) -> np.ndarray:
        return np.stack([l.inertia for l in self.links])

    def check_q(self, q, name="q") -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape[-1:] != (self.n,):
            raise ValueError(f"{name} must have length {self.n}, got shape {q.shape}")
        return q


@dataclass(frozen=True)
class Jacobian:
    """Translational (``jv``) and rotational (``jw``) Jacobians, each 3 x n."""

    jv: np.ndarray
    jw: np.ndarray

    @property
    def stacked(self) -> np.ndarray:
        return np.vstack([self.jv, self.jw])


def dh_transform(alpha_prev: float, a_prev: float, theta: float, d: float) -> Transform:
    """Link transform ``Rx(alpha_prev) Dx(a_prev) Rz(theta) Dz(d)``."""
    return Transform.from_matrix(_dh_matrices(np.asarray(alpha_prev, dtype=float),
                                              np.asarray(a_prev, dtype=float),
                                              np.asarray(theta, dtype=float),
                                              np.asarray(d, dtype=float)))


def _dh_matrices(alpha, a, theta, d):
    """Vectorized modified-DH link matrices; broadcasts over all inputs."""
    alpha, a, theta, d = np.broadcast_arrays(alpha, a, theta, d)
    ca, sa = np.cos(alpha), np.sin(alpha)
    ct, st = np.cos(theta), np.sin(theta)
    T = np.zeros(theta.shape + (4, 4))
    T[..., 0, 0] = ct
    T[..., 0, 1] = -st
    T[..., 0, 3] = a
    T[..., 1, 0] = st * ca
    T[..., 1, 1] = ct * ca
    T[..., 1, 2] = -sa
    T[..., 1, 3] = -sa * d
    T[..., 2, 0] = st * sa
    T[..., 2, 1] = ct * sa
    T[..., 2, 2] = ca
    T[..., 2, 3] = ca * d
    T[..., 3, 3] = 1.0
    return T


def frames_batch(model: RobotModel, q) -> np.ndarray:
    """Base-frame poses of frames 1..n and the end effector.

    Returns an array of shape ``(..., n + 1, 4, 4)``.
    """
    q = model.check_q(q)
    local = _dh_matrices(model._alpha, model._a, q + model._offset, model._d)
    out = np.empty(q.shape[:-1] + (model.n + 1, 4, 4))
    T = local[..., 0, :, :]
    out[..., 0, :, :] = T
    for i in range(1, model.n):
        T = T @ local[..., i, :, :]
        out[..., i, :, :] = T
    out[..., model.n, :, :] = T @ model.ee_offset.matrix
    return out


def forward_kinematics(model: RobotModel, q) -> list[Transform]:
    """Poses of frames 1..n plus the end effector, all relative to the base."""
    q = model.check_q(q)
    if q.ndim != 1:
        raise ValueError("forward_kinematics takes a single configuration")
    return [Transform.from_matrix(T) for T in frames_batch(model, q)]


def _joint_axes(frames):
    """z-axes and origins of joints 1..n, each (..., n, 3)."""
    joints = frames[..., :-1, :, :]
    return joints[..., :3, 2], joints[..., :3, 3]


def _attached_mask(n: int, frame_index: np.ndarray) -> np.ndarray:
    # joint k (1-based) moves a point attached to frame i iff k <= i
    k = np.arange(1, n + 1)
    return (k[None, :] <= np.asarray(frame_index)[:, None]).astype(float)


def _cross(a, b):
    # np.cross is slow for small batched arrays
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


def points_jacobian_batch(frames, points, frame_index):
    """Jacobians of base-frame points rigidly attached to given frames.

    Parameters
    ----------
    frames : array, shape (..., n + 1, 4, 4)
        Output of :func:`frames_batch`.
    points : array, shape (..., m, 3)
        Base-frame positions of the points.
    frame_index : sequence of int, length m
        1-based frame each point is attached to (``n + 1`` is the end effector).

    Returns
    -------
    jv, jw : arrays, shape (..., m, 3, n)
    """
    z, o = _joint_axes(frames)
    n = z.shape[-2]
    mask = _attached_mask(n, frame_index)                       # (m, n)
    arm = points[..., :, None, :] - o[..., None, :, :]          # (..., m, n, 3)
    jv = _cross(z[..., None, :, :], arm) * mask[..., None]     # (..., m, n, 3)
    jw = np.broadcast_to(z[..., None, :, :], jv.shape) * mask[..., None]
    return np.swapaxes(jv, -1, -2), np.swapaxes(jw, -1, -2)


def point_jacobian(model: RobotModel, q, frame_index: int, point_local=(0.0, 0.0, 0.0)) -> Jacobian:
    """Jacobian of a point fixed in frame ``frame_index`` (1..n+1).

    Column ``k`` of ``jv`` is ``z_k x (p - o_k)`` for every joint ``k`` that
    precedes the point; later columns are zero.
    """
    q = model.check_q(q)
    if not 1 <= frame_index <= model.n + 1:
        raise ValueError(f"frame_index must be in [1, {model.n + 1}], got {frame_index}")
    F = frames_batch(model, q)
    T = F[frame_index - 1]
    p = T[:3, :3] @ np.asarray(point_local, dtype=float) + T[:3, 3]
    jv, jw = points_jacobian_batch(F, p[None, :], [frame_index])
    return Jacobian(jv[0], jw[0])


def control_points_batch(model: RobotModel, q):
    """Frame origins 1..n and the end effector with their Jacobians.

    Returns ``(points, jv)`` with shapes ``(..., n + 1, 3)`` and
    ``(..., n + 1, 3, n)``.
    """
    F = frames_batch(model, q)
    pts = F[..., :3, 3]
    jv, _ = points_jacobian_batch(F, pts, np.arange(1, model.n + 2))
    return pts, jv, F
