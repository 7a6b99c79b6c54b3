"""Euler-Lagrange rigid-body dynamics: M(q) qdd + C(q, qd) qd + G(q) = tau.

The inertia matrix is assembled from per-link center-of-mass Jacobians.
The Coriolis matrix uses Christoffel symbols of the first kind with the
partial derivatives of M taken by central differences, which keeps the
``Mdot - 2C`` skew-symmetry exact up to the difference error.

For time stepping, the bias ``C qd + G`` is also available exactly from a
recursive Newton-Euler pass, which is much cheaper than building C.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import RobotModel, _cross, frames_batch, points_jacobian_batch

#: central-difference step for dM/dq
FD_STEP = 1e-6


@dataclass(frozen=True)
class JointState:
    q: np.ndarray
    qdot: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float)
        qd = np.array(self.qdot, dtype=float)
        if q.shape != qd.shape or q.ndim != 1:
            raise ValueError(f"q and qdot must be equal-length vectors, got {q.shape} and {qd.shape}")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qdot", qd)


@dataclass(frozen=True)
class DynamicsTerms:
    """``m``, ``c``, ``g`` at one state; ``h`` caches ``C qd + G`` if known.

    Terms built by :func:`fast_terms` carry only ``m`` and ``h``.
    """

    m: np.ndarray
    c: np.ndarray | None
    g: np.ndarray | None
    h: np.ndarray | None = None

    def bias(self, qdot) -> np.ndarray:
        if self.h is not None:
            return self.h
        return self.c @ qdot + self.g


def _link_quantities(model: RobotModel, q):
    """COM positions, COM Jacobians and base-frame inertias per link."""
    F = frames_batch(model, q)
    R = F[..., :-1, :3, :3]
    pc = np.einsum("...lij,lj->...li", R, model.coms) + F[..., :-1, :3, 3]
    jv, jw = points_jacobian_batch(F, pc, np.arange(1, model.n + 1))
    Ib = R @ model.inertias @ np.swapaxes(R, -1, -2)
    return pc, jv, jw, Ib


def _mass_from(model, jv, jw, Ib):
    Mt = np.einsum("l,...lxk,...lxj->...kj", model.masses, jv, jv)
    Mr = np.einsum("...lxk,...lxy,...lyj->...kj", jw, Ib, jw)
    M = Mt + Mr
    return 0.5 * (M + np.swapaxes(M, -1, -2))


def mass_matrix(model: RobotModel, q) -> np.ndarray:
    """Configuration-dependent inertia matrix, symmetric positive definite."""
    q = model.check_q(q)
    _, jv, jw, Ib = _link_quantities(model, q)
    return _mass_from(model, jv, jw, Ib)


def _gravity_from(model, jv):
    return -np.einsum("l,...lxk,x->...k", model.masses, jv, model.gravity)


def gravity_vector(model: RobotModel, q) -> np.ndarray:
    """Gradient of the gravitational potential, ``sum_i J_vi^T (-m_i g)``."""
    q = model.check_q(q)
    _, jv, _, _ = _link_quantities(model, q)
    return _gravity_from(model, jv)


def mass_matrix_partials(model: RobotModel, q, h: float = FD_STEP) -> np.ndarray:
    """``dM[k] = dM/dq_k`` by central differences, shape (n, n, n)."""
    q = model.check_q(q)
    n = model.n
    E = h * np.eye(n)
    Q = np.concatenate([q + E, q - E])
    M = mass_matrix(model, Q)
    return (M[:n] - M[n:]) / (2.0 * h)


def _christoffel_c(dM, qdot):
    # C_ij = sum_k 1/2 (dM_ij/dq_k + dM_ik/dq_j - dM_jk/dq_i) qd_k
    a = np.einsum("kij,k->ij", dM, qdot)
    b = np.einsum("jik,k->ij", dM, qdot)
    c = np.einsum("ijk,k->ij", dM, qdot)
    return 0.5 * (a + b - c)


def coriolis_matrix(model: RobotModel, q, qdot) -> np.ndarray:
    q = model.check_q(q)
    qdot = model.check_q(qdot, "qdot")
    return _christoffel_c(mass_matrix_partials(model, q), qdot)


def dynamics_terms(model: RobotModel, q, qdot) -> DynamicsTerms:
    """M, C and G at one state from a single stacked kinematics pass."""
    q = model.check_q(q)
    qdot = model.check_q(qdot, "qdot")
    n = model.n
    E = FD_STEP * np.eye(n)
    Q = np.concatenate([q[None, :], q + E, q - E])
    _, jv, jw, Ib = _link_quantities(model, Q)
    M = _mass_from(model, jv, jw, Ib)
    dM = (M[1:n + 1] - M[n + 1:]) / (2.0 * FD_STEP)
    return DynamicsTerms(M[0], _christoffel_c(dM, qdot), _gravity_from(model, jv[0]))


def forward_dynamics(model: RobotModel, state: JointState, tau, terms: DynamicsTerms | None = None) -> np.ndarray:
    """Joint accelerations ``M^-1 (tau - C qd - G)``.

    ``terms`` may be passed when M, C, G at ``state`` are already known.
    """
    tau = model.check_q(tau, "tau")
    if terms is None:
        terms = dynamics_terms(model, state.q, state.qdot)
    rhs = tau - terms.bias(state.qdot)
    try:
        L = np.linalg.cholesky(terms.m)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "inertia matrix is not positive definite; check the robot parameters") from exc
    y = np.linalg.solve(L, rhs)
    return np.linalg.solve(L.T, y)


def _rnea(model, F, qdot, qddot, gravity=True):
    """Newton-Euler torques in base coordinates from precomputed frames.

    With static base all recursions are prefix or suffix sums over links,
    so the pass is written with cumulative sums instead of a loop.
    """
    n = model.n
    R = F[:n, :3, :3]
    o = F[:n, :3, 3]
    z = R[:, :, 2]
    c = np.einsum("lij,lj->li", R, model.coms) + o
    Iw = R @ model.inertias @ np.swapaxes(R, -1, -2)

    wz = qdot[:, None] * z
    w = np.cumsum(wz, axis=0)
    w_prev = np.vstack([np.zeros(3), w[:-1]])
    wd = np.cumsum(qddot[:, None] * z + _cross(w_prev, wz), axis=0)
    wd_prev = np.vstack([np.zeros(3), wd[:-1]])

    d = np.diff(np.vstack([np.zeros(3), o]), axis=0)
    a0 = -model.gravity if gravity else np.zeros(3)
    a = a0 + np.cumsum(_cross(wd_prev, d) + _cross(w_prev, _cross(w_prev, d)), axis=0)
    rc = c - o
    ac = a + _cross(wd, rc) + _cross(w, _cross(w, rc))
    fc = model.masses[:, None] * ac
    nc = np.einsum("lij,lj->li", Iw, wd) + _cross(w, np.einsum("lij,lj->li", Iw, w))

    # suffix sums: force and moment about o_i of links i..n
    f = np.cumsum(fc[::-1], axis=0)[::-1]
    m = np.cumsum((nc + _cross(c, fc))[::-1], axis=0)[::-1] - _cross(o, f)
    return np.einsum("li,li->l", m, z)


def inverse_dynamics(model: RobotModel, q, qdot, qddot) -> np.ndarray:
    """Joint torques ``M qdd + C qd + G`` by recursive Newton-Euler."""
    q = model.check_q(q)
    F = frames_batch(model, q)
    return _rnea(model, F, model.check_q(qdot, "qdot"), model.check_q(qddot, "qddot"))


def fast_terms(model: RobotModel, q, qdot) -> DynamicsTerms:
    """``M`` and the bias ``C qd + G`` from one kinematics pass.

    Gives the same dynamics as :func:`dynamics_terms` without forming C.
    """
    q = model.check_q(q)
    qdot = model.check_q(qdot, "qdot")
    F = frames_batch(model, q)
    R = F[:-1, :3, :3]
    pc = np.einsum("lij,lj->li", R, model.coms) + F[:-1, :3, 3]
    jv, jw = points_jacobian_batch(F, pc, np.arange(1, model.n + 1))
    Ib = R @ model.inertias @ np.swapaxes(R, -1, -2)
    M = _mass_from(model, jv, jw, Ib)
    h = _rnea(model, F, qdot, np.zeros(model.n))
    return DynamicsTerms(M, None, None, h)


def kinetic_energy(model: RobotModel, state: JointState) -> float:
    M = mass_matrix(model, state.q)
    return 0.5 * float(state.qdot @ M @ state.qdot)


def potential_energy(model: RobotModel, q) -> float:
    """Gravitational potential ``-sum_i m_i g^T p_ci`` (g points down)."""
    q = model.check_q(q)
    pc, _, _, _ = _link_quantities(model, q)
    return -float(np.einsum("l,lx,x->", model.masses, pc, model.gravity))


def total_energy(model: RobotModel, state: JointState) -> float:
    return kinetic_energy(model, state) + potential_energy(model, state.q)


def link_velocities(model: RobotModel, state: JointState):
    """Per-link COM linear velocity and angular velocity in the base frame."""
    _, jv, jw, _ = _link_quantities(model, state.q)
    return jv @ state.qdot, jw @ state.qdot
