"""Classical and energy-based artificial potential fields.

Attraction acts in joint space on ``r_e = q - q_goal``.  Repulsion acts in
Cartesian space at the control points (joint-frame origins and the end
effector) and is mapped to joint torques through the point Jacobians.

Classical APF force on a control point at surface distance ``r``::

    -k_a r_e + k_r (1/r - 1/rho0) / r**2 * dir

The energy-based field adds terms from the kinetic potentials
``K_a = gamma k_a v_e**2 / 2`` and ``K_r = gamma k_r (1/v_o - 1/mu_o)**2 / 2``::

    F_a = gamma k_a a_e - k_a r_e
    F_r = gamma k_r (3/v_o - 2/mu_o) a_o / v_o**3 + k_r (1/r - 1/rho0) / r**2
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .geometry import Scene
from .kinematics import RobotModel, control_points_batch

APF = "apf"
EAPF = "eapf"
MODES = (APF, EAPF)


class PlannerError(RuntimeError):
    """Raised when the virtual dynamics produce non-finite values."""


@dataclass(frozen=True)
class FieldParams:
    k_a: float = 5.0
    k_r: float = 10.0
    rho0: float = 0.4
    gamma: float = 0.8
    mu_base: float = 1.0
    eps_v: float = 1e-3
    eps_r: float = 1e-3
    damping: float = 0.5
    dt_plan: float = 1e-3
    t_max_plan: float = 10.0
    goal_tol: float = 0.05
    goal_fade: float = 0.0
    kappa_max: float = float("inf")

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, float(getattr(self, f.name)))
        for name in ("k_a", "k_r", "rho0", "mu_base", "eps_v", "eps_r",
                     "dt_plan", "t_max_plan", "goal_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.damping < 0:
            raise ValueError(f"damping must be non-negative, got {self.damping}")
        if not self.kappa_max > 0:
            raise ValueError(f"kappa_max must be positive, got {self.kappa_max}")
        if self.goal_fade < 0:
            raise ValueError(f"goal_fade must be non-negative, got {self.goal_fade}")


# ---------------------------------------------------------------------------
# scalar laws
# ---------------------------------------------------------------------------

def attractive_potential(r_e, k_a: float) -> float:
    r_e = np.asarray(r_e, dtype=float)
    return 0.5 * k_a * float(r_e @ r_e) if r_e.ndim else 0.5 * k_a * float(r_e) ** 2


def repulsive_potential(r_o: float, k_r: float, rho0: float) -> float:
    if r_o >= rho0:
        return 0.0
    return 0.5 * k_r * (1.0 / r_o - 1.0 / rho0) ** 2


def repulsive_position_term(r_o: float, params: FieldParams) -> float:
    """``k_r (1/r - 1/rho0) / r**2`` inside the influence region, else 0."""
    if r_o >= params.rho0:
        return 0.0
    return params.k_r * (1.0 / r_o - 1.0 / params.rho0) * (1.0 / r_o) ** 2


def repulsive_kinetic_coefficient(v_o: float, mu_o: float, params: FieldParams) -> float:
    """``gamma k_r (3/v - 2/mu) / v**3``; multiplies the speed rate ``a_o``."""
    return params.gamma * params.k_r * (3.0 / v_o - 2.0 / mu_o) / v_o ** 3


def repulsive_kinetic_term(v_o: float, a_o: float, mu_o: float, params: FieldParams) -> float:
    return repulsive_kinetic_coefficient(v_o, mu_o, params) * a_o


def mu_o_schedule(r_o: float, params: FieldParams) -> float:
    """Velocity influence bound, shrinking linearly near the obstacle."""
    return params.mu_base * min(max(r_o / params.rho0, 0.1), 1.0)


def kinetic_active(r_o: float, v_o: float, mu_o: float, rdot_o: float, params: FieldParams) -> bool:
    return r_o < params.rho0 and v_o < mu_o and rdot_o < 0.0


# ---------------------------------------------------------------------------
# force evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RepulsionTerm:
    """One (control point, obstacle) pair with its point Jacobian."""

    r_o: float
    dir_o: np.ndarray
    jv: np.ndarray | None = None
    v_o: float = 0.0
    rdot_o: float = 0.0
    a_o: float = 0.0
    point: int = -1
    obstacle: int = -1


@dataclass(frozen=True)
class FieldSample:
    r_e: np.ndarray
    v_e: np.ndarray
    a_e: np.ndarray
    terms: tuple = field(default_factory=tuple)


def _map(term: RepulsionTerm, f_cart: np.ndarray) -> np.ndarray:
    return f_cart if term.jv is None else term.jv.T @ f_cart


def goal_fade_factor(r_e, params: FieldParams) -> tuple[float, np.ndarray]:
    """Scale ``f`` on the repulsive potential and its joint-space gradient.

    ``f = min(1, |r_e| / goal_fade)**2`` so repulsion vanishes at the goal
    configuration; ``goal_fade = 0`` leaves it untouched (``f = 1``).
    """
    r_e = np.asarray(r_e, dtype=float)
    rho_s = params.goal_fade
    if rho_s <= 0.0 or r_e @ r_e >= rho_s * rho_s:
        return 1.0, np.zeros_like(r_e)
    return float(r_e @ r_e) / rho_s ** 2, 2.0 * r_e / rho_s ** 2


def static_repulsion(r_e, terms, params: FieldParams) -> np.ndarray:
    """Joint-space force of the position-dependent repulsive potentials."""
    r_e = np.asarray(r_e, dtype=float)
    f, grad = goal_fade_factor(r_e, params)
    F = np.zeros_like(r_e)
    U = 0.0
    for term in terms:
        if not isinstance(term, RepulsionTerm):
            term = RepulsionTerm(*term)
        mag = repulsive_position_term(term.r_o, params)
        if mag:
            F = F + _map(term, mag * np.asarray(term.dir_o))
            U += repulsive_potential(term.r_o, params.k_r, params.rho0)
    return f * F - U * grad


def apf_force(r_e, control_point_terms, params: FieldParams) -> np.ndarray:
    """Classical APF generalized force.

    ``control_point_terms`` holds :class:`RepulsionTerm` entries (or
    ``(r_o, dir_o, jv)`` tuples).  Terms at or beyond ``rho0`` add nothing.
    """
    return -params.k_a * np.asarray(r_e, dtype=float) + static_repulsion(r_e, control_point_terms, params)


def eapf_attractive(r_e, a_e, params: FieldParams) -> np.ndarray:
    return (params.gamma * params.k_a * np.asarray(a_e, dtype=float)
            - params.k_a * np.asarray(r_e, dtype=float))


def eapf_repulsive(r_o, dir_o, v_o, a_o, mu_o, params: FieldParams,
                   approaching: bool = True) -> np.ndarray:
    """Cartesian E-APF repulsion on one control point.

    The position term is active inside ``rho0``; the kinetic term also
    needs ``v_o < mu_o`` and an approaching point.
    """
    mag = repulsive_position_term(r_o, params)
    if r_o < params.rho0 and v_o < mu_o and approaching:
        mag += repulsive_kinetic_term(v_o, a_o, mu_o, params)
    return mag * np.asarray(dir_o, dtype=float)


def eapf_force(sample: FieldSample, params: FieldParams) -> np.ndarray:
    """Total E-APF generalized force: joint-space attraction plus J^T repulsion."""
    F = eapf_attractive(sample.r_e, sample.a_e, params)
    for t in sample.terms:
        mu = mu_o_schedule(t.r_o, params)
        F = F + _map(t, eapf_repulsive(t.r_o, t.dir_o, t.v_o, t.a_o, mu, params,
                                       approaching=t.rdot_o < 0.0))
    return F


def repulsion_terms(model: RobotModel, scene: Scene, q, qdot, params: FieldParams):
    """Evaluate every (control point, obstacle) pair inside ``rho0``.

    ``v_o`` is the approach speed ``-dr_o/dt`` (floored at ``eps_v``).
    Returns ``(terms, clearance, points, jacobians, point_velocities)``;
    ``clearance`` is the signed minimum surface distance over all control
    points (inf for an empty scene).
    """
    pts, jv, _ = control_points_batch(model, q)
    dist, dirs = scene.distances(pts)
    pvel = jv @ np.asarray(qdot, dtype=float)
    terms = []
    for j, k in zip(*np.nonzero(dist < params.rho0)):
        r = max(dist[j, k], params.eps_r)
        rdot = float(dirs[j, k] @ pvel[j])
        terms.append(RepulsionTerm(r_o=r, dir_o=dirs[j, k], jv=jv[j],
                                   v_o=max(-rdot, params.eps_v), rdot_o=rdot,
                                   point=int(j), obstacle=int(k)))
    clear = float(dist.min()) if dist.size else np.inf
    return terms, clear, pts, jv, pvel


# ---------------------------------------------------------------------------
# planner
# ---------------------------------------------------------------------------

@dataclass
class PlannerLog:
    qdot: np.ndarray
    qddot: np.ndarray
    clearance: np.ndarray
    kinetic_active: np.ndarray


@dataclass
class Waypoints:
    path: np.ndarray
    times: np.ndarray
    converged: bool
    log: PlannerLog | None = None
    mode: str = EAPF

    def __post_init__(self):
        self.path = np.atleast_2d(np.asarray(self.path, dtype=float))
        self.times = np.asarray(self.times, dtype=float)
        if len(self.path) == 0:
            raise ValueError("waypoint path is empty")
        if len(self.times) != len(self.path):
            raise ValueError("times and path lengths differ")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("waypoint times must be strictly increasing")

    def __len__(self):
        return len(self.path)


def approach_curvature(scene: Scene, terms, pts, pvel, h: float = 1e-3) -> np.ndarray:
    """``pdot^T H pdot`` for each term, ``H`` being the Hessian of the distance.

    Together with ``dir . (J qdd + Jdot qd)`` this gives ``d2 r_o / dt2``.
    Uses a central difference of the distance along the point velocity.
    """
    out = np.zeros(len(terms))
    for i, t in enumerate(terms):
        v = pvel[t.point]
        speed = np.linalg.norm(v)
        if speed == 0.0 or t.obstacle < 0:
            continue
        step = h / speed
        p = pts[t.point]
        probe = np.array([p + step * v, p, p - step * v])
        d, _ = scene.obstacles[t.obstacle].signed_distances(probe)
        out[i] = (d[0] - 2.0 * d[1] + d[2]) / step ** 2
    return out


def _eapf_acceleration(r_e, qdot, terms, jdot_qdot, params: FieldParams, curvature=None):
    """Solve the E-APF virtual dynamics for the current acceleration.

    The kinetic terms depend on the acceleration they produce, so they are
    solved together with it.  ``a_e`` is the goal's acceleration seen from
    the robot (``-qdd``), which turns the attractive kinetic potential into
    added inertia ``alpha = 1 + gamma k_a``.

    For an approaching pair ``v_o = -dr_o/dt`` and ``a_o = -w . qdd - e``
    with ``w = J^T dir``.  The kinetic repulsion ``z = kappa * max(a_o, 0)``
    only resists speeding up toward an obstacle, so it never pulls a point
    in and always removes energy.  With ``qdd = (b + W z) / alpha`` this is
    a small complementarity problem with an SPD matrix, solved by active
    set iteration.

    Returns ``(qdd, a_o, active)``.
    """
    alpha = 1.0 + params.gamma * params.k_a
    b = -params.k_a * r_e - params.damping * qdot + static_repulsion(r_e, terms, params)
    qdd = b / alpha
    a_o = np.zeros(len(terms))

    cand, W, kap, e = [], [], [], []
    for i, t in enumerate(terms):
        mu = mu_o_schedule(t.r_o, params)
        if not kinetic_active(t.r_o, t.v_o, mu, t.rdot_o, params):
            continue
        cand.append(i)
        W.append(t.jv.T @ t.dir_o)
        kap.append(min(repulsive_kinetic_coefficient(t.v_o, mu, params), params.kappa_max))
        curv = 0.0 if curvature is None else curvature[i]
        e.append(t.dir_o @ jdot_qdot[t.point] + curv)
    if not cand:
        return qdd, a_o, []

    W = np.array(W).T
    kap = np.array(kap)
    e = np.array(e)
    m = len(cand)
    z = np.zeros(m)
    act = (-(W.T @ qdd) - e) > 0.0
    for _ in range(2 * m + 2):
        z = np.zeros(m)
        if act.any():
            Wa = W[:, act]
            A = np.diag(alpha / kap[act]) + Wa.T @ Wa
            rhs = -(Wa.T @ b) - alpha * e[act]
            za = np.linalg.lstsq(A, rhs, rcond=None)[0]
            if np.any(za < 0.0):
                # drop the most negative and retry
                idx = np.flatnonzero(act)[np.argmin(za)]
                act[idx] = False
                continue
            z[act] = za
        qdd = (b + W @ z) / alpha
        rate = -(W.T @ qdd) - e
        viol = (~act) & (rate > 1e-12)
        if not viol.any():
            break
        act[np.flatnonzero(viol)[np.argmax(rate[viol])]] = True
    a_o[cand] = np.maximum(-(W.T @ qdd) - e, 0.0)
    active = [cand[j] for j in np.flatnonzero(z > 0.0)]
    return qdd, a_o, active


def plan_path(model: RobotModel, scene: Scene, q_start, q_goal,
              params: FieldParams | None = None, mode: str = EAPF) -> Waypoints:
    """Integrate the virtual field dynamics from ``q_start`` toward ``q_goal``.

    The virtual system has unit inertia and viscous damping; it is stepped
    with semi-implicit Euler at ``dt_plan``.  Planning stops once
    ``|q - q_goal| <= goal_tol`` (the goal is then appended as the final
    waypoint) or when ``t_max_plan`` is exceeded.
    """
    params = params or FieldParams()
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    q = model.check_q(q_start, "q_start").astype(float).copy()
    q_goal = model.check_q(q_goal, "q_goal").astype(float)
    n, dt = model.n, params.dt_plan

    qdot = np.zeros(n)
    path, times, qdots, qdds, clears, kin = [q.copy()], [0.0], [qdot.copy()], [np.zeros(n)], [], []
    terms, clear, pts, jv, pvel = repulsion_terms(model, scene, q, qdot, params)
    clears.append(clear)
    kin.append(False)

    converged = bool(np.linalg.norm(q - q_goal) <= params.goal_tol)
    jv_prev = None
    t = 0.0
    n_steps = int(np.floor(params.t_max_plan / dt + 1e-9))
    step = 0
    while not converged and step < n_steps:
        r_e = q - q_goal
        if mode == APF:
            qdd = apf_force(r_e, terms, params) - params.damping * qdot
            active = []
        else:
            if jv_prev is None:
                jdot_qdot = np.zeros((len(jv), 3))
            else:
                jdot_qdot = (jv - jv_prev) @ qdot / dt
            curv = approach_curvature(scene, terms, pts, pvel)
            qdd, _, active = _eapf_acceleration(r_e, qdot, terms, jdot_qdot, params, curv)
        if not np.all(np.isfinite(qdd)):
            raise PlannerError(f"non-finite field force at t={t:.4f} s; check field parameters")

        qdot = qdot + dt * qdd
        q = q + dt * qdot
        step += 1
        t = step * dt
        jv_prev = jv
        terms, clear, pts, jv, pvel = repulsion_terms(model, scene, q, qdot, params)

        path.append(q.copy())
        times.append(t)
        qdots.append(qdot.copy())
        qdds.append(qdd)
        clears.append(clear)
        kin.append(bool(active))
        converged = bool(np.linalg.norm(q - q_goal) <= params.goal_tol)

    if converged and not np.array_equal(path[-1], q_goal):
        path.append(q_goal.copy())
        times.append(times[-1] + dt)
        qdots.append(np.zeros(n))
        qdds.append(np.zeros(n))
        clears.append(_clearance_at(model, scene, q_goal))
        kin.append(False)

    log = PlannerLog(np.array(qdots), np.array(qdds), np.array(clears), np.array(kin))
    return Waypoints(np.array(path), np.array(times), converged, log, mode)


def _clearance_at(model, scene, q):
    pts, _, _ = control_points_batch(model, q)
    d, _ = scene.distances(pts)
    return float(d.min()) if d.size else np.inf
