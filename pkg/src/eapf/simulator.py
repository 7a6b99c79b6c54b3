"""Closed-loop pipeline: plan, optimize, then track with computed torque."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, fields

import numpy as np

from .controller import Gains, computed_torque
from .dynamics import DynamicsTerms, JointState, fast_terms, forward_dynamics
from .geometry import Scene
from .kinematics import RobotModel, control_points_batch
from .potential_field import EAPF, FieldParams, Waypoints, plan_path
from .trajectory import Limits, Trajectory, optimize_trajectory

log = logging.getLogger(__name__)

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    t_extra: float = 0.5
    arrival_tol: float = 0.05

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.t_extra < 0:
            raise ValueError(f"t_extra must be non-negative, got {self.t_extra}")
        if not self.arrival_tol > 0:
            raise ValueError(f"arrival_tol must be positive, got {self.arrival_tol}")


def _derivative(model, q, qdot, tau, terms=None):
    if terms is None:
        terms = fast_terms(model, q, qdot)
    return qdot, forward_dynamics(model, JointState(q, qdot), tau, terms)


def step(model: RobotModel, state: JointState, tau, dt: float,
         terms: DynamicsTerms | None = None) -> JointState:
    """One classical RK4 step of the arm dynamics with ``tau`` held constant.

    ``terms`` are the dynamics terms at ``state`` if already computed.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    q, v = state.q, state.qdot
    k1q, k1v = _derivative(model, q, v, tau, terms)
    k2q, k2v = _derivative(model, q + 0.5 * dt * k1q, v + 0.5 * dt * k1v, tau)
    k3q, k3v = _derivative(model, q + 0.5 * dt * k2q, v + 0.5 * dt * k2v, tau)
    k4q, k4v = _derivative(model, q + dt * k3q, v + dt * k3v, tau)
    q_new = q + dt / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
    v_new = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    if not (np.all(np.isfinite(q_new)) and np.all(np.isfinite(v_new))):
        raise SimulationError(f"non-finite state after RK4 step from q={q}, qdot={v}, tau={tau}")
    return JointState(q_new, v_new)


@dataclass
class SimLog:
    """Per-step record of a closed-loop run; every array shares the time axis."""

    t: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    tau: np.ndarray
    qdd: np.ndarray
    ee_pos: np.ndarray
    ee_vel: np.ndarray
    dist_goal: np.ndarray
    vel_goal: np.ndarray
    dist_obs: np.ndarray
    vel_obs: np.ndarray
    planner_converged: bool = True
    arrival_tol: float = 0.05

    def __len__(self):
        return len(self.t)

    def csv_header(self) -> list[str]:
        n = self.q.shape[1]
        return (["t"] + [f"q{i}" for i in range(1, n + 1)]
                + [f"qd{i}" for i in range(1, n + 1)]
                + [f"tau{i}" for i in range(1, n + 1)]
                + ["ee_x", "ee_y", "ee_z", "dist_goal", "vel_goal", "dist_obs", "vel_obs"])

    def write_csv(self, path) -> None:
        rows = np.column_stack([self.t, self.q, self.qd, self.tau, self.ee_pos,
                                self.dist_goal, self.vel_goal, self.dist_obs, self.vel_obs])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.csv_header())
            for row in rows:
                w.writerow([_fmt(x) for x in row])


def _fmt(x) -> str:
    x = float(x)
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


@dataclass
class Metrics:
    arrival_time: float | None
    min_clearance: float
    executed_jerk_integral: float
    max_joint_speed: float
    max_joint_acc: float
    converged: bool

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_text(self) -> str:
        lines = []
        for key, value in self.as_dict().items():
            if value is None:
                text = "none"
            elif isinstance(value, bool):
                text = "true" if value else "false"
            else:
                text = _fmt(value)
            lines.append(f"{key} = {text}")
        return "\n".join(lines) + "\n"


def _observe(model, scene, q, qd, ee_goal):
    pts, jv, _ = control_points_batch(model, q)
    pvel = jv @ qd
    ee, ee_v = pts[-1], pvel[-1]
    d, _ = scene.distances(pts)
    if d.size:
        per_point = d.min(axis=1)
        j = int(np.argmin(per_point))
        dist_obs, vel_obs = per_point[j], np.linalg.norm(pvel[j])
    else:
        dist_obs, vel_obs = np.inf, 0.0
    return ee, ee_v, np.linalg.norm(ee - ee_goal), np.linalg.norm(ee_v), dist_obs, vel_obs


def track(model: RobotModel, scene: Scene, traj: Trajectory, q_goal, gains: Gains,
          sim_config: SimConfig = SimConfig(), q0=None, planner_converged: bool = True) -> SimLog:
    """Run computed-torque tracking of ``traj`` until ``T_f + t_extra``."""
    dt = sim_config.dt
    n_steps = int(round((traj.duration + sim_config.t_extra) / dt))
    q0 = traj.evaluate(0.0)[0] if q0 is None else np.asarray(q0, dtype=float)
    state = JointState(q0, np.zeros(model.n))
    ee_goal = control_points_batch(model, q_goal)[0][-1]

    cols = {k: [] for k in ("t", "q", "qd", "tau", "qdd", "ee_pos", "ee_vel",
                            "dist_goal", "vel_goal", "dist_obs", "vel_obs")}
    for k in range(n_steps + 1):
        t = k * dt
        terms = fast_terms(model, state.q, state.qdot)
        tau = computed_torque(model, state, traj.evaluate(t), gains, terms)
        qdd = forward_dynamics(model, state, tau, terms)
        ee, ee_v, dg, vg, do, vo = _observe(model, scene, state.q, state.qdot, ee_goal)
        for key, val in (("t", t), ("q", state.q), ("qd", state.qdot), ("tau", tau),
                         ("qdd", qdd), ("ee_pos", ee), ("ee_vel", ee_v), ("dist_goal", dg),
                         ("vel_goal", vg), ("dist_obs", do), ("vel_obs", vo)):
            cols[key].append(val)
        if k < n_steps:
            state = step(model, state, tau, dt, terms)
    arrays = {k: np.array(v) for k, v in cols.items()}
    return SimLog(**arrays, planner_converged=planner_converged,
                  arrival_tol=sim_config.arrival_tol)


@dataclass
class PipelineResult:
    waypoints: Waypoints
    trajectory: Trajectory
    log: SimLog
    T_f: float = field(default=0.0)

    def __iter__(self):
        return iter((self.waypoints, self.trajectory, self.log))


def run_pipeline(model: RobotModel, scene: Scene, q_start, q_goal,
                 field_params: FieldParams = FieldParams(), mode: str = EAPF,
                 limits: Limits = Limits(), lam: float = 100.0,
                 gains: Gains = Gains(49.0, 11.2), sim_config: SimConfig = SimConfig(),
                 knot_count: int = 10, t_max: float = 10.0) -> PipelineResult:
    """Plan with the potential field, optimize timing, and track in closed loop.

    A planner that does not converge still yields a trajectory to its last
    waypoint; the log carries the flag.
    """
    wp = plan_path(model, scene, q_start, q_goal, field_params, mode)
    if not wp.converged:
        log.warning("%s planner did not reach the goal within %.2f s", mode, field_params.t_max_plan)
    traj, T_f = optimize_trajectory(wp, limits, lam, knot_count, t_max)
    sim = track(model, scene, traj, q_goal, gains, sim_config,
                q0=np.asarray(q_start, dtype=float), planner_converged=wp.converged)
    return PipelineResult(wp, traj, sim, T_f)


def compute_metrics(sim: SimLog, scene: Scene | None = None, model: RobotModel | None = None,
                    q_goal=None, arrival_tol: float | None = None) -> Metrics:
    """Arrival time, clearance, executed jerk and peak joint rates of a run.

    Arrival is the first time after which ``|q - q_goal|`` stays within
    ``arrival_tol``.  Clearance is the signed surface distance, so a
    negative value means a collision.  ``scene`` and ``model`` are used to
    recompute clearances when given; otherwise the logged ones are used.
    """
    if len(sim) == 0:
        raise ValueError("empty simulation log")
    tol = sim.arrival_tol if arrival_tol is None else arrival_tol
    q_goal = sim.q[-1] if q_goal is None else np.asarray(q_goal, dtype=float)

    err = np.linalg.norm(sim.q - q_goal, axis=1)
    outside = np.nonzero(err > tol)[0]
    if len(outside) == 0:
        arrival = float(sim.t[0])
    elif outside[-1] == len(err) - 1:
        arrival = None
    else:
        arrival = float(sim.t[outside[-1] + 1])

    if scene is not None and model is not None:
        pts, _, _ = control_points_batch(model, sim.q)
        if len(scene):
            d = np.stack([o.signed_distances(pts.reshape(-1, 3))[0] for o in scene.obstacles])
            min_clear = float(d.min())
        else:
            min_clear = np.inf
    else:
        min_clear = float(np.min(sim.dist_obs))

    if len(sim) > 1:
        jerk = np.diff(sim.qdd, axis=0) / np.diff(sim.t)[:, None]
        tj = 0.5 * (sim.t[1:] + sim.t[:-1])
        sq = np.sum(jerk ** 2, axis=1)
        jerk_int = float(_trapezoid(sq, tj)) if len(sq) > 1 else float(sq[0] * (sim.t[1] - sim.t[0]))
    else:
        jerk_int = 0.0

    return Metrics(
        arrival_time=arrival,
        min_clearance=min_clear,
        executed_jerk_integral=jerk_int,
        max_joint_speed=float(np.max(np.abs(sim.qd))),
        max_joint_acc=float(np.max(np.abs(sim.qdd))),
        converged=bool(sim.planner_converged and arrival is not None),
    )
