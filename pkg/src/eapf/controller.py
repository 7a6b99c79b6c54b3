"""Computed-torque tracking control."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import DynamicsTerms, JointState, fast_terms
from .kinematics import RobotModel


@dataclass(frozen=True)
class Gains:
    """PD gains; scalars are broadcast to every joint."""

    kp: np.ndarray | float
    kd: np.ndarray | float

    def __post_init__(self):
        kp = np.atleast_1d(np.asarray(self.kp, dtype=float))
        kd = np.atleast_1d(np.asarray(self.kd, dtype=float))
        if np.any(kp <= 0) or np.any(kd <= 0):
            raise ValueError("gains must be positive")
        object.__setattr__(self, "kp", kp)
        object.__setattr__(self, "kd", kd)


def computed_torque(model: RobotModel, state: JointState, desired, gains: Gains,
                    terms: DynamicsTerms | None = None, tau_limit=None) -> np.ndarray:
    """``M (qdd_d + kp e + kd edot) + C qd + G`` with ``e = q_d - q``.

    ``desired`` is ``(q_d, qdot_d, qddot_d)``.  ``tau_limit`` optionally
    clips each joint torque to ``+/- tau_limit``; it is off by default.
    """
    q_d, qd_d, qdd_d = (model.check_q(x, name) for x, name in
                        zip(desired, ("q_d", "qdot_d", "qddot_d")))
    if terms is None:
        terms = fast_terms(model, state.q, state.qdot)
    v = qdd_d + gains.kp * (q_d - state.q) + gains.kd * (qd_d - state.qdot)
    tau = terms.m @ v + terms.bias(state.qdot)
    if tau_limit is not None:
        tau = np.clip(tau, -np.asarray(tau_limit), np.asarray(tau_limit))
    return tau
