"""Manipulator motion pipeline: kinematics and dynamics, classical and
energy-based potential field planning, minimum-jerk timing, and
computed-torque tracking."""
from .config import ConfigError, ScenarioConfig, load_robot, parse_scenario
from .controller import Gains, computed_torque
from .dynamics import (DynamicsTerms, JointState, coriolis_matrix, dynamics_terms,
                       forward_dynamics, gravity_vector, mass_matrix)
from .geometry import Cylinder, Scene, Sphere, surface_distance
from .kinematics import (Jacobian, LinkParams, RobotModel, Transform, dh_transform,
                         forward_kinematics, point_jacobian)
from .potential_field import (APF, EAPF, FieldParams, PlannerError, Waypoints, apf_force,
                              eapf_force, plan_path)
from .simulator import Metrics, SimConfig, SimLog, compute_metrics, run_pipeline, step, track
from .trajectory import Limits, Trajectory, constraint_report, fit_min_jerk, optimize_trajectory

__version__ = "0.1.0"
