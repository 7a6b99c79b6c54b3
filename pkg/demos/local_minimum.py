"""
Escaping a potential-field trap with a one-link arm
====================================================

A single 0.5 m link swings in the horizontal plane from q = 0 toward q = 2.
A small sphere sits just outside the circle swept by the tip, so the tip
must pass it on the way.  Both planners share the same static potential;
they differ only in the virtual dynamics that roll down it.
"""
import numpy as np

from eapf.geometry import Scene, Sphere
from eapf.kinematics import LinkParams, RobotModel, Transform
from eapf.potential_field import FieldParams, plan_path

L, r, gap, theta = 0.5, 0.05, 0.295, 0.8
link = LinkParams(0.0, 0.0, 0.0, 0.0, 1.0, (L / 2, 0, 0), np.diag([1e-3, L**2 / 12, L**2 / 12]))
arm = RobotModel((link,), (0.0, 0.0, -9.81), Transform(np.eye(3), (L, 0, 0)), "one_link")
scene = Scene((Sphere((L + r + gap) * np.array([np.cos(theta), np.sin(theta), 0.0]), r),))

params = FieldParams(damping=3.0, goal_fade=1.0, kappa_max=8.0, t_max_plan=10.0)

# Plain APF: attraction and repulsion balance short of the goal.
apf = plan_path(arm, scene, [0.0], [2.0], params, "apf")
k = np.searchsorted(apf.times, 5.0)
print(f"APF   after 5 s: q = {apf.path[k, 0]:.3f} rad, speed {abs(apf.log.qdot[k, 0]):.1e} rad/s")
print(f"APF   converged within {params.t_max_plan} s: {apf.converged}")

# E-APF: the acceleration-coupled terms act like extra inertia, so less
# energy is burned by damping and the arm carries through the barrier.
eapf = plan_path(arm, scene, [0.0], [2.0], params, "eapf")
print(f"E-APF converged at t = {eapf.times[-1]:.2f} s, q = {eapf.path[-1, 0]:.3f} rad")
print(f"E-APF closest approach to the sphere: {eapf.log.clearance.min():.3f} m")

# The APF arm parks where the joint-space forces cancel: that point is
# a local minimum of the shared potential, not the goal.
print(f"\nAPF rest point {apf.path[-1, 0]:.3f} rad, goal 2.000 rad")
