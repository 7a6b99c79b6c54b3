"""
Picking a duration for a minimum-jerk spline
============================================

The optimizer trades the jerk integral against lambda * T.  For a single
rest-to-rest quintic the jerk integral is 720 dq^2 / T^5, so the optimum
is T = (3600 dq^2 / lambda)^(1/6).  The script checks that against the
golden-section search and shows how the velocity and acceleration limits
take over once lambda gets large.
"""
import numpy as np

from eapf.potential_field import Waypoints
from eapf.trajectory import Limits, constraint_report, jerk_cost, optimize_trajectory

dq = 1.0
wp = Waypoints(np.array([[0.0], [dq]]), np.array([0.0, 1.0]), True)

print(" lambda    T_f (search)  T_f (closed form)  jerk      max|v|   max|a|")
for lam in (10.0, 100.0, 3600.0, 1e5, 1e7):
    traj, T_f = optimize_trajectory(wp, Limits(), lam=lam)
    rep = constraint_report(traj, Limits())
    T_star = (3600 * dq**2 / lam) ** (1 / 6)
    print(f"{lam:8.4g}  {T_f:12.4f}  {T_star:17.4f}  {jerk_cost(traj):9.3g}  "
          f"{rep.max_vel:6.3f}  {rep.max_acc:7.3f}")

# With lambda = 1e7 the unconstrained optimum would need |a| > 50 rad/s^2;
# the search is clipped at the shortest feasible duration instead.
# That duration is sqrt(10 / sqrt(3) * dq / 50) for the quintic profile;
# the search brackets it from above to within its 1 ms bisection tolerance.
print(f"\nacceleration-limited duration: {np.sqrt(10 / np.sqrt(3) * dq / 50):.4f} s")
