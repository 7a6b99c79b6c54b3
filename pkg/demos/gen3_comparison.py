"""
APF versus E-APF on the bundled 7-DOF scene
===========================================

Runs the whole pipeline (plan, time-parameterize, track) for both planners
on the Gen3 scene shipped with the package and prints the metric table.
Takes about a minute.
"""
import numpy as np

from eapf.config import bundled_scenario, parse_scenario
from eapf.simulator import SimConfig, compute_metrics, run_pipeline

cfg = parse_scenario(bundled_scenario())
model, scene = cfg.robot(), cfg.scene()
print(f"{model.name}: {model.n} joints, {len(scene.obstacles)} obstacles")

rows = {}
for mode in ("apf", "eapf"):
    res = run_pipeline(model, scene, cfg.q_start, cfg.q_goal, cfg.field, mode,
                       lam=cfg.optimizer.lam, gains=cfg.gains_for(mode),
                       sim_config=cfg.sim, limits=cfg.limits(),
                       knot_count=cfg.optimizer.knot_count, t_max=cfg.optimizer.t_max)
    m = compute_metrics(res.log, scene, model, cfg.q_goal, cfg.sim.arrival_tol)
    path_len = np.sum(np.linalg.norm(np.diff(res.waypoints.path, axis=0), axis=1))
    rows[mode] = (m, res.T_f, path_len)

print("\nmode   path [rad]  T_f [s]  arrival [s]  clearance [m]  jerk")
for mode, (m, T_f, length) in rows.items():
    print(f"{mode:5}  {length:10.2f}  {T_f:7.3f}  {m.arrival_time:11.3f}  "
          f"{m.min_clearance:13.4f}  {m.executed_jerk_integral:.4g}")

# The planned path length drives everything downstream: the spline duration
# is set by the acceleration limit, which grows with the distance covered.
