"""Command line entry point: ``eapf run | compare | export-trajectory``.

Exit codes: 0 success, 1 planner failure, 2 collision, 3 config error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ScenarioConfig, bundled_scenario, parse_scenario
from .geometry import clearance
from .kinematics import control_points_batch
from .potential_field import MODES, PlannerError, Waypoints, plan_path
from .simulator import Metrics, SimulationError, compute_metrics, run_pipeline
from .trajectory import constraint_report, optimize_trajectory, write_trajectory_csv

EXIT_OK = 0
EXIT_PLANNER = 1
EXIT_COLLISION = 2
EXIT_CONFIG = 3

COMPARISON_HEADER = ["mode", "exit_code", "converged", "arrival_time", "min_clearance",
                     "jerk_integral", "max_joint_speed", "max_joint_acc"]

log = logging.getLogger("eapf")


def write_waypoints_csv(wp: Waypoints, path) -> None:
    n = wp.path.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"q{i}" for i in range(1, n + 1)])
        for t, q in zip(wp.times, wp.path):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in q])


def _fmt(x) -> str:
    if x is None:
        return "none"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    x = float(x)
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _start_collision(cfg: ScenarioConfig, model, scene) -> float:
    pts, _, _ = control_points_batch(model, np.array(cfg.q_start))
    return float(np.min(clearance(scene, pts)))


def execute(cfg: ScenarioConfig, mode: str, out_dir) -> tuple[int, Metrics | None]:
    """Run one mode end to end, write its four output files, return the exit code."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model, scene = cfg.robot(), cfg.scene()

    start_clear = _start_collision(cfg, model, scene)
    if start_clear <= 0.0:
        log.error("%s: start configuration collides with an obstacle (clearance %.4f m)",
                  mode, start_clear)
        return EXIT_COLLISION, None

    try:
        res = run_pipeline(model, scene, np.array(cfg.q_start), np.array(cfg.q_goal),
                           cfg.field, mode, cfg.limits(), cfg.optimizer.lam,
                           cfg.gains_for(mode), cfg.sim, cfg.optimizer.knot_count,
                           cfg.optimizer.t_max)
    except (PlannerError, SimulationError) as exc:
        log.error("%s: %s", mode, exc)
        return EXIT_PLANNER, None

    metrics = compute_metrics(res.log, scene, model, np.array(cfg.q_goal))
    write_waypoints_csv(res.waypoints, out / "waypoints.csv")
    # sampled at the control rate: exactly the reference the tracker sees
    write_trajectory_csv(res.trajectory, out / "trajectory.csv", 1.0 / cfg.sim.dt)
    res.log.write_csv(out / "simlog.csv")
    (out / "metrics.txt").write_text(metrics.to_text())

    report = constraint_report(res.trajectory, cfg.limits())
    if not report.feasible:
        log.warning("%s: trajectory exceeds limits (max |qd| %.3f, max |qdd| %.3f)",
                    mode, report.max_vel, report.max_acc)

    code = EXIT_OK
    if not metrics.converged:
        log.error("%s: run did not converge (planner converged: %s, arrival: %s)",
                  mode, res.waypoints.converged, _fmt(metrics.arrival_time))
        code = EXIT_PLANNER
    if metrics.min_clearance <= 0.0:
        log.error("%s: collision, minimum clearance %.4f m", mode, metrics.min_clearance)
        code = EXIT_COLLISION
    return code, metrics


def cmd_run(scenario, mode: str, out_dir) -> int:
    cfg = parse_scenario(scenario)
    code, metrics = execute(cfg, mode, out_dir)
    if metrics is not None:
        print(metrics.to_text(), end="")
    return code


def cmd_compare(scenario, out_dir) -> int:
    """Run both modes with their own gains and write ``comparison.csv``."""
    cfg = parse_scenario(scenario)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows, worst = [], EXIT_OK
    for mode in MODES:
        code, m = execute(cfg, mode, out / mode)
        worst = max(worst, code)
        if m is None:
            rows.append([mode, str(code)] + ["none"] * (len(COMPARISON_HEADER) - 2))
        else:
            rows.append([mode, str(code), _fmt(m.converged), _fmt(m.arrival_time),
                         _fmt(m.min_clearance), _fmt(m.executed_jerk_integral),
                         _fmt(m.max_joint_speed), _fmt(m.max_joint_acc)])
    with open(out / "comparison.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPARISON_HEADER)
        w.writerows(rows)
    for row in rows:
        print(",".join(row))
    return worst


def cmd_export_trajectory(scenario, mode: str, out_path, rate: float = 100.0) -> int:
    """Plan and optimize only, then write the sampled reference trajectory."""
    cfg = parse_scenario(scenario)
    out = Path(out_path)
    if out.suffix != ".csv":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "trajectory.csv"
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
    model = cfg.robot()
    try:
        wp = plan_path(model, cfg.scene(), np.array(cfg.q_start), np.array(cfg.q_goal),
                       cfg.field, mode)
    except PlannerError as exc:
        log.error("%s: %s", mode, exc)
        return EXIT_PLANNER
    traj, T_f = optimize_trajectory(wp, cfg.limits(), cfg.optimizer.lam,
                                    cfg.optimizer.knot_count, cfg.optimizer.t_max)
    write_trajectory_csv(traj, out, rate)
    print(f"T_f = {T_f!r}")
    return EXIT_OK if wp.converged else EXIT_PLANNER


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eapf", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_mode=True):
        p.add_argument("--scenario", default=str(bundled_scenario()),
                       help="scenario YAML file (default: bundled comparison scene)")
        if with_mode:
            p.add_argument("--mode", choices=MODES, default="eapf")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=0,
                       help="reserved for randomized scenes; the pipeline is deterministic")

    common(sub.add_parser("run", help="plan, optimize and simulate one mode"))
    common(sub.add_parser("compare", help="run both modes and write comparison.csv"),
           with_mode=False)
    p = sub.add_parser("export-trajectory", help="write the optimized reference trajectory")
    common(p)
    p.add_argument("--rate", type=float, default=100.0, help="sample rate in Hz")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            return cmd_run(args.scenario, args.mode, args.out)
        if args.command == "compare":
            return cmd_compare(args.scenario, args.out)
        return cmd_export_trajectory(args.scenario, args.mode, args.out, args.rate)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
