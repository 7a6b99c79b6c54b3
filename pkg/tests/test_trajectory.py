import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from eapf.potential_field import Waypoints
from eapf.trajectory import (Limits, Trajectory, constraint_report, fit_min_jerk, golden_section,
                             jerk_cost, knot_fractions, minimum_feasible_duration,
                             optimize_trajectory, select_knots, write_trajectory_csv)


def quintic(dq, T, t):
    s = t / T
    return dq * (10 * s**3 - 15 * s**4 + 6 * s**5)


def test_two_knot_fit_is_classical_quintic():
    T = 1.7
    tr = fit_min_jerk([[0.0], [1.3]], T)
    t = np.linspace(0, T, 101)
    q, _, _ = tr.evaluate(t)
    assert np.max(np.abs(q[:, 0] - quintic(1.3, T, t))) <= 1e-10


@given(st.floats(0.1, 3.0), st.floats(0.2, 5.0))
def test_quintic_jerk_and_peak_speed(dq, T):
    tr = fit_min_jerk([[0.0], [dq]], T)
    assert jerk_cost(tr) == pytest.approx(720 * dq**2 / T**5, rel=1e-3)
    _, qd, _ = tr.evaluate(T / 2)
    assert qd[0] == pytest.approx(1.875 * dq / T, abs=1e-9)
    assert constraint_report(tr, Limits(1e9, 1e9)).max_vel == pytest.approx(1.875 * dq / T, abs=1e-9)


def test_unit_quintic_infeasible_when_fast():
    rep = constraint_report(fit_min_jerk([[0.0], [1.0]], 0.1))
    assert rep.max_vel == pytest.approx(18.75) and not rep.feasible


def test_constant_trajectory():
    tr = fit_min_jerk([[0.5, -0.2], [0.5, -0.2]], 1.0)
    assert jerk_cost(tr) == 0.0
    assert constraint_report(tr) == (0.0, 0.0, True)


knots_strategy = arrays(float, (5, 2), elements=st.floats(-2, 2)).filter(
    lambda k: np.all(np.linalg.norm(np.diff(k, axis=0), axis=1) > 0.1))


@given(knots_strategy, st.floats(0.5, 4.0))
def test_spline_invariants(knots, T):
    tr = fit_min_jerk(knots, T)
    # interpolation and rest boundaries
    assert np.allclose(tr.evaluate(0.0)[0], knots[0], atol=1e-12)
    assert np.allclose(tr.evaluate(T)[0], knots[-1], atol=1e-12)
    for k in (0, -1):
        assert np.allclose(tr.vel[k], 0) and np.allclose(tr.acc[k], 0)
    # C2 at interior knots: each segment ends on the next knot state
    P = np.polynomial.polynomial
    for k in range(len(tr.times) - 2):
        h = tr.times[k + 1] - tr.times[k]
        for j in range(2):
            c = tr.coeffs[k, j]
            ends = [P.polyval(h, c), P.polyval(h, P.polyder(c)), P.polyval(h, P.polyder(c, 2))]
            knot = [tr.pos[k + 1, j], tr.vel[k + 1, j], tr.acc[k + 1, j]]
            assert np.allclose(ends, knot, rtol=1e-9, atol=1e-9)
    # time scaling: jerk cost falls by 2**5 when the duration doubles
    assert jerk_cost(fit_min_jerk(knots, 2 * T)) == pytest.approx(jerk_cost(tr) / 32, rel=1e-9)


@given(knots_strategy)
def test_derivative_consistency(knots):
    tr = fit_min_jerk(knots, 2.0)
    t = np.arange(0.01, 1.99, 1e-3)
    h = 1e-5
    q_p, qd_p, _ = tr.evaluate(t + h)
    q_m, qd_m, _ = tr.evaluate(t - h)
    _, qd, qdd = tr.evaluate(t)
    assert np.max(np.abs((q_p - q_m) / (2 * h) - qd)) <= 1e-6
    assert np.max(np.abs((qd_p - qd_m) / (2 * h) - qdd)) <= 1e-4


def test_interior_solve_beats_clamped_fit():
    knots = np.array([[0.0], [1.0], [2.0]])
    T = 2.0
    best = jerk_cost(fit_min_jerk(knots, T))
    # the same knots with zero interior velocity and acceleration
    clamped = Trajectory([0, 1, 2], knots, np.zeros((3, 1)), np.zeros((3, 1)))
    assert best <= jerk_cost(clamped)


def test_knot_times_follow_arc_length():
    knots = np.array([[0.0, 0.0], [3.0, 4.0], [3.0, 5.0]])
    assert np.allclose(knot_fractions(knots), [0, 5 / 6, 1])


def test_select_knots_uniform_arc_length():
    path = np.linspace(0, 1, 1001)[:, None] * np.array([[2.0, 0.0]])
    k = select_knots(path, 5)
    assert np.allclose(k[:, 0], [0, 0.5, 1.0, 1.5, 2.0])
    assert np.array_equal(k[0], path[0]) and np.array_equal(k[-1], path[-1])


def test_select_knots_short_path_kept_whole():
    path = np.array([[0.0], [0.5], [1.0]])
    assert np.array_equal(select_knots(path, 10), path)


def test_duplicate_knots_rejected():
    with pytest.raises(ValueError):
        fit_min_jerk([[0.0], [1.0], [1.0], [2.0]], 1.0)


def test_golden_section_on_closed_form():
    lam = 3600.0
    T = golden_section(lambda T: 720 / T**5 + lam * T, 0.1, 10.0)
    assert T == pytest.approx(1.0, abs=1e-6)


def test_optimizer_interior_optimum():
    wp = Waypoints(np.array([[0.0], [1.0]]), np.array([0.0, 1.0]), True)
    tr, T = optimize_trajectory(wp, Limits(), lam=3600.0)
    assert T == pytest.approx(1.0, abs=1e-3)
    assert constraint_report(tr).feasible


def test_optimizer_small_lambda_hits_t_max():
    wp = Waypoints(np.array([[0.0], [1.0]]), np.array([0.0, 1.0]), True)
    _, T = optimize_trajectory(wp, Limits(), lam=1e-9, t_max=10.0)
    assert T == pytest.approx(10.0, abs=1e-6)


def test_optimizer_large_lambda_binds_a_limit():
    wp = Waypoints(np.array([[0.0, 0.0], [2.0, -1.0], [3.0, 1.0]]), np.array([0.0, 1.0, 2.0]), True)
    lim = Limits(10.0, 50.0)
    tr, T = optimize_trajectory(wp, lim, lam=1e12)
    rep = constraint_report(tr, lim)
    assert rep.feasible
    assert rep.max_vel >= 0.99 * lim.vel_max or rep.max_acc >= 0.99 * lim.acc_max


def test_minimum_feasible_duration_is_tight():
    knots = np.array([[0.0], [1.0]])
    T = minimum_feasible_duration(knots, Limits(1.875, 1e9))
    assert T == pytest.approx(1.0, abs=1e-3) and T >= 1.0


def test_optimizer_rejects_bad_lambda():
    with pytest.raises(ValueError):
        optimize_trajectory(np.array([[0.0], [1.0]]), Limits(), lam=0.0)


def test_trajectory_csv(tmp_path):
    tr = fit_min_jerk([[0.0, 1.0], [1.0, 0.0]], 0.5)
    out = tmp_path / "traj.csv"
    write_trajectory_csv(tr, out, rate=100.0)
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["t", "q_d1", "q_d2", "qdot_d1", "qdot_d2", "qddot_d1", "qddot_d2"]
    assert len(rows) == 1 + 51 and float(rows[-1][0]) == 0.5
