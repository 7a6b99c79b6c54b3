"""Piecewise-quintic minimum-jerk trajectories with a time penalty.

Each joint is a chain of quintic segments; every segment is fixed by the
position, velocity and acceleration at its two knots, so C2 continuity
holds by construction.  Knot times are proportional to joint-space arc
length.  For a fixed duration the free interior velocities and
accelerations minimize the integrated squared jerk, which is a quadratic
program solved in closed form.  The duration then minimizes
``jerk_cost + lambda * T_f`` subject to velocity and acceleration limits.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

SAMPLE_RATE = 1000.0
T_LO, T_HI = 1e-3, 60.0
BISECT_TOL = 1e-3
GOLDEN_TOL = 1e-7
_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Limits:
    vel_max: float = 10.0
    acc_max: float = 50.0

    def __post_init__(self):
        if not (self.vel_max > 0 and self.acc_max > 0):
            raise ValueError("velocity and acceleration limits must be positive")


def _hermite_basis(h: float) -> np.ndarray:
    """Map (p0, v0, a0, p1, v1, a1) to the cubic..quintic coefficients."""
    return np.array([
        [-10 / h**3, -6 / h**2, -1.5 / h, 10 / h**3, -4 / h**2, 0.5 / h],
        [15 / h**4, 8 / h**3, 1.5 / h**2, -15 / h**4, 7 / h**3, -1 / h**2],
        [-6 / h**5, -3 / h**4, -0.5 / h**3, 6 / h**5, -3 / h**4, 0.5 / h**3],
    ])


def _jerk_gram(h: float) -> np.ndarray:
    # integral over [0, h] of products of the jerk basis {6, 24 t, 60 t^2}
    return np.array([
        [36 * h, 72 * h**2, 120 * h**3],
        [72 * h**2, 192 * h**3, 360 * h**4],
        [120 * h**3, 360 * h**4, 720 * h**5],
    ])


class Trajectory:
    """Per-joint piecewise quintic through knots at ``times``.

    ``pos``, ``vel`` and ``acc`` hold the knot states, each of shape (K, n).
    """

    def __init__(self, times, pos, vel, acc):
        self.times = np.asarray(times, dtype=float)
        self.pos = np.asarray(pos, dtype=float)
        self.vel = np.asarray(vel, dtype=float)
        self.acc = np.asarray(acc, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("knot times must be strictly increasing")
        self.coeffs = self._coefficients()

    @property
    def duration(self) -> float:
        return float(self.times[-1])

    @property
    def n(self) -> int:
        return self.pos.shape[1]

    def _coefficients(self):
        K, n = self.pos.shape
        C = np.zeros((K - 1, n, 6))
        for k in range(K - 1):
            h = self.times[k + 1] - self.times[k]
            # the basis only sees p1 - p0, so equal knots give exactly zero
            x = np.stack([np.zeros(n), self.vel[k], self.acc[k],
                          self.pos[k + 1] - self.pos[k], self.vel[k + 1], self.acc[k + 1]])
            C[k, :, 0] = self.pos[k]
            C[k, :, 1] = self.vel[k]
            C[k, :, 2] = 0.5 * self.acc[k]
            C[k, :, 3:] = (_hermite_basis(h) @ x).T
        return C

    def evaluate(self, t):
        """Desired position, velocity and acceleration at time(s) ``t``.

        Times outside ``[0, T_f]`` are clamped to the boundary.
        """
        scalar = np.ndim(t) == 0
        t = np.clip(np.atleast_1d(np.asarray(t, dtype=float)), self.times[0], self.times[-1])
        seg = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2)
        tau = (t - self.times[seg])[:, None]
        c = self.coeffs[seg]                                  # (m, n, 6)
        q = c[..., 0] + tau * (c[..., 1] + tau * (c[..., 2] + tau * (c[..., 3] + tau * (c[..., 4] + tau * c[..., 5]))))
        qd = c[..., 1] + tau * (2 * c[..., 2] + tau * (3 * c[..., 3] + tau * (4 * c[..., 4] + tau * 5 * c[..., 5])))
        qdd = 2 * c[..., 2] + tau * (6 * c[..., 3] + tau * (12 * c[..., 4] + tau * 20 * c[..., 5]))
        if scalar:
            return q[0], qd[0], qdd[0]
        return q, qd, qdd

    def jerk(self, t):
        t = np.clip(np.atleast_1d(np.asarray(t, dtype=float)), self.times[0], self.times[-1])
        seg = np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2)
        tau = (t - self.times[seg])[:, None]
        c = self.coeffs[seg]
        return 6 * c[..., 3] + tau * (24 * c[..., 4] + tau * 60 * c[..., 5])


def evaluate(traj: Trajectory, t):
    return traj.evaluate(t)


def _dedupe(path):
    keep = [0]
    for i in range(1, len(path)):
        if np.any(path[i] != path[keep[-1]]):
            keep.append(i)
    if len(keep) == 1 and len(path) > 1:
        keep.append(len(path) - 1)
    return path[keep]


def select_knots(waypoints, count: int) -> np.ndarray:
    """Downsample a planner path to ``count`` knots evenly spaced in arc length.

    The first and last waypoints are always kept.  Paths with fewer distinct
    points than ``count`` are returned whole; a single point is doubled.
    """
    if count < 2:
        raise ValueError(f"knot count must be at least 2, got {count}")
    path = np.atleast_2d(np.asarray(getattr(waypoints, "path", waypoints), dtype=float))
    path = _dedupe(path)
    if len(path) == 1:
        return np.vstack([path, path])  # already at the goal: hold still
    if count >= len(path):
        return path.copy()
    s = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(path, axis=0), axis=1))])
    if s[-1] == 0.0:
        return path[[0, -1]].copy()
    targets = np.linspace(0.0, s[-1], count)
    knots = np.stack([np.interp(targets, s, path[:, j]) for j in range(path.shape[1])], axis=1)
    knots[0], knots[-1] = path[0], path[-1]
    return knots


def knot_fractions(knots) -> np.ndarray:
    """Normalized knot times proportional to inter-knot arc length."""
    knots = np.asarray(knots, dtype=float)
    seg = np.linalg.norm(np.diff(knots, axis=0), axis=1)
    total = seg.sum()
    if total == 0.0:
        return np.linspace(0.0, 1.0, len(knots))
    s = np.concatenate([[0.0], np.cumsum(seg)]) / total
    s[-1] = 1.0
    return s


def fit_min_jerk(knots, T_f: float) -> Trajectory:
    """Minimum-jerk quintic spline through ``knots`` lasting ``T_f`` seconds.

    Boundary velocities and accelerations are zero; interior ones are the
    minimizers of the integrated squared jerk.
    """
    knots = np.atleast_2d(np.asarray(knots, dtype=float))
    K, n = knots.shape
    if K < 2:
        raise ValueError("need at least two knots")
    if not T_f > 0:
        raise ValueError(f"T_f must be positive, got {T_f}")
    times = T_f * knot_fractions(knots)
    if np.any(np.diff(times) <= 0):
        raise ValueError("duplicate knot times: consecutive knots coincide")

    vel = np.zeros((K, n))
    acc = np.zeros((K, n))
    if K > 2:
        # variables ordered (p_0, v_0, a_0, p_1, ...); assemble the jerk Hessian
        H = np.zeros((3 * K, 3 * K))
        for k in range(K - 1):
            h = times[k + 1] - times[k]
            B = _hermite_basis(h)
            H[3 * k:3 * k + 6, 3 * k:3 * k + 6] += B.T @ _jerk_gram(h) @ B
        free = np.array([3 * k + i for k in range(1, K - 1) for i in (1, 2)])
        fixed_p = np.arange(0, 3 * K, 3)
        rhs = -H[np.ix_(free, fixed_p)] @ knots
        try:
            sol = np.linalg.solve(H[np.ix_(free, free)], rhs)
        except np.linalg.LinAlgError as exc:
            raise ValueError("singular jerk system; check for duplicate knot times") from exc
        vel[1:-1] = sol[0::2]
        acc[1:-1] = sol[1::2]
    return Trajectory(times, knots, vel, acc)


def jerk_cost(traj: Trajectory) -> float:
    """Exact integral of the squared jerk, summed over joints."""
    total = 0.0
    for k in range(len(traj.times) - 1):
        h = traj.times[k + 1] - traj.times[k]
        c = traj.coeffs[k, :, 3:]
        total += float(np.einsum("ji,ik,jk->", c, _jerk_gram(h), c))
    return total


class ConstraintReport(NamedTuple):
    max_vel: float
    max_acc: float
    feasible: bool


def _poly_extrema(coeffs, h):
    """Interior critical points in (0, h) of a polynomial (low order first)."""
    deriv = np.polynomial.polynomial.polyder(coeffs)
    if not np.any(deriv):
        return []
    roots = np.polynomial.polynomial.polyroots(np.trim_zeros(deriv, "b"))
    roots = roots[np.abs(roots.imag) < 1e-9].real
    return roots[(roots > 0) & (roots < h)]


def constraint_report(traj: Trajectory, limits: Limits = Limits()) -> ConstraintReport:
    """Peak |velocity| and |acceleration| over the trajectory.

    Uses a 1 kHz grid plus knots and the analytic critical points of each
    segment's velocity and acceleration polynomials.
    """
    T = traj.duration
    grid = np.concatenate([np.arange(0.0, T, 1.0 / SAMPLE_RATE), traj.times])
    _, qd, qdd = traj.evaluate(grid)
    vmax = float(np.max(np.abs(qd)))
    amax = float(np.max(np.abs(qdd)))
    for k in range(len(traj.times) - 1):
        h = traj.times[k + 1] - traj.times[k]
        for j in range(traj.n):
            c = traj.coeffs[k, j]
            vel_c = np.polynomial.polynomial.polyder(c)
            acc_c = np.polynomial.polynomial.polyder(vel_c)
            for tau in _poly_extrema(vel_c, h):
                vmax = max(vmax, abs(np.polynomial.polynomial.polyval(tau, vel_c)))
            for tau in _poly_extrema(acc_c, h):
                amax = max(amax, abs(np.polynomial.polynomial.polyval(tau, acc_c)))
    return ConstraintReport(vmax, amax, vmax <= limits.vel_max and amax <= limits.acc_max)


def golden_section(f, lo: float, hi: float, tol: float = GOLDEN_TOL) -> float:
    """Minimizer of a unimodal ``f`` on ``[lo, hi]``."""
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    # the bracket ends are candidates when the optimum sits on a bound
    return min((0.5 * (a + b), lo, hi), key=f)


def minimum_feasible_duration(knots, limits: Limits, tol: float = BISECT_TOL) -> float:
    """Smallest duration (to ``tol``) whose minimum-jerk fit meets the limits."""
    def feasible(T):
        return constraint_report(fit_min_jerk(knots, T), limits).feasible

    if not feasible(T_HI):
        raise ValueError(f"no feasible duration up to {T_HI} s; waypoints look degenerate")
    lo, hi = T_LO, T_HI
    if feasible(lo):
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def optimize_trajectory(waypoints, limits: Limits = Limits(), lam: float = 100.0,
                        knot_count: int = 10, t_max: float = 10.0):
    """Fit knots from ``waypoints`` and pick ``T_f`` minimizing jerk + lam * T_f.

    Returns ``(trajectory, T_f)``; the trajectory always meets ``limits``.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    knots = select_knots(waypoints, knot_count)
    t_min = minimum_feasible_duration(knots, limits)
    t_hi = max(t_max, t_min)

    def objective(T):
        return jerk_cost(fit_min_jerk(knots, T)) + lam * T

    T_f = t_min if t_hi == t_min else golden_section(objective, t_min, t_hi)
    return fit_min_jerk(knots, T_f), T_f


def write_trajectory_csv(traj: Trajectory, path, rate: float = 100.0) -> None:
    """Sample the trajectory at ``rate`` Hz (plus the final time) into CSV."""
    n = traj.n
    steps = int(np.floor(traj.duration * rate + 1e-9))
    t = np.arange(steps + 1) / rate
    if t[-1] < traj.duration:
        t = np.append(t, traj.duration)
    q, qd, qdd = traj.evaluate(t)
    header = (["t"] + [f"q_d{i}" for i in range(1, n + 1)]
              + [f"qdot_d{i}" for i in range(1, n + 1)]
              + [f"qddot_d{i}" for i in range(1, n + 1)])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in np.column_stack([t, q, qd, qdd]):
            w.writerow([repr(float(x)) for x in row])
