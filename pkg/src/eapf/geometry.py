"""Sphere and finite-cylinder obstacles with point-to-surface distances."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_TIE_DIR = np.array([1.0, 0.0, 0.0])


def _unit_rows(v, fallback):
    norm = np.sqrt(np.einsum("ij,ij->i", v, v))
    ok = norm > 0
    if ok.all():
        return v / norm[:, None], norm
    out = np.empty_like(v)
    out[ok] = v[ok] / norm[ok, None]
    out[~ok] = fallback
    return out, norm


@dataclass(frozen=True, eq=False)
class Sphere:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.array(self.center, dtype=float).reshape(3)
        c.flags.writeable = False
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))
        if not self.radius > 0:
            raise ValueError(f"sphere radius must be positive, got {self.radius}")

    def signed_distances(self, points):
        """Signed surface distances (negative inside) and outward unit directions."""
        diff = np.atleast_2d(np.asarray(points, dtype=float)) - self.center
        direction, norm = _unit_rows(diff, _TIE_DIR)
        return norm - self.radius, direction

    def signed_distance(self, p):
        d, u = self.signed_distances(p)
        return float(d[0]), u[0]


@dataclass(frozen=True, eq=False)
class Cylinder:
    """Solid capped cylinder from ``base_center`` along ``axis`` for ``height``."""

    base_center: np.ndarray
    axis: np.ndarray
    height: float
    radius: float

    def __post_init__(self):
        b = np.array(self.base_center, dtype=float).reshape(3)
        ax = np.array(self.axis, dtype=float).reshape(3)
        if abs(np.linalg.norm(ax) - 1.0) > 1e-9:
            raise ValueError("cylinder axis must be a unit vector")
        b.flags.writeable = False
        ax.flags.writeable = False
        object.__setattr__(self, "base_center", b)
        object.__setattr__(self, "axis", ax)
        object.__setattr__(self, "height", float(self.height))
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "_tie", _perpendicular_tie(ax))
        if not self.height > 0:
            raise ValueError(f"cylinder height must be positive, got {self.height}")
        if not self.radius > 0:
            raise ValueError(f"cylinder radius must be positive, got {self.radius}")

    @classmethod
    def centered(cls, center, axis, height, radius) -> Cylinder:
        axis = np.asarray(axis, dtype=float)
        return cls(np.asarray(center, dtype=float) - 0.5 * height * axis, axis, height, radius)

    @property
    def center(self) -> np.ndarray:
        return self.base_center + 0.5 * self.height * self.axis

    def signed_distances(self, points):
        P = np.atleast_2d(np.asarray(points, dtype=float))
        rel = P - self.base_center
        h = rel @ self.axis
        radial = rel - h[:, None] * self.axis
        u, rho = _unit_rows(radial, self._tie)

        dr = rho - self.radius                         # > 0 outside the mantle
        dh = np.maximum(-h, h - self.height)           # > 0 beyond a cap
        inside = (dr <= 0) & (dh <= 0)

        closest = (self.base_center
                   + np.clip(h, 0.0, self.height)[:, None] * self.axis
                   + np.minimum(rho, self.radius)[:, None] * u)
        diff = P - closest
        direction, dist = _unit_rows(diff, _TIE_DIR)
        # inside: depth to the nearest face, direction away from the axis
        dist = np.where(inside, np.maximum(dr, dh), dist)
        direction[inside] = u[inside]
        return dist, direction

    def signed_distance(self, p):
        d, u = self.signed_distances(p)
        return float(d[0]), u[0]


def _perpendicular_tie(axis):
    # deterministic +x tie-break, projected off the axis when needed
    d = _TIE_DIR - (_TIE_DIR @ axis) * axis
    if np.linalg.norm(d) < 1e-12:
        d = np.array([0.0, 1.0, 0.0]) - axis[1] * axis
    return d / np.linalg.norm(d)


@dataclass(frozen=True)
class Scene:
    obstacles: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))

    def __len__(self):
        return len(self.obstacles)

    def distances(self, points):
        """Signed distances and directions for every (point, obstacle) pair.

        Returns arrays of shape ``(m, k)`` and ``(m, k, 3)`` for ``m`` points
        and ``k`` obstacles.
        """
        P = np.atleast_2d(np.asarray(points, dtype=float))
        if not self.obstacles:
            return np.empty((len(P), 0)), np.empty((len(P), 0, 3))
        ds, us = zip(*(o.signed_distances(P) for o in self.obstacles))
        return np.stack(ds, axis=1), np.stack(us, axis=1)


def surface_distance(obstacle, p, eps_r: float = 1e-3):
    """Distance from ``p`` to the obstacle surface, clamped to ``eps_r``.

    Returns ``(distance, direction)`` where ``direction`` is the unit vector
    from the closest surface point toward ``p``.  Inside the obstacle the
    distance is ``eps_r`` and the direction points from the center (sphere)
    or axis (cylinder) toward ``p``.  A point exactly on the center or axis
    gets the direction +x.
    """
    d, direction = obstacle.signed_distance(p)
    return max(d, eps_r), direction


def clearance(scene: Scene, points) -> np.ndarray:
    """Signed clearance of each point to its nearest obstacle (inf if none)."""
    d, _ = scene.distances(points)
    if d.shape[1] == 0:
        return np.full(d.shape[0], np.inf)
    return d.min(axis=1)
