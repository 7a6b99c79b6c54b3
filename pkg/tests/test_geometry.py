import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from eapf.geometry import Cylinder, Scene, Sphere, clearance, surface_distance

coord = st.floats(-1.0, 1.0, allow_nan=False)
points = arrays(float, 3, elements=coord)

CYL = Cylinder.centered((0.0, 0.7, 0.9), (0.0, 0.0, 1.0), 0.15, 0.075)


def test_sphere_distance_and_direction():
    s = Sphere((1.0, 0.0, 0.0), 0.25)
    d, u = s.signed_distance((1.0, 0.0, 1.0))
    assert d == pytest.approx(0.75, abs=1e-15)
    assert np.allclose(u, [0, 0, 1])


def test_sphere_inside_is_negative_and_clamped():
    s = Sphere((0, 0, 0), 0.5)
    assert s.signed_distance((0.1, 0, 0))[0] == pytest.approx(-0.4)
    d, u = surface_distance(s, (0.1, 0, 0), eps_r=1e-3)
    assert d == 1e-3 and np.allclose(u, [1, 0, 0])


def test_center_tie_break_is_plus_x():
    assert np.allclose(Sphere((0, 0, 0), 0.1).signed_distance((0, 0, 0))[1], [1, 0, 0])
    assert np.allclose(CYL.signed_distance(CYL.center)[1], [1, 0, 0])


@pytest.mark.parametrize("p, expect", [
    ((0.0, 0.7 + 0.2, 0.9), 0.2 - 0.075),             # beside the mantle
    ((0.0, 0.7, 0.9 + 0.5), 0.5 - 0.075),             # above the top cap
    ((0.0, 0.7 + 0.075 + 0.03, 0.975 + 0.04), 0.05),  # past the rim: 3-4-5
])
def test_cylinder_regions(p, expect):
    assert CYL.signed_distance(p)[0] == pytest.approx(expect, abs=1e-12)


def test_cylinder_inside_depth():
    d, u = CYL.signed_distance((0.0, 0.7 + 0.05, 0.9))
    assert d == pytest.approx(-0.025) and np.allclose(u, [0, 1, 0])


def test_cylinder_centroid_placement():
    assert np.allclose(CYL.center, [0.0, 0.7, 0.9])
    assert np.allclose(CYL.base_center, [0.0, 0.7, 0.825])


def _brute_cylinder(cyl, p, n=400):
    # dense samples of the capped cylinder surface
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    h = np.linspace(0, cyl.height, n // 4)
    a = cyl.axis
    e1 = np.cross(a, [1.0, 0, 0]) if abs(a[0]) < 0.9 else np.cross(a, [0, 1.0, 0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(a, e1)
    ring = np.cos(th)[:, None] * e1 + np.sin(th)[:, None] * e2
    mantle = cyl.base_center + (h[:, None, None] * a + cyl.radius * ring[None]).reshape(-1, 3)
    r = np.linspace(0, cyl.radius, n // 8)
    disc = (r[:, None, None] * ring[None]).reshape(-1, 3)
    caps = np.vstack([cyl.base_center + disc, cyl.base_center + cyl.height * a + disc])
    surf = np.vstack([mantle, caps])
    return np.min(np.linalg.norm(surf - p, axis=1))


@given(points)
def test_cylinder_outside_matches_brute_force(p):
    d, u = CYL.signed_distance(p)
    if d <= 0:
        return
    assert d <= _brute_cylinder(CYL, p) + 1e-12
    assert d >= _brute_cylinder(CYL, p) - 2e-3
    # the foot of the perpendicular lies on the surface
    assert abs(CYL.signed_distance(p - d * u)[0]) <= 1e-9


@given(points, st.floats(0.05, 0.5))
def test_sphere_distance_is_lipschitz(p, r):
    s = Sphere((0.1, -0.2, 0.3), r)
    q = p + np.array([1e-3, -2e-3, 5e-4])
    assert abs(s.signed_distance(p)[0] - s.signed_distance(q)[0]) <= np.linalg.norm(q - p) + 1e-15


def test_tilted_cylinder():
    axis = np.array([1.0, 1.0, 0.0]) / np.sqrt(2)
    cyl = Cylinder((0, 0, 0), axis, 1.0, 0.1)
    assert cyl.signed_distance((0.0, 0.0, 0.5))[0] == pytest.approx(0.4)


def test_scene_distances_shape_and_clearance():
    sc = Scene((Sphere((0, 0, 0), 0.1), CYL))
    pts = np.array([[0.3, 0, 0], [0, 0.7, 1.2]])
    d, u = sc.distances(pts)
    assert d.shape == (2, 2) and u.shape == (2, 2, 3)
    assert np.allclose(clearance(sc, pts), [0.2, 0.225])


def test_empty_scene_clearance_is_inf():
    assert np.all(np.isinf(clearance(Scene(), np.zeros((3, 3)))))


@pytest.mark.parametrize("bad", [
    lambda: Sphere((0, 0, 0), 0.0),
    lambda: Cylinder((0, 0, 0), (0, 0, 2.0), 1.0, 0.1),
    lambda: Cylinder((0, 0, 0), (0, 0, 1.0), -1.0, 0.1),
])
def test_invalid_obstacles(bad):
    with pytest.raises(ValueError):
        bad()
