import numpy as np
import pytest
from hypothesis import settings

from eapf.config import data_path, load_robot
from eapf.geometry import Scene, Sphere
from eapf.kinematics import LinkParams, RobotModel, Transform

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture(scope="session")
def gen3():
    return load_robot(data_path("gen3.yaml"))


def planar_arm(lengths, masses=None, gravity=(0.0, -9.81, 0.0)):
    """Planar revolute chain about z; link i spans ``lengths[i]`` along its x axis."""
    masses = masses or [1.0] * len(lengths)
    links = []
    for i, (L, m) in enumerate(zip(lengths, masses)):
        a_prev = 0.0 if i == 0 else lengths[i - 1]
        I = np.diag([1e-3, m * L**2 / 12, m * L**2 / 12])
        links.append(LinkParams(0.0, a_prev, 0.0, 0.0, m, (L / 2, 0, 0), I))
    ee = Transform(np.eye(3), (lengths[-1], 0.0, 0.0))
    return RobotModel(tuple(links), gravity, ee, "planar")


@pytest.fixture(scope="session")
def two_link():
    return planar_arm([0.6, 0.4], [2.0, 1.0])


@pytest.fixture(scope="session")
def one_link():
    return planar_arm([0.5], [1.0], gravity=(0.0, 0.0, -9.81))


def barrier_scene(gap, theta=0.8, length=0.5, radius=0.05):
    """Sphere sitting ``gap`` beyond the tip circle of a one-link arm at angle ``theta``."""
    c = (length + radius + gap) * np.array([np.cos(theta), np.sin(theta), 0.0])
    return Scene((Sphere(c, radius),))


def random_states(n, count, seed, qmax=np.pi, vmax=2.0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-qmax, qmax, (count, n)), rng.uniform(-vmax, vmax, (count, n))


# acceptance verdicts, filled by test_acceptance.py and printed after the run
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
