"""Robot parameter files and scenario configs (YAML, schema version 1).

Both formats are strict: unknown keys, missing keys, wrong shapes and
invariant violations raise :class:`ConfigError` naming the file, line and
key.  See ``README.md`` for the full schemas.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from dataclasses import field as dc_field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .controller import Gains
from .geometry import Cylinder, Scene, Sphere
from .kinematics import LinkParams, RobotModel, Transform
from .potential_field import MODES, FieldParams
from .simulator import SimConfig
from .trajectory import Limits

SCHEMA_VERSION = 1
BUNDLED_SCENARIO = "gen3_paper_scene"


class ConfigError(ValueError):
    pass


def data_path(name: str) -> Path:
    """Path of a bundled data file, e.g. ``data_path("gen3.yaml")``."""
    return Path(str(resources.files("eapf") / "data" / name))


# ---------------------------------------------------------------------------
# YAML with source locations
# ---------------------------------------------------------------------------

class _Doc:
    """Parsed YAML plus the source line of every mapping key and sequence item."""

    def __init__(self, text: str, source: str):
        self.source = source
        try:
            node = yaml.compose(text, Loader=yaml.SafeLoader)
            self.data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{source}: invalid YAML: {exc}") from exc
        self.lines: dict[tuple, int] = {}
        if node is not None:
            self._walk(node, ())

    def _walk(self, node, path):
        self.lines[path] = node.start_mark.line + 1
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = path + (k.value,)
                self._walk(v, key)
                self.lines[key] = k.start_mark.line + 1
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                self._walk(v, path + (i,))

    def error(self, path, message):
        # fall back to the nearest located ancestor
        p = tuple(path)
        while p not in self.lines and p:
            p = p[:-1]
        line = self.lines.get(p, 1)
        name = ".".join(str(x) for x in path) or "<root>"
        return ConfigError(f"{self.source}:{line}: {name}: {message}")


class _Section:
    def __init__(self, doc: _Doc, value, path=()):
        self.doc, self.value, self.path = doc, value, tuple(path)
        if not isinstance(value, dict):
            raise doc.error(path, "expected a mapping")

    def check_keys(self, required, optional=()):
        allowed = set(required) | set(optional)
        for key in self.value:
            if key not in allowed:
                raise self.doc.error(self.path + (key,), f"unknown key {key!r}")
        for key in required:
            if key not in self.value:
                raise self.doc.error(self.path, f"missing required key {key!r}")

    def has(self, key):
        return key in self.value

    def sub(self, key):
        return _Section(self.doc, self.value[key], self.path + (key,))

    def number(self, key, *, positive=False, nonneg=False, integer=False):
        v = self.value[key]
        p = self.path + (key,)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise self.doc.error(p, f"expected a number, got {v!r}")
        if integer and not float(v).is_integer():
            raise self.doc.error(p, f"expected an integer, got {v!r}")
        if not math.isfinite(v):
            raise self.doc.error(p, "must be finite")
        if positive and not v > 0:
            raise self.doc.error(p, f"must be positive, got {v}")
        if nonneg and v < 0:
            raise self.doc.error(p, f"must be non-negative, got {v}")
        return int(v) if integer else float(v)

    def vector(self, key, length=None):
        v = self.value[key]
        p = self.path + (key,)
        if not isinstance(v, list) or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in v):
            raise self.doc.error(p, "expected a list of numbers")
        if length is not None and len(v) != length:
            raise self.doc.error(p, f"expected {length} values, got {len(v)}")
        if not all(math.isfinite(x) for x in v):
            raise self.doc.error(p, "values must be finite")
        return tuple(float(x) for x in v)

    def matrix(self, key, rows, cols):
        v = self.value[key]
        p = self.path + (key,)
        if not isinstance(v, list) or len(v) != rows:
            raise self.doc.error(p, f"expected a {rows}x{cols} matrix")
        out = []
        for i, row in enumerate(v):
            if not isinstance(row, list) or len(row) != cols or any(
                    isinstance(x, bool) or not isinstance(x, (int, float)) for x in row):
                raise self.doc.error(p + (i,), f"expected {cols} numbers")
            out.append([float(x) for x in row])
        return np.array(out)

    def string(self, key):
        v = self.value[key]
        if not isinstance(v, str):
            raise self.doc.error(self.path + (key,), f"expected a string, got {v!r}")
        return v


def _check_version(root: _Section):
    version = root.number("version", integer=True)
    if version != SCHEMA_VERSION:
        raise root.doc.error(("version",), f"unsupported schema version {version}")


# ---------------------------------------------------------------------------
# robot files
# ---------------------------------------------------------------------------

_LINK_KEYS = ("alpha_prev", "a_prev", "d", "theta_offset", "mass", "com", "inertia")


def load_robot(path) -> RobotModel:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read robot file: {exc}") from exc
    return parse_robot_text(text, str(path))


def parse_robot_text(text: str, source: str = "<robot>") -> RobotModel:
    doc = _Doc(text, source)
    root = _Section(doc, doc.data)
    root.check_keys(("version", "links"), ("name", "gravity", "ee_offset"))
    _check_version(root)
    gravity = root.vector("gravity", 3) if root.has("gravity") else (0.0, 0.0, -9.81)
    ee = Transform.identity()
    if root.has("ee_offset"):
        sec = root.sub("ee_offset")
        sec.check_keys(("rotation", "translation"))
        try:
            ee = Transform(sec.matrix("rotation", 3, 3), sec.vector("translation", 3))
        except ValueError as exc:
            raise doc.error(("ee_offset", "rotation"), str(exc)) from exc

    raw = root.value["links"]
    if not isinstance(raw, list) or not raw:
        raise doc.error(("links",), "expected a non-empty list of links")
    links = []
    for i, item in enumerate(raw):
        sec = _Section(doc, item, ("links", i))
        sec.check_keys(_LINK_KEYS)
        try:
            links.append(LinkParams(
                alpha_prev=sec.number("alpha_prev"), a_prev=sec.number("a_prev"),
                d=sec.number("d"), theta_offset=sec.number("theta_offset"),
                mass=sec.number("mass", positive=True), com=sec.vector("com", 3),
                inertia=sec.matrix("inertia", 3, 3)))
        except ConfigError:
            raise
        except ValueError as exc:
            raise doc.error(("links", i, "inertia"), str(exc)) from exc
    name = root.string("name") if root.has("name") else Path(source).stem
    return RobotModel(tuple(links), gravity, ee, name)


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ObstacleSpec:
    """Obstacle as written in a scenario; ``center`` is the cylinder centroid."""

    type: str
    center: tuple
    radius: float
    axis: tuple | None = None
    height: float | None = None

    def build(self):
        if self.type == "sphere":
            return Sphere(self.center, self.radius)
        return Cylinder.centered(self.center, self.axis, self.height, self.radius)


@dataclass(frozen=True)
class OptimizerParams:
    lam: float = 100.0
    knot_count: int = 10
    vel_max: float = 10.0
    acc_max: float = 50.0
    t_max: float = 10.0


@dataclass(frozen=True)
class ScenarioConfig:
    robot_file: str
    q_start: tuple
    q_goal: tuple
    obstacles: tuple = ()
    field: FieldParams = dc_field(default_factory=FieldParams)
    optimizer: OptimizerParams = dc_field(default_factory=OptimizerParams)
    gains: tuple = (("apf", (25.0,), (10.0,)), ("eapf", (49.0,), (11.2,)))
    sim: SimConfig = dc_field(default_factory=SimConfig)

    def robot(self) -> RobotModel:
        return load_robot(self.robot_file)

    def scene(self) -> Scene:
        return Scene(tuple(o.build() for o in self.obstacles))

    def limits(self) -> Limits:
        return Limits(self.optimizer.vel_max, self.optimizer.acc_max)

    def gains_for(self, mode: str) -> Gains:
        for m, kp, kd in self.gains:
            if m == mode:
                return Gains(kp[0] if len(kp) == 1 else kp, kd[0] if len(kd) == 1 else kd)
        raise KeyError(f"no gains for mode {mode!r}")

    def with_obstacles(self, obstacles) -> ScenarioConfig:
        return ScenarioConfig(self.robot_file, self.q_start, self.q_goal, tuple(obstacles),
                              self.field, self.optimizer, self.gains, self.sim)


_FIELD_KEYS = ("k_a", "k_r", "rho0", "gamma", "mu_base", "damping", "dt_plan",
               "t_max_plan", "goal_tol")
_FIELD_OPTIONAL = ("eps_v", "eps_r", "goal_fade", "kappa_max")
_OPT_KEYS = ("lambda", "knot_count", "vel_max", "acc_max")
_SIM_KEYS = ("dt", "arrival_tol")
_TOP_KEYS = ("version", "robot_file", "q_start", "q_goal", "obstacles", "field",
             "optimizer", "gains", "sim")


def parse_scenario(path) -> ScenarioConfig:
    """Load and fully validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read scenario: {exc}") from exc
    return parse_scenario_text(text, path.parent, str(path))


def parse_scenario_text(text: str, base_dir=".", source: str = "<scenario>") -> ScenarioConfig:
    doc = _Doc(text, source)
    root = _Section(doc, doc.data)
    root.check_keys(_TOP_KEYS)
    _check_version(root)

    robot_path = Path(root.string("robot_file"))
    if not robot_path.is_absolute():
        robot_path = Path(base_dir) / robot_path
    if not robot_path.is_file():
        raise doc.error(("robot_file",), f"file not found: {robot_path}")
    robot_path = robot_path.resolve()
    model = load_robot(robot_path)

    q_start = root.vector("q_start", model.n)
    q_goal = root.vector("q_goal", model.n)

    obstacles = []
    raw = root.value["obstacles"]
    if raw is None:
        raw = []
    if not isinstance(raw, list):
        raise doc.error(("obstacles",), "expected a list")
    for i, item in enumerate(raw):
        sec = _Section(doc, item, ("obstacles", i))
        kind = sec.value.get("type")
        if kind == "sphere":
            sec.check_keys(("type", "center", "radius"))
            spec = ObstacleSpec("sphere", sec.vector("center", 3), sec.number("radius", positive=True))
        elif kind == "cylinder":
            sec.check_keys(("type", "center", "radius", "height"), ("axis",))
            axis = sec.vector("axis", 3) if sec.has("axis") else (0.0, 0.0, 1.0)
            if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
                raise doc.error(("obstacles", i, "axis"), "axis must be a unit vector")
            spec = ObstacleSpec("cylinder", sec.vector("center", 3), sec.number("radius", positive=True),
                                axis, sec.number("height", positive=True))
        else:
            raise doc.error(("obstacles", i, "type"), f"type must be 'sphere' or 'cylinder', got {kind!r}")
        obstacles.append(spec)

    fsec = root.sub("field")
    fsec.check_keys(_FIELD_KEYS, _FIELD_OPTIONAL)
    fvals = {k: fsec.number(k) for k in _FIELD_KEYS + _FIELD_OPTIONAL if fsec.has(k)}
    try:
        fparams = FieldParams(**fvals)
    except ValueError as exc:
        bad = next((k for k in _FIELD_KEYS + _FIELD_OPTIONAL if str(exc).startswith(k)), None)
        raise doc.error(("field", bad) if bad else ("field",), str(exc)) from exc

    osec = root.sub("optimizer")
    osec.check_keys(_OPT_KEYS, ("t_max",))
    knot_count = osec.number("knot_count", integer=True)
    if knot_count < 2:
        raise doc.error(("optimizer", "knot_count"), "must be at least 2")
    opt = OptimizerParams(
        lam=osec.number("lambda", positive=True), knot_count=knot_count,
        vel_max=osec.number("vel_max", positive=True), acc_max=osec.number("acc_max", positive=True),
        t_max=osec.number("t_max", positive=True) if osec.has("t_max") else 10.0)

    gsec = root.sub("gains")
    gsec.check_keys(MODES)
    gains = []
    for mode in MODES:
        msec = gsec.sub(mode)
        msec.check_keys(("kp", "kd"))
        pair = []
        for key in ("kp", "kd"):
            v = msec.value[key]
            vals = msec.vector(key, model.n) if isinstance(v, list) else (msec.number(key),)
            if any(x <= 0 for x in vals):
                raise doc.error(("gains", mode, key), "gains must be positive")
            pair.append(vals)
        gains.append((mode, pair[0], pair[1]))

    ssec = root.sub("sim")
    ssec.check_keys(_SIM_KEYS, ("t_extra",))
    sim = SimConfig(dt=ssec.number("dt", positive=True),
                    t_extra=ssec.number("t_extra", nonneg=True) if ssec.has("t_extra") else 0.5,
                    arrival_tol=ssec.number("arrival_tol", positive=True))

    return ScenarioConfig(str(robot_path), q_start, q_goal, tuple(obstacles), fparams,
                          opt, tuple(gains), sim)


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    obstacles = []
    for o in cfg.obstacles:
        item = {"type": o.type, "center": list(o.center), "radius": o.radius}
        if o.type == "cylinder":
            item.update(height=o.height, axis=list(o.axis))
        obstacles.append(item)
    opt = asdict(cfg.optimizer)
    opt["lambda"] = opt.pop("lam")

    def _g(v):
        return v[0] if len(v) == 1 else list(v)

    fld = asdict(cfg.field)
    if fld["kappa_max"] == float("inf"):
        del fld["kappa_max"]  # the default; YAML has no finite spelling for it
    return {
        "version": SCHEMA_VERSION,
        "robot_file": cfg.robot_file,
        "q_start": list(cfg.q_start),
        "q_goal": list(cfg.q_goal),
        "obstacles": obstacles,
        "field": fld,
        "optimizer": opt,
        "gains": {m: {"kp": _g(kp), "kd": _g(kd)} for m, kp, kd in cfg.gains},
        "sim": asdict(cfg.sim),
    }


def dump_scenario(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(scenario_to_dict(cfg), sort_keys=False)


def bundled_scenario() -> Path:
    return data_path(f"{BUNDLED_SCENARIO}.yaml")
