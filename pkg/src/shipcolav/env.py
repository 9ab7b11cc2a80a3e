"""Episodic path-following and collision-avoidance environment.

Observation layout: 6 navigation features ``[u, v, r, cte, heading_err,
lookahead_heading_err]`` followed by ``[closeness, v_x, v_y]`` for every
sensor sector. Actions are normalized ``[surge, yaw]`` in [-1, 1].
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path as FsPath

import numpy as np

from . import dynamics
from .dynamics import ConfigError, VesselModel, VesselState, wrap_angle
from .guidance import Path, build_path, nav_features
from .rewards import RewardConfig, total_reward
from .sensing import (Obstacle, SensorConfig, circle, hull_corners, perception_vector,
                      point_in_polygon, polygon, sense, vessel_hull)

__all__ = [
    "TargetVessel",
    "Scenario",
    "ScenarioError",
    "GeneratorConfig",
    "EnvConfig",
    "StepResult",
    "VesselEnv",
    "EpisodeOver",
    "generate_training_scenario",
    "encounter_classifier",
    "head_on_scenario",
    "crossing_scenario",
    "smoke_configs",
    "SCENARIO_VERSION",
]

SCENARIO_VERSION = 1
CAUSES = ("collision", "goal", "timeout", "left-world")


class ScenarioError(ValueError):
    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class EpisodeOver(RuntimeError):
    """step() called on a finished episode."""


@dataclass
class TargetVessel:
    """A non-reacting vessel on a straight line or a recorded track.

    With ``times``/``points`` set, the position is interpolated linearly in
    time (held at the ends); otherwise ``position + velocity * t``.
    """

    id: str
    position: tuple = (0.0, 0.0)
    velocity: tuple = (0.0, 0.0)
    length: float = 40.0
    width: float = 10.0
    times: np.ndarray | None = None
    points: np.ndarray | None = None

    def __post_init__(self):
        self.position = (float(self.position[0]), float(self.position[1]))
        self.velocity = (float(self.velocity[0]), float(self.velocity[1]))
        if self.times is not None:
            self.times = np.asarray(self.times, dtype=float)
            self.points = np.asarray(self.points, dtype=float)
            if len(self.times) < 1 or self.points.shape != (len(self.times), 2):
                raise ValueError(f"target {self.id}: times and points disagree")
            if np.any(np.diff(self.times) <= 0):
                raise ValueError(f"target {self.id}: track times must be strictly increasing")

    @property
    def is_track(self) -> bool:
        return self.times is not None

    def position_at(self, t: float) -> np.ndarray:
        if not self.is_track:
            return np.array([self.position[0] + self.velocity[0] * t,
                             self.position[1] + self.velocity[1] * t])
        return np.array([np.interp(t, self.times, self.points[:, 0]),
                         np.interp(t, self.times, self.points[:, 1])])

    def velocity_at(self, t: float) -> np.ndarray:
        if not self.is_track:
            return np.array(self.velocity)
        if len(self.times) < 2 or t < self.times[0] or t >= self.times[-1]:
            return np.zeros(2)
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        dt = self.times[k + 1] - self.times[k]
        return (self.points[k + 1] - self.points[k]) / dt

    def heading_at(self, t: float) -> float:
        v = self.velocity_at(t)
        if not v.any() and self.is_track and len(self.times) > 1:
            k = 0 if t < self.times[0] else len(self.times) - 2
            v = self.points[k + 1] - self.points[k]
        return math.atan2(v[1], v[0])

    def obstacle_at(self, t: float) -> Obstacle:
        return vessel_hull(self.id, self.position_at(t), self.heading_at(t), self.length,
                           self.width, velocity=tuple(self.velocity_at(t)))

    def state_at(self, t: float) -> VesselState:
        p, v = self.position_at(t), self.velocity_at(t)
        return VesselState(p[0], p[1], self.heading_at(t), float(np.hypot(*v)), 0.0, 0.0)

    def to_dict(self) -> dict:
        d = {"id": self.id, "length": self.length, "width": self.width}
        if self.is_track:
            d.update(type="track", times=self.times.tolist(), points=self.points.tolist())
        else:
            d.update(type="linear", position=list(self.position), velocity=list(self.velocity))
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TargetVessel":
        kind = d.get("type", "linear")
        common = dict(id=str(d["id"]), length=float(d.get("length", 40.0)), width=float(d.get("width", 10.0)))
        if kind == "track":
            return cls(times=d["times"], points=d["points"], **common)
        if kind != "linear":
            raise ValueError(f"unknown target type {kind!r}")
        return cls(position=d["position"], velocity=d["velocity"], **common)


def _obstacle_to_dict(o: Obstacle) -> dict:
    if o.is_circle:
        return {"id": o.id, "type": "circle", "center": list(o.center), "radius": o.radius}
    return {"id": o.id, "type": "polygon", "vertices": o.vertices.tolist()}


def _obstacle_from_dict(d: dict) -> Obstacle:
    if d.get("type") == "circle":
        return circle(d["id"], d["center"], d["radius"])
    if d.get("type") == "polygon":
        return polygon(d["id"], d["vertices"])
    raise ValueError(f"unknown obstacle type {d.get('type')!r}")


@dataclass
class Scenario:
    waypoints: np.ndarray
    static_obstacles: list = field(default_factory=list)
    targets: list = field(default_factory=list)
    spawn: VesselState = field(default_factory=VesselState)
    goal_radius: float = 100.0
    max_steps: int = 10_000
    seed: int | None = None
    bounds: tuple | None = None     # (north_min, north_max, east_min, east_max)
    fillet_radius: float = 2.51
    name: str = "scenario"

    def __post_init__(self):
        self.waypoints = np.asarray(self.waypoints, dtype=float)
        if self.bounds is None:
            self.bounds = _auto_bounds(self.waypoints, self.static_obstacles, margin=1000.0)
        self.bounds = tuple(float(b) for b in self.bounds)
        self._path = None

    @property
    def path(self) -> Path:
        if self._path is None:
            self._path = build_path(self.waypoints, self.fillet_radius)
        return self._path

    def in_bounds(self, p) -> bool:
        n0, n1, e0, e1 = self.bounds
        return n0 <= p[0] <= n1 and e0 <= p[1] <= e1

    def validate(self) -> list[str]:
        """All invariant violations, each prefixed with a field path."""
        problems = []
        try:
            path = self.path
        except ValueError as exc:
            return [f"waypoints: {exc}"]
        sp = (self.spawn.x_n, self.spawn.y_n)
        for k, o in enumerate(self.static_obstacles):
            if o.contains(sp):
                problems.append(f"static_obstacles[{k}] (id={o.id}): spawn lies inside obstacle")
        for k, tv in enumerate(self.targets):
            if tv.obstacle_at(0.0).contains(sp):
                problems.append(f"targets[{k}] (id={tv.id}): spawn lies inside target hull")
        for name, pt in (("start", path.position(0.0)), ("end", path.position(path.length))):
            if not self.in_bounds(pt):
                problems.append(f"waypoints: path {name} {tuple(np.round(pt, 3))} outside bounds")
        if not self.in_bounds(sp):
            problems.append("spawn: outside world bounds")
        if not self.goal_radius > 0:
            problems.append("goal_radius: must be positive")
        if self.max_steps < 1:
            problems.append("max_steps: must be >= 1")
        n0, n1, e0, e1 = self.bounds
        if not (n1 > n0 and e1 > e0):
            problems.append("bounds: empty world")
        return problems

    def to_dict(self) -> dict:
        return {
            "version": SCENARIO_VERSION,
            "name": self.name,
            "seed": self.seed,
            "waypoints": self.waypoints.tolist(),
            "fillet_radius": self.fillet_radius,
            "static_obstacles": [_obstacle_to_dict(o) for o in self.static_obstacles],
            "targets": [t.to_dict() for t in self.targets],
            "spawn": asdict(self.spawn),
            "goal_radius": self.goal_radius,
            "max_steps": self.max_steps,
            "bounds": list(self.bounds),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        if d.get("version", SCENARIO_VERSION) != SCENARIO_VERSION:
            raise ScenarioError(f"version: unsupported scenario version {d.get('version')}")
        try:
            return cls(
                waypoints=d["waypoints"],
                static_obstacles=[_obstacle_from_dict(o) for o in d.get("static_obstacles", [])],
                targets=[TargetVessel.from_dict(t) for t in d.get("targets", [])],
                spawn=VesselState(**d.get("spawn", {})),
                goal_radius=float(d.get("goal_radius", 100.0)),
                max_steps=int(d.get("max_steps", 10_000)),
                seed=d.get("seed"),
                bounds=d.get("bounds"),
                fillet_radius=float(d.get("fillet_radius", 2.51)),
                name=d.get("name", "scenario"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"malformed scenario: {exc}") from None

    def save(self, path) -> None:
        FsPath(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> "Scenario":
        return cls.from_dict(json.loads(FsPath(path).read_text()))


def _auto_bounds(waypoints, obstacles, margin):
    pts = [np.asarray(waypoints, dtype=float)]
    for o in obstacles:
        if o.is_circle:
            c = np.array(o.center)
            pts.append(np.array([c - o.radius, c + o.radius]))
        else:
            pts.append(o.vertices)
    allp = np.concatenate(pts)
    lo, hi = allp.min(axis=0) - margin, allp.max(axis=0) + margin
    return (lo[0], hi[0], lo[1], hi[1])


@dataclass
class GeneratorConfig:
    """Ranges for the stochastic training scenario (lengths in m, speeds in m/s)."""

    path_length: tuple = (5000.0, 12000.0)
    n_waypoints: tuple = (3, 6)
    max_turn_deg: float = 45.0
    fillet_radius: float = 2.51
    n_static: tuple = (5, 25)
    static_radius: tuple = (50.0, 400.0)
    static_lateral: float = 600.0
    static_omega: tuple = (0.05, 0.95)      # fraction of path length
    n_targets: tuple = (2, 8)
    target_speed: tuple = (1.0, 6.0)
    target_length: tuple = (20.0, 80.0)
    own_speed: float = 2.0                  # used to time target crossings
    spawn_clearance: float = 100.0
    spawn_lateral: float = 0.0
    spawn_heading_deg: float = 0.0
    goal_radius: float = 100.0
    max_steps: int = 10_000
    bounds_margin: float = 1000.0
    max_attempts: int = 100


def _sample_once(rng: np.random.Generator, g: GeneratorConfig, seed) -> Scenario:
    L = rng.uniform(*g.path_length)
    n_wp = int(rng.integers(g.n_waypoints[0], g.n_waypoints[1] + 1))
    heading = rng.uniform(-math.pi, math.pi)
    seg = L / (n_wp - 1)
    wps = [np.zeros(2)]
    for k in range(n_wp - 1):
        if k > 0:
            heading += math.radians(rng.uniform(-g.max_turn_deg, g.max_turn_deg))
        wps.append(wps[-1] + seg * np.array([math.cos(heading), math.sin(heading)]))
    wps = np.array(wps)
    path = build_path(wps, g.fillet_radius)

    statics = []
    n_static = int(rng.integers(g.n_static[0], g.n_static[1] + 1))
    for k in range(n_static):
        w = rng.uniform(*g.static_omega) * path.length
        x, y, dx, dy, *_ = path.eval_scalar(w)
        off = rng.uniform(-g.static_lateral, g.static_lateral)
        c = (x - dy * off, y + dx * off)
        statics.append(circle(f"s{k}", c, rng.uniform(*g.static_radius)))

    targets = []
    n_targets = int(rng.integers(g.n_targets[0], g.n_targets[1] + 1))
    for k in range(n_targets):
        w = rng.uniform(0.2, 0.9) * path.length
        x, y, dx, dy, *_ = path.eval_scalar(w)
        rel = rng.uniform(-math.pi, math.pi)
        hdg = math.atan2(dy, dx) + rel
        speed = rng.uniform(*g.target_speed)
        vel = speed * np.array([math.cos(hdg), math.sin(hdg)])
        t_meet = w / g.own_speed
        start = np.array([x, y]) - vel * t_meet
        length = rng.uniform(*g.target_length)
        targets.append(TargetVessel(f"t{k}", tuple(start), tuple(vel), length, length / 4))

    x0, y0, dx0, dy0, *_ = path.eval_scalar(0.0)
    lat = rng.uniform(-g.spawn_lateral, g.spawn_lateral) if g.spawn_lateral > 0 else 0.0
    dpsi = math.radians(rng.uniform(-g.spawn_heading_deg, g.spawn_heading_deg)) if g.spawn_heading_deg > 0 else 0.0
    spawn = VesselState(x0 - dy0 * lat, y0 + dx0 * lat, wrap_angle(math.atan2(dy0, dx0) + dpsi))
    bounds = _auto_bounds(wps, statics, g.bounds_margin)
    return Scenario(wps, statics, targets, spawn, g.goal_radius, g.max_steps, seed, bounds,
                    g.fillet_radius, name="training")


def _clear(scn: Scenario, g: GeneratorConfig) -> bool:
    sp = (scn.spawn.x_n, scn.spawn.y_n)
    goal = scn.path.position(scn.path.length)
    for o in scn.static_obstacles:
        if o.distance(sp) < g.spawn_clearance or o.distance(goal) < g.goal_radius:
            return False
    for t in scn.targets:
        if t.obstacle_at(0.0).distance(sp) < g.spawn_clearance:
            return False
    return not scn.validate()


def generate_training_scenario(seed, gen: GeneratorConfig | None = None) -> Scenario:
    """Random path with scattered circles and straight-line target vessels.

    Fully determined by ``seed``; resampled until the spawn and goal are clear.
    """
    g = gen or GeneratorConfig()
    rng = np.random.default_rng(seed)
    for _ in range(g.max_attempts):
        scn = _sample_once(rng, g, seed)
        if _clear(scn, g):
            return scn
    raise ScenarioError(f"seed {seed}: no valid scenario after {g.max_attempts} attempts")


@dataclass
class EnvConfig:
    model: VesselModel = field(default_factory=dynamics.default_model)
    sensor: SensorConfig = field(default_factory=SensorConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    dt: float = 0.1
    delta_la: float = 3000.0
    collision_distance: float | None = None     # ray-distance threshold, default width / 2
    left_world_reward: float | None = None      # default: r_collision

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("env.dt must be positive")
        if not self.delta_la > 0:
            raise ConfigError("env.delta_la must be positive")
        if self.collision_distance is None:
            self.collision_distance = self.model.width / 2

    @property
    def obs_dim(self) -> int:
        return 6 + 3 * self.sensor.n_sectors


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    done: bool
    cause: str | None
    info: dict


def _segments_intersect(p1, p2, q1, q2):
    """Vectorized proper/improper intersection test between segment sets."""
    def orient(a, b, c):
        return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])
    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return ((d1 * d2) <= 0) & ((d3 * d4) <= 0)


def hull_overlaps(corners: np.ndarray, obstacle: Obstacle) -> bool:
    if obstacle.is_circle:
        c = np.array(obstacle.center)
        a = corners
        b = np.roll(corners, -1, axis=0)
        if point_in_polygon(c[None, :], corners)[0]:
            return True
        ab = b - a
        t = np.clip(np.sum((c - a) * ab, axis=1) / np.sum(ab * ab, axis=1), 0, 1)
        d = np.hypot(*(c - (a + ab * t[:, None])).T)
        return bool(np.min(d) <= obstacle.radius)
    v = obstacle.vertices
    center = corners.mean(axis=0)
    reach = np.hypot(*(corners[0] - center))
    vmin, vmax = v.min(axis=0), v.max(axis=0)
    if np.any(center + reach < vmin) or np.any(center - reach > vmax):
        return False
    if point_in_polygon(corners, v).any() or point_in_polygon(v, corners).any():
        return True
    w = np.roll(v, -1, axis=0)
    near = (np.minimum(v[:, 0], w[:, 0]) <= center[0] + reach) & (np.maximum(v[:, 0], w[:, 0]) >= center[0] - reach) \
        & (np.minimum(v[:, 1], w[:, 1]) <= center[1] + reach) & (np.maximum(v[:, 1], w[:, 1]) >= center[1] - reach)
    if not near.any():
        return False
    a, b = v[near], w[near]
    c1 = corners
    c2 = np.roll(corners, -1, axis=0)
    return bool(_segments_intersect(c1[:, None, :], c2[:, None, :], a[None, :, :], b[None, :, :]).any())


class VesselEnv:
    """Single-vessel episodic environment.

    ``scenario`` may be a fixed :class:`Scenario` or a callable taking a
    ``numpy.random.Generator`` and returning one (sampled on every reset).
    """

    def __init__(self, scenario, config: EnvConfig | None = None, seed=None, log: bool = False):
        self.cfg = config or EnvConfig()
        self._source = scenario
        self.rng = np.random.default_rng(seed)
        self.log_enabled = log
        self.scenario = None
        self.done = True
        self.trajectory = []

    @property
    def obs_dim(self) -> int:
        return self.cfg.obs_dim

    def _obstacles(self, t):
        return list(self.scenario.static_obstacles) + [tv.obstacle_at(t) for tv in self.scenario.targets]

    def _observe(self):
        state = VesselState.from_array(self._x)
        nav = nav_features(self.path, state, self._omega, self.cfg.delta_la)
        self._omega = nav.omega_bar
        self._obs_list = self._obstacles(self.t)
        frame = sense(state, self._obs_list, self.cfg.sensor, self.cfg.model.width)
        obs = np.concatenate([nav.as_array(), perception_vector(frame)])
        return obs, nav, frame, state

    def reset(self, scenario: Scenario | None = None) -> np.ndarray:
        if scenario is None:
            scenario = self._source(self.rng) if callable(self._source) else self._source
        problems = scenario.validate()
        if problems:
            raise ScenarioError(problems)
        self.scenario = scenario
        self.path = scenario.path
        self.t = 0.0
        self.steps = 0
        s = scenario.spawn
        self._x = np.array([s.x_n, s.y_n, wrap_angle(s.psi), s.u, s.v, s.r], dtype=float)
        self._omega = 0.0
        self.done = False
        self.trajectory = []
        obs, nav, frame, state = self._observe()
        self.last_nav = nav
        self.last_frame = frame
        return obs

    @property
    def state(self) -> VesselState:
        return VesselState.from_array(self._x)

    def _collided(self, frame, state) -> bool:
        if np.min(frame.distances) <= self.cfg.collision_distance:
            return True
        m = self.cfg.model
        pos = np.array([state.x_n, state.y_n])
        reach = 0.5 * math.hypot(m.length, m.width)
        corners = None
        for o in self._obs_list:
            if o.is_circle:
                if math.hypot(pos[0] - o.center[0], pos[1] - o.center[1]) > o.radius + reach:
                    continue
            else:
                lo, hi = o.vertices.min(axis=0), o.vertices.max(axis=0)
                if np.any(pos + reach < lo) or np.any(pos - reach > hi):
                    continue
            if corners is None:
                corners = hull_corners(pos, state.psi, m.length, m.width)
            if hull_overlaps(corners, o):
                return True
        return False

    def step(self, action) -> StepResult:
        if self.done:
            raise EpisodeOver("episode is finished; call reset()")
        a = np.clip(np.asarray(action, dtype=float).reshape(2), -1.0, 1.0)
        f = self.cfg.model.scale_action(a)
        self._x = dynamics.rk4_array(self._x, np.array([f.T_u, f.T_r]), self.cfg.model, self.cfg.dt)
        self.steps += 1
        self.t = self.steps * self.cfg.dt
        obs, nav, frame, state = self._observe()
        collided = self._collided(frame, state)
        terms = total_reward(nav, frame, collided, self.cfg.reward)
        reward = terms.total

        cause = None
        if collided:
            cause = "collision"
        elif not self.scenario.in_bounds((state.x_n, state.y_n)):
            cause = "left-world"
            lw = self.cfg.left_world_reward
            reward = self.cfg.reward.r_collision if lw is None else lw
        elif nav.omega_bar >= self.path.length - self.scenario.goal_radius:
            cause = "goal"
        elif self.steps >= self.scenario.max_steps:
            cause = "timeout"
        self.done = cause is not None
        self.last_nav, self.last_frame = nav, frame
        info = {
            "cte": nav.epsilon,
            "lambda_min": terms.lambda_min,
            "progress": nav.progress,
            "r_path": terms.path,
            "r_colav_static": terms.colav_static,
            "r_colav_dynamic": terms.colav_dynamic,
            "truncated": cause == "timeout",
            "projection_converged": nav.converged,
        }
        if self.log_enabled:
            self.trajectory.append(self._record(a, reward, terms, cause, state))
        return StepResult(obs, float(reward), self.done, cause, info)

    def _record(self, action, reward, terms, cause, state) -> dict:
        return {
            "t": round(self.t, 9),
            "step": self.steps,
            "pose": [state.x_n, state.y_n, state.psi],
            "nu": [state.u, state.v, state.r],
            "action": [float(action[0]), float(action[1])],
            "reward": reward,
            "r_path": terms.path,
            "r_colav_static": terms.colav_static,
            "r_colav_dynamic": terms.colav_dynamic,
            "lambda_min": terms.lambda_min,
            "cte": self.last_nav.epsilon,
            "targets": [[tv.id, *tv.position_at(self.t).tolist()] for tv in self.scenario.targets],
            "done": cause,
        }

    def write_log(self, path) -> None:
        """Write the trajectory as JSON lines, preceded by a scenario header."""
        with open(path, "w") as fh:
            fh.write(json.dumps({"scenario": self.scenario.to_dict()}) + "\n")
            for rec in self.trajectory:
                fh.write(json.dumps(rec) + "\n")


def encounter_classifier(own: VesselState, target: VesselState, target_velocity=None,
                         max_range: float = 3000.0, head_on_bearing_deg: float = 22.5,
                         reciprocal_tol_deg: float = 10.0) -> str:
    """COLREGs encounter type as seen from the own ship.

    Returns one of ``head-on``, ``crossing-from-starboard``,
    ``crossing-from-port``, ``overtaking`` or ``none``.
    """
    dn, de = target.x_n - own.x_n, target.y_n - own.y_n
    dist = math.hypot(dn, de)
    if dist > max_range or dist == 0.0:
        return "none"
    c, s = math.cos(own.psi), math.sin(own.psi)
    v_own = np.array([c * own.u - s * own.v, s * own.u + c * own.v])
    if target_velocity is None:
        ct, st = math.cos(target.psi), math.sin(target.psi)
        target_velocity = (ct * target.u - st * target.v, st * target.u + ct * target.v)
    v_rel = np.asarray(target_velocity, dtype=float) - v_own
    closing = dn * v_rel[0] + de * v_rel[1] < 0
    if not closing:
        return "none"
    bearing = wrap_angle(math.atan2(de, dn) - own.psi)
    bearing_from_target = wrap_angle(math.atan2(-de, -dn) - target.psi)
    reciprocal = abs(wrap_angle(target.psi - own.psi - math.pi))
    stern = math.radians(112.5)
    if abs(bearing) <= math.radians(head_on_bearing_deg) and reciprocal <= math.radians(reciprocal_tol_deg):
        return "head-on"
    if abs(bearing_from_target) > stern or abs(bearing) > stern:
        return "overtaking"
    return "crossing-from-starboard" if bearing > 0 else "crossing-from-port"


def _encounter(name, course, distance, target_speed, path_length, target_length, own_speed, dt, half_width):
    # the target reaches the meeting point when the own ship would at own_speed
    meet = distance / 2
    t_meet = meet / own_speed
    vel = target_speed * np.array([math.cos(course), math.sin(course)])
    start = np.array([meet, 0.0]) - vel * t_meet
    tv = TargetVessel("target", tuple(start), tuple(vel), target_length, target_length / 4)
    wps = [(0.0, 0.0), (path_length, 0.0)]
    bounds = (-200.0, path_length + 200.0, -half_width, half_width)
    max_steps = int(math.ceil(1.5 * path_length / own_speed / dt))
    return Scenario(wps, [], [tv], VesselState(0, 0, 0), goal_radius=5.0, max_steps=max_steps,
                    bounds=bounds, name=name)


def head_on_scenario(theta_t_deg: float = 0.0, distance: float = 300.0, target_speed: float = 1.0,
                     path_length: float = 600.0, target_length: float = 8.0, own_speed: float = 2.0,
                     dt: float = 0.5) -> Scenario:
    """Own ship heading north along a straight path, target meeting it on a reciprocal course.

    ``theta_t_deg`` rotates the target's course about the meeting point.
    """
    course = math.pi + math.radians(theta_t_deg)
    return _encounter(f"head-on({theta_t_deg:+g})", course, distance, target_speed, path_length,
                      target_length, own_speed, dt, 300.0)


def crossing_scenario(from_starboard: bool = True, distance: float = 300.0, target_speed: float = 1.0,
                      path_length: float = 600.0, target_length: float = 8.0, own_speed: float = 2.0,
                      dt: float = 0.5) -> Scenario:
    """Target crossing the own ship's path at 90 degrees, timed to meet."""
    course = -math.pi / 2 if from_starboard else math.pi / 2
    side = "starboard" if from_starboard else "port"
    return _encounter(f"crossing-{side}", course, distance, target_speed, path_length,
                      target_length, own_speed, dt, 400.0)


def smoke_configs(n_static: int = 0):
    """Scaled-down environment and generator settings for desk-scale training.

    A 300 m straight path, dt = 0.5 s, look-ahead 30 m, spawn perturbed by up
    to 10 m laterally and 20 degrees in heading, 300 m of sea around the path.
    """
    env_cfg = EnvConfig(dt=0.5, delta_la=30.0)
    gen = GeneratorConfig(
        path_length=(300.0, 300.0),
        n_waypoints=(2, 2),
        max_turn_deg=0.0,
        n_static=(n_static, n_static),
        static_radius=(5.0, 15.0),
        static_lateral=15.0,
        static_omega=(0.15, 0.9),
        n_targets=(0, 0),
        spawn_clearance=15.0,
        spawn_lateral=10.0,
        spawn_heading_deg=20.0,
        goal_radius=5.0,
        max_steps=600,
        bounds_margin=300.0,
    )
    return env_cfg, gen


class ScenarioSampler:
    """Picklable scenario factory: draws a seed from the env RNG per reset."""

    def __init__(self, gen: GeneratorConfig):
        self.gen = gen

    def __call__(self, rng: np.random.Generator) -> Scenario:
        return generate_training_scenario(int(rng.integers(2**63 - 1)), self.gen)


class EnvFactory:
    """Picklable ``seed -> VesselEnv`` factory for training actors."""

    def __init__(self, config: EnvConfig, gen: GeneratorConfig):
        self.config = config
        self.gen = gen

    def __call__(self, seed) -> VesselEnv:
        return VesselEnv(ScenarioSampler(self.gen), self.config, seed=seed)


__all__ += ["ScenarioSampler", "EnvFactory"]
__all__.append("hull_overlaps")
