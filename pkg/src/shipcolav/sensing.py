"""Rangefinder simulation, sector partitioning and pooling, perception features.

Ray ``i`` has body-relative angle ``-pi + 2*pi*i/N``: ray 0 points astern,
ray N/4 to port, ray N/2 dead ahead and ray 3N/4 to starboard. Angles follow
the NED convention, positive towards starboard. Rays start at the vessel
origin; the own hull is never an obstacle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import ConfigError, VesselState

__all__ = [
    "Obstacle",
    "circle",
    "polygon",
    "vessel_hull",
    "SensorConfig",
    "SensorFrame",
    "RayScan",
    "cast_rays",
    "sector_map",
    "sector_of",
    "pool_min",
    "pool_max",
    "pool_feasibility",
    "closeness",
    "decompose_velocity",
    "sense",
    "perception_vector",
    "point_in_polygon",
]


@dataclass
class Obstacle:
    """Circle (``center``, ``radius``) or simple polygon (``vertices``)."""

    id: str
    center: tuple | None = None
    radius: float = 0.0
    vertices: np.ndarray | None = None
    velocity: tuple = (0.0, 0.0)
    dynamic: bool = False

    def __post_init__(self):
        if self.vertices is not None:
            v = np.asarray(self.vertices, dtype=float)
            if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
                raise ValueError(f"obstacle {self.id}: polygon needs >= 3 (north, east) vertices")
            if np.allclose(v[0], v[-1]) and len(v) > 3:
                v = v[:-1]
            self.vertices = v
        elif self.center is None or not self.radius > 0:
            raise ValueError(f"obstacle {self.id}: circle needs a center and positive radius")
        else:
            self.center = (float(self.center[0]), float(self.center[1]))
            self.radius = float(self.radius)
        self.velocity = (float(self.velocity[0]), float(self.velocity[1]))

    @property
    def is_circle(self) -> bool:
        return self.vertices is None

    def contains(self, point) -> bool:
        if self.is_circle:
            return math.hypot(point[0] - self.center[0], point[1] - self.center[1]) < self.radius
        return bool(point_in_polygon(np.asarray(point, float)[None, :], self.vertices)[0])

    def distance(self, point) -> float:
        """Distance from ``point`` to the obstacle boundary (0 if inside)."""
        p = np.asarray(point, dtype=float)
        if self.is_circle:
            return max(0.0, math.hypot(p[0] - self.center[0], p[1] - self.center[1]) - self.radius)
        if self.contains(p):
            return 0.0
        a = self.vertices
        b = np.roll(a, -1, axis=0)
        return float(np.min(_point_segment_distance(p, a, b)))


def circle(id, center, radius, velocity=(0.0, 0.0), dynamic=False) -> Obstacle:
    return Obstacle(str(id), center=center, radius=radius, velocity=velocity, dynamic=dynamic)


def polygon(id, vertices, velocity=(0.0, 0.0), dynamic=False) -> Obstacle:
    return Obstacle(str(id), vertices=vertices, velocity=velocity, dynamic=dynamic)


def hull_corners(position, heading: float, length: float, width: float) -> np.ndarray:
    c, s = math.cos(heading), math.sin(heading)
    fwd = np.array([c, s]) * (length / 2)
    side = np.array([-s, c]) * (width / 2)
    p = np.asarray(position, dtype=float)
    return np.array([p + fwd - side, p + fwd + side, p - fwd + side, p - fwd - side])


def vessel_hull(id, position, heading, length, width, velocity=(0.0, 0.0)) -> Obstacle:
    """A target vessel sensed as a (length x width) rectangle."""
    return Obstacle(str(id), vertices=hull_corners(position, heading, length, width),
                    velocity=velocity, dynamic=True)


def _point_segment_distance(p, a, b):
    ab = b - a
    denom = np.sum(ab * ab, axis=-1)
    t = np.clip(np.sum((p - a) * ab, axis=-1) / np.where(denom > 0, denom, 1.0), 0.0, 1.0)
    proj = a + ab * t[..., None]
    return np.hypot(*(p - proj).T)


def point_in_polygon(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Even-odd rule containment for an (k, 2) array of points."""
    pts = np.atleast_2d(points)
    a = vertices
    b = np.roll(vertices, -1, axis=0)
    px = pts[:, 0][:, None]
    py = pts[:, 1][:, None]
    ay, by = a[:, 1][None, :], b[:, 1][None, :]
    ax, bx = a[:, 0][None, :], b[:, 0][None, :]
    straddle = (ay > py) != (by > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = ax + (py - ay) * (bx - ax) / (by - ay)
    crossings = straddle & (px < xint)
    return (np.count_nonzero(crossings, axis=1) % 2) == 1


@dataclass
class SensorConfig:
    n_sensors: int = 180
    max_range: float = 1500.0
    n_sectors: int = 9
    gamma_c: float = 13.0
    pooling: str = "feasibility"

    def __post_init__(self):
        if self.n_sensors < self.n_sectors or self.n_sectors < 1:
            raise ConfigError("need n_sensors >= n_sectors >= 1")
        if not self.max_range > 0:
            raise ConfigError("max_range must be positive")
        if self.pooling not in ("feasibility", "min", "max"):
            raise ConfigError(f"unknown pooling {self.pooling!r}")
        self.sectors = sector_map(self.n_sensors, self.n_sectors, self.gamma_c)
        counts = np.bincount(self.sectors, minlength=self.n_sectors)
        missing = np.flatnonzero(counts == 0)
        if len(missing):
            raise ConfigError(
                f"sector map is not surjective for gamma_c={self.gamma_c}: "
                f"sectors {missing.tolist()} receive no sensors"
            )
        self.angle_step = 2.0 * math.pi / self.n_sensors
        self.angles = -math.pi + self.angle_step * np.arange(self.n_sensors)
        self.sector_centers = np.array(
            [self.angles[self.sectors == k].mean() for k in range(self.n_sectors)]
        )
        self._bounds = np.concatenate([[0], np.cumsum(counts)])

    @property
    def theta(self) -> float:
        return self.angle_step

    def sector_slices(self):
        return [slice(self._bounds[k], self._bounds[k + 1]) for k in range(self.n_sectors)]


def sector_map(n_sensors: int, n_sectors: int, gamma_c: float) -> np.ndarray:
    """Logistic sensor-to-sector map, narrow sectors ahead, wide astern."""
    i = np.arange(n_sensors)

    def sig(z):
        return 1.0 / (1.0 + np.exp(-z))

    k = np.floor(n_sectors * sig(gamma_c * i / n_sensors - gamma_c / 2)
                 - n_sectors * sig(-gamma_c / 2)).astype(int)
    return np.clip(k, 0, n_sectors - 1)


def sector_of(i: int, cfg: SensorConfig) -> int:
    if not 0 <= i < cfg.n_sensors:
        raise IndexError(f"sensor index {i} out of range")
    return int(cfg.sectors[i])


def pool_min(x) -> float:
    return float(np.min(x))


def pool_max(x) -> float:
    return float(np.max(x))


def pool_feasibility(x, theta: float, width: float) -> float:
    """Farthest distance in a sector that a vessel of ``width`` can reach.

    Distance levels are visited in ascending order. At a level ``x_i`` every
    ray farther than ``x_i`` widens the current opening by the arc length
    ``theta * x_i``; a ray at or inside the level closes it (adding half an
    arc). The first level whose widest opening is at most ``width`` is
    returned; if all levels are passable, the largest measurement is.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if x.min() == x.max():
        # every level is the same one, so it is returned whether passable or not
        return float(x[0])
    order = np.argsort(x, kind="stable")
    levels = x[order]
    d = theta * levels                                  # arc length per level
    free = x[None, :] > levels[:, None]                 # (level, ray)
    blk = ~free
    cf = np.cumsum(free, axis=1)
    last = np.maximum.accumulate(np.where(blk, cf, 0), axis=1)
    prev = np.concatenate([np.zeros((n, 1), dtype=cf.dtype), last[:, :-1]], axis=1)
    nblk_before = np.cumsum(blk, axis=1) - blk
    head = np.where(nblk_before == 0, 0.5, 0.0)
    at_blk = np.where(blk, (cf - prev + 0.5 + head) * d[:, None], -np.inf)
    any_blk = blk.any(axis=1)
    tail = (cf[:, -1] - last[:, -1] + np.where(any_blk, 0.0, 0.5)) * d
    widest = np.maximum(at_blk.max(axis=1), tail)
    blocked = ~(widest > width)
    if blocked.any():
        return float(levels[np.argmax(blocked)])
    return float(levels[-1])


def closeness(d, max_range: float):
    """Log-scaled closeness: 1 at contact, 0 at or beyond sensor range."""
    c = np.clip(1.0 - np.log(np.asarray(d, dtype=float) + 1.0) / math.log(max_range + 1.0), 0.0, 1.0)
    return float(c) if np.ndim(c) == 0 else c


def decompose_velocity(velocity, sector_angle: float, pose: VesselState):
    """Obstacle NED velocity in a sector frame.

    The frame's y-axis lies along the sector center line pointing at the
    vessel, so an approaching obstacle has ``v_y > 0``.
    """
    a = pose.psi + sector_angle
    ey = (-math.cos(a), -math.sin(a))
    ex = (ey[1], -ey[0])
    vn, ve = float(velocity[0]), float(velocity[1])
    return vn * ex[0] + ve * ex[1], vn * ey[0] + ve * ey[1]


@dataclass
class RayScan:
    distances: np.ndarray
    hit: np.ndarray                 # obstacle index per ray, -1 for none
    angles: np.ndarray              # body-relative


def cast_rays(pose: VesselState, obstacles, cfg: SensorConfig) -> RayScan:
    """Nearest boundary intersection per ray, clipped to the sensor range."""
    N = cfg.n_sensors
    S = cfg.max_range
    ox, oy = pose.x_n, pose.y_n
    ang = pose.psi + cfg.angles
    dx, dy = np.cos(ang), np.sin(ang)
    dist = np.full(N, S)
    hit = np.full(N, -1)

    circles = [(k, o) for k, o in enumerate(obstacles) if o.is_circle]
    if circles:
        idx = np.array([k for k, _ in circles])
        c = np.array([o.center for _, o in circles])
        R = np.array([o.radius for _, o in circles])
        rx, ry = c[:, 0] - ox, c[:, 1] - oy
        near = np.hypot(rx, ry) - R < S
        if near.any():
            idx, rx, ry, R = idx[near], rx[near], ry[near], R[near]
            b = dx[:, None] * rx[None, :] + dy[:, None] * ry[None, :]
            cc = (rx * rx + ry * ry - R * R)[None, :]
            disc = b * b - cc
            sq = np.sqrt(np.maximum(disc, 0.0))
            t = b - sq
            t = np.where(cc <= 0.0, 0.0, t)  # origin inside the circle
            valid = (disc >= 0.0) & (t >= 0.0)
            t = np.where(valid, t, np.inf)
            j = np.argmin(t, axis=1)
            tmin = t[np.arange(N), j]
            better = tmin < dist
            dist = np.where(better, tmin, dist)
            hit = np.where(better, idx[j], hit)

    polys = [(k, o) for k, o in enumerate(obstacles) if not o.is_circle]
    if polys:
        a_list, b_list, own = [], [], []
        inside = []
        for k, o in polys:
            v = o.vertices
            w = np.roll(v, -1, axis=0)
            a_list.append(v)
            b_list.append(w)
            own.append(np.full(len(v), k))
        a = np.concatenate(a_list)
        b = np.concatenate(b_list)
        own = np.concatenate(own)
        origin = np.array([ox, oy])
        keep = _point_segment_distance(origin, a, b) < S
        if keep.any():
            a, b, own = a[keep], b[keep], own[keep]
            ex, ey = b[:, 0] - a[:, 0], b[:, 1] - a[:, 1]
            qx, qy = a[:, 0] - ox, a[:, 1] - oy
            den = dx[:, None] * ey[None, :] - dy[:, None] * ex[None, :]
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (qx[None, :] * ey[None, :] - qy[None, :] * ex[None, :]) / den
                s = (qx[None, :] * dy[:, None] - qy[None, :] * dx[:, None]) / den
            valid = (np.abs(den) > 1e-15) & (t >= 0.0) & (s >= 0.0) & (s <= 1.0)
            t = np.where(valid, t, np.inf)
            j = np.argmin(t, axis=1)
            tmin = t[np.arange(N), j]
            better = tmin < dist
            dist = np.where(better, tmin, dist)
            hit = np.where(better, own[j], hit)
            for k in np.unique(own):
                if obstacles[k].contains(origin):
                    inside.append(k)
        for k in inside:
            dist[:] = 0.0
            hit[:] = k
    return RayScan(np.minimum(dist, S), hit, cfg.angles.copy())


@dataclass
class SensorFrame:
    distances: np.ndarray
    angles: np.ndarray
    hit: np.ndarray
    hit_dynamic: np.ndarray
    ray_vy: np.ndarray              # velocity of a hit dynamic obstacle towards the vessel along the ray
    pooled: np.ndarray
    closeness: np.ndarray
    sector_velocity: np.ndarray     # (D, 2): v_x, v_y of the closest dynamic obstacle per sector
    max_range: float = 1500.0
    hit_ids: list = field(default_factory=list)


def _pool(cfg: SensorConfig, x, width):
    if cfg.pooling == "min":
        return pool_min(x)
    if cfg.pooling == "max":
        return pool_max(x)
    return pool_feasibility(x, cfg.angle_step, width)


def sense(pose: VesselState, obstacles, cfg: SensorConfig, width: float) -> SensorFrame:
    """Cast rays and compute pooled sector distances, closeness and velocities."""
    scan = cast_rays(pose, obstacles, cfg)
    N, D = cfg.n_sensors, cfg.n_sectors
    dyn = np.array([o.dynamic for o in obstacles] + [False], dtype=bool)
    hit_dynamic = dyn[scan.hit]  # -1 indexes the trailing False
    pooled = np.array([_pool(cfg, scan.distances[sl], width) for sl in cfg.sector_slices()])

    ray_vy = np.zeros(N)
    sector_vel = np.zeros((D, 2))
    if hit_dynamic.any():
        ang = pose.psi + cfg.angles
        rays = np.flatnonzero(hit_dynamic)
        vel = np.array([obstacles[scan.hit[i]].velocity for i in rays])
        ray_vy[rays] = -(vel[:, 0] * np.cos(ang[rays]) + vel[:, 1] * np.sin(ang[rays]))
        # each dynamic obstacle belongs to the sector of its nearest hitting ray
        best = {}
        for i in rays:
            k = int(scan.hit[i])
            if k not in best or scan.distances[i] < scan.distances[best[k]]:
                best[k] = i
        closest = {}
        for k, i in best.items():
            s = int(cfg.sectors[i])
            if s not in closest or scan.distances[i] < scan.distances[closest[s][1]]:
                closest[s] = (k, i)
        for s, (k, _) in closest.items():
            sector_vel[s] = decompose_velocity(obstacles[k].velocity, cfg.sector_centers[s], pose)

    hit_ids = [obstacles[k].id if k >= 0 else None for k in scan.hit]
    return SensorFrame(
        distances=scan.distances,
        angles=scan.angles,
        hit=scan.hit,
        hit_dynamic=hit_dynamic,
        ray_vy=ray_vy,
        pooled=pooled,
        closeness=closeness(pooled, cfg.max_range),
        sector_velocity=sector_vel,
        max_range=cfg.max_range,
        hit_ids=hit_ids,
    )


def perception_vector(frame: SensorFrame) -> np.ndarray:
    """[c_1, v_x1, v_y1, ..., c_D, v_xD, v_yD]."""
    return np.column_stack([frame.closeness, frame.sector_velocity]).reshape(-1)
