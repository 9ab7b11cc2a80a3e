"""Desired path representation and path-following navigation features."""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import VesselState, wrap_angle

__all__ = [
    "PathError",
    "Path",
    "NavFeatures",
    "Projection",
    "build_path",
    "project",
    "project_info",
    "cross_track_error",
    "heading_error",
    "lookahead_heading_error",
    "nav_features",
    "K_NR",
]

K_NR = 20
NR_TOL = 1e-6


class PathError(ValueError):
    pass


class Path:
    """Arc-length parameterized C1 curve made of line segments and circular arcs.

    Coordinates are NED (north, east). Segments are stored as flat arrays so
    both scalar and vectorized evaluation are cheap.
    """

    def __init__(self, waypoints, segments):
        self.waypoints = np.asarray(waypoints, dtype=float)
        # each segment: (kind, s0, length, p0 (2,), d0 (2,), center (2,), radius, sign)
        self._kind = np.array([s[0] for s in segments], dtype=int)
        self._s0 = np.array([s[1] for s in segments], dtype=float)
        self._len = np.array([s[2] for s in segments], dtype=float)
        self._p0 = np.array([s[3] for s in segments], dtype=float).reshape(-1, 2)
        self._d0 = np.array([s[4] for s in segments], dtype=float).reshape(-1, 2)
        self._c = np.array([s[5] for s in segments], dtype=float).reshape(-1, 2)
        self._R = np.array([s[6] for s in segments], dtype=float)
        self._sgn = np.array([s[7] for s in segments], dtype=float)
        self._s0_list = self._s0.tolist()
        self._seg_py = [
            (int(s[0]), float(s[1]), float(s[3][0]), float(s[3][1]), float(s[4][0]), float(s[4][1]),
             float(s[5][0]), float(s[5][1]), float(s[6]), float(s[7]))
            for s in segments
        ]
        self.length = float(self._s0[-1] + self._len[-1])

    @property
    def n_segments(self) -> int:
        return len(self._seg_py)

    def _segment_index(self, omega: float) -> int:
        return max(0, bisect.bisect_right(self._s0_list, omega) - 1)

    def eval_scalar(self, omega: float):
        """Return (x, y, dx, dy, ddx, ddy) at clamped arc length ``omega``."""
        omega = min(max(omega, 0.0), self.length)
        kind, s0, px, py, dx, dy, cx, cy, R, sgn = self._seg_py[self._segment_index(omega)]
        s = omega - s0
        if kind == 0:
            return px + dx * s, py + dy * s, dx, dy, 0.0, 0.0
        a = sgn * s / R
        ca, sa = math.cos(a), math.sin(a)
        rx, ry = px - cx, py - cy
        x = cx + ca * rx - sa * ry
        y = cy + sa * rx + ca * ry
        tx = ca * dx - sa * dy
        ty = sa * dx + ca * dy
        return x, y, tx, ty, (cx - x) / (R * R), (cy - y) / (R * R)

    def _eval(self, omega):
        w = np.clip(np.asarray(omega, dtype=float), 0.0, self.length)
        idx = np.clip(np.searchsorted(self._s0, w, side="right") - 1, 0, len(self._s0) - 1)
        s = w - self._s0[idx]
        p0, d0, c = self._p0[idx], self._d0[idx], self._c[idx]
        R = np.where(self._kind[idx] == 1, self._R[idx], 1.0)
        a = np.where(self._kind[idx] == 1, self._sgn[idx] * s / R, 0.0)
        ca, sa = np.cos(a), np.sin(a)
        rel = p0 - c
        arc_p = c + np.stack([ca * rel[..., 0] - sa * rel[..., 1], sa * rel[..., 0] + ca * rel[..., 1]], -1)
        tan = np.stack([ca * d0[..., 0] - sa * d0[..., 1], sa * d0[..., 0] + ca * d0[..., 1]], -1)
        line_p = p0 + d0 * s[..., None]
        is_arc = (self._kind[idx] == 1)[..., None]
        pos = np.where(is_arc, arc_p, line_p)
        dd = np.where(is_arc, (c - pos) / (R * R)[..., None], 0.0)
        return pos, tan, dd

    def position(self, omega) -> np.ndarray:
        """p_d(omega); accepts scalars or arrays, clamps to [0, L]."""
        return self._eval(omega)[0]

    def derivative(self, omega) -> np.ndarray:
        return self._eval(omega)[1]

    def second_derivative(self, omega) -> np.ndarray:
        return self._eval(omega)[2]

    def angle(self, omega) -> float:
        """Path angle atan2(y', x') at ``omega``."""
        _, _, dx, dy, _, _ = self.eval_scalar(omega)
        return math.atan2(dy, dx)

    def sample(self, n: int = 200) -> np.ndarray:
        return self.position(np.linspace(0.0, self.length, n))

    def distance_to(self, pos, n: int = 2000) -> float:
        pts = self.sample(n)
        return float(np.min(np.hypot(*(pts - np.asarray(pos)).T)))


def build_path(waypoints, fillet_radius: float = 2.51) -> Path:
    """Polyline through ``waypoints`` with circular fillets at interior corners.

    Fillets are shrunk where two corners would otherwise overlap; a radius of
    0 keeps sharp corners.
    """
    pts = np.asarray(waypoints, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise PathError("a path needs at least 2 waypoints of (north, east)")
    if not np.all(np.isfinite(pts)):
        raise PathError("waypoints must be finite")
    seg_vec = np.diff(pts, axis=0)
    seg_len = np.hypot(seg_vec[:, 0], seg_vec[:, 1])
    for i, l in enumerate(seg_len):
        if l <= 1e-9:
            raise PathError(f"duplicate consecutive waypoints at index {i + 1}")
    dirs = seg_vec / seg_len[:, None]

    # tangent length consumed by the fillet at each interior waypoint
    n = len(pts)
    tlen = np.zeros(n)
    radius = np.zeros(n)
    turn = np.zeros(n)
    for i in range(1, n - 1):
        d_in, d_out = dirs[i - 1], dirs[i]
        cross = d_in[0] * d_out[1] - d_in[1] * d_out[0]
        dot = float(np.clip(d_in @ d_out, -1.0, 1.0))
        phi = math.atan2(cross, dot)
        turn[i] = phi
        if fillet_radius <= 0 or abs(phi) < 1e-12 or abs(phi) > math.pi - 1e-9:
            continue
        t = fillet_radius * math.tan(abs(phi) / 2)
        t_max = 0.5 * min(seg_len[i - 1], seg_len[i])
        t = min(t, t_max)
        tlen[i] = t
        radius[i] = t / math.tan(abs(phi) / 2)

    segments = []
    s = 0.0
    for i in range(n - 1):
        start = pts[i] + dirs[i] * tlen[i]
        end = pts[i + 1] - dirs[i] * tlen[i + 1]
        l = float(np.hypot(*(end - start)))
        if l > 1e-12:
            segments.append((0, s, l, start, dirs[i], (0.0, 0.0), 0.0, 0.0))
            s += l
        j = i + 1
        if j < n - 1 and radius[j] > 0:
            d_in = dirs[i]
            sgn = 1.0 if turn[j] > 0 else -1.0
            normal = np.array([-d_in[1], d_in[0]]) * sgn
            center = end + normal * radius[j]
            arc_len = radius[j] * abs(turn[j])
            segments.append((1, s, arc_len, end, d_in, center, radius[j], sgn))
            s += arc_len
    return Path(pts, segments)


@dataclass(frozen=True)
class Projection:
    omega: float
    converged: bool
    iterations: int
    fallback: bool


def _grid_refine(path: Path, pos, center: float, half_width: float, n: int = 2001) -> float:
    lo = max(0.0, center - half_width)
    hi = min(path.length, center + half_width)
    grid = np.linspace(lo, hi, n)
    pts = path.position(grid)
    d2 = np.sum((pts - pos) ** 2, axis=1)
    k = int(np.argmin(d2))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, n - 1)]
    # golden-section on the bracketing cells
    g = (math.sqrt(5) - 1) / 2

    def f(w):
        x, y, *_ = path.eval_scalar(w)
        return (x - pos[0]) ** 2 + (y - pos[1]) ** 2

    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(80):
        if b - a < 1e-9:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def project_info(path: Path, pos, omega_init: float = 0.0, max_iter: int = K_NR) -> Projection:
    """Newton-Raphson projection of ``pos`` onto the path, warm-started."""
    px, py = float(pos[0]), float(pos[1])
    L = path.length
    w = min(max(float(omega_init), 0.0), L)
    for it in range(1, max_iter + 1):
        x, y, dx, dy, ddx, ddy = path.eval_scalar(w)
        ex, ey = x - px, y - py
        g = ex * dx + ey * dy
        h = dx * dx + dy * dy + ex * ddx + ey * ddy
        if h <= 1e-6:
            # away from a local minimum: plain gradient step
            h = 1.0
        w_new = min(max(w - g / h, 0.0), L)
        if abs(w_new - w) < NR_TOL:
            return Projection(w_new, True, it, False)
        w = w_new
    half = max(100.0, 4.0 * math.hypot(px - path.eval_scalar(omega_init)[0], py - path.eval_scalar(omega_init)[1]))
    w = _grid_refine(path, np.array([px, py]), float(omega_init), half)
    return Projection(w, False, max_iter, True)


def project(path: Path, pos, omega_init: float = 0.0) -> float:
    return project_info(path, pos, omega_init).omega


def cross_track_error(path: Path, pos, omega_bar: float) -> float:
    x, y, *_ = path.eval_scalar(omega_bar)
    return math.hypot(float(pos[0]) - x, float(pos[1]) - y)


def heading_error(path: Path, state: VesselState, omega_bar: float, delta_la: float) -> float:
    """Heading change needed to point straight at the look-ahead point."""
    x, y, *_ = path.eval_scalar(min(omega_bar + delta_la, path.length))
    dn, de = x - state.x_n, y - state.y_n
    if dn == 0.0 and de == 0.0:
        return 0.0
    return wrap_angle(math.atan2(de, dn) - state.psi)


def lookahead_heading_error(path: Path, state: VesselState, omega_bar: float, delta_la: float) -> float:
    return wrap_angle(path.angle(min(omega_bar + delta_la, path.length)) - state.psi)


@dataclass(frozen=True)
class NavFeatures:
    u: float
    v: float
    r: float
    epsilon: float
    psi_err: float
    psi_err_la: float
    omega_bar: float
    progress: float
    converged: bool = True

    def as_array(self) -> np.ndarray:
        """The 6 agent-facing features in observation order."""
        return np.array([self.u, self.v, self.r, self.epsilon, self.psi_err, self.psi_err_la])


def nav_features(path: Path, state: VesselState, omega_prev: float, delta_la: float) -> NavFeatures:
    proj = project_info(path, (state.x_n, state.y_n), omega_prev)
    w = proj.omega
    return NavFeatures(
        u=state.u,
        v=state.v,
        r=state.r,
        epsilon=cross_track_error(path, (state.x_n, state.y_n), w),
        psi_err=heading_error(path, state, w, delta_la),
        psi_err_la=lookahead_heading_error(path, state, w, delta_la),
        omega_bar=w,
        progress=w / path.length,
        converged=proj.converged,
    )
