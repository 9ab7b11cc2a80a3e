"""Real-world inputs: UTM zone 33 projection, terrain rasters, AIS logs, replay scenarios.

The planar world frame is UTM zone 33 with ``north = northing`` and
``east = easting``, whatever the natural zone of the data.

Terrain files are ESRI ASCII grids::

    ncols        <int>
    nrows        <int>
    xllcorner    <easting of the lower-left cell corner>   (or xllcenter)
    yllcorner    <northing of the lower-left cell corner>  (or yllcenter)
    cellsize     <m>
    NODATA_value <value>                                    (optional)
    <nrows lines of ncols elevations, northernmost row first>

AIS files are comma-separated with the header
``id,timestamp,lat,lon,speed,heading``: ``timestamp`` in ISO 8601 or unix
seconds, ``lat``/``lon`` in degrees, ``speed`` in knots and ``heading`` in
degrees from north (both may be empty).
"""
from __future__ import annotations

import csv
import hashlib
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .dynamics import VesselState
from .env import Scenario, ScenarioError, TargetVessel
from .sensing import Obstacle, polygon

__all__ = [
    "latlon_to_utm33",
    "utm33_to_latlon",
    "TerrainGrid",
    "TerrainParseError",
    "load_terrain",
    "write_terrain",
    "terrain_to_obstacles",
    "AisTrack",
    "parse_ais",
    "load_ais",
    "build_replay_scenario",
    "PRESETS",
    "load_preset",
    "NODATA_SENTINEL",
    "KNOT",
    "sample_file",
]

log = logging.getLogger(__name__)

# WGS84
_A = 6378137.0
_F = 1.0 / 298.257223563
_K0 = 0.9996
_E0 = 500000.0
_LON0 = math.radians(15.0)
_N = _F / (2.0 - _F)
_RECT = _A / (1.0 + _N) * (1.0 + _N ** 2 / 4.0 + _N ** 4 / 64.0)
_ALPHA = (
    _N / 2 - 2 * _N ** 2 / 3 + 5 * _N ** 3 / 16 + 41 * _N ** 4 / 180,
    13 * _N ** 2 / 48 - 3 * _N ** 3 / 5 + 557 * _N ** 4 / 1440,
    61 * _N ** 3 / 240 - 103 * _N ** 4 / 140,
    49561 * _N ** 4 / 161280,
)
_BETA = (
    _N / 2 - 2 * _N ** 2 / 3 + 37 * _N ** 3 / 96 - _N ** 4 / 360,
    _N ** 2 / 48 + _N ** 3 / 15 - 437 * _N ** 4 / 1440,
    17 * _N ** 3 / 480 - 37 * _N ** 4 / 840,
    4397 * _N ** 4 / 161280,
)
_DELTA = (
    2 * _N - 2 * _N ** 2 / 3 - 2 * _N ** 3 + 116 * _N ** 4 / 45,
    7 * _N ** 2 / 3 - 8 * _N ** 3 / 5 - 227 * _N ** 4 / 45,
    56 * _N ** 3 / 15 - 136 * _N ** 4 / 35,
    4279 * _N ** 4 / 630,
)
_E2N = 2.0 * math.sqrt(_N) / (1.0 + _N)

KNOT = 1852.0 / 3600.0
NODATA_SENTINEL = -9999.0


def latlon_to_utm33(lat, lon):
    """Geodetic degrees to UTM zone 33 (easting, northing) in metres.

    Transverse Mercator series in the third flattening, accurate to well
    below a millimetre near the zone. Arrays are accepted.
    """
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    if np.any(~np.isfinite(lat)) or np.any(~np.isfinite(lon)):
        raise ValueError("latitude and longitude must be finite")
    if np.any((lat <= -80.0) | (lat >= 84.0)):
        raise ValueError("latitude outside the UTM domain (-80, 84)")
    phi = np.radians(lat)
    dlon = np.radians(lon) - _LON0
    s = np.sin(phi)
    t = np.sinh(np.arctanh(s) - _E2N * np.arctanh(_E2N * s))
    xi_p = np.arctan2(t, np.cos(dlon))
    eta_p = np.arctanh(np.sin(dlon) / np.sqrt(1.0 + t * t))
    xi, eta = xi_p.copy(), eta_p.copy()
    for j, a in enumerate(_ALPHA, start=1):
        xi = xi + a * np.sin(2 * j * xi_p) * np.cosh(2 * j * eta_p)
        eta = eta + a * np.cos(2 * j * xi_p) * np.sinh(2 * j * eta_p)
    easting = _E0 + _K0 * _RECT * eta
    northing = _K0 * _RECT * xi + np.where(lat < 0, 10_000_000.0, 0.0)
    if easting.ndim == 0:
        return float(easting), float(northing)
    return easting, northing


def utm33_to_latlon(easting, northing, southern: bool = False):
    """Inverse of :func:`latlon_to_utm33`; returns (lat, lon) in degrees."""
    e = np.asarray(easting, dtype=float)
    n = np.asarray(northing, dtype=float) - (10_000_000.0 if southern else 0.0)
    xi = n / (_K0 * _RECT)
    eta = (e - _E0) / (_K0 * _RECT)
    xi_p, eta_p = xi.copy(), eta.copy()
    for j, b in enumerate(_BETA, start=1):
        xi_p = xi_p - b * np.sin(2 * j * xi) * np.cosh(2 * j * eta)
        eta_p = eta_p - b * np.cos(2 * j * xi) * np.sinh(2 * j * eta)
    chi = np.arcsin(np.sin(xi_p) / np.cosh(eta_p))
    phi = chi.copy()
    for j, d in enumerate(_DELTA, start=1):
        phi = phi + d * np.sin(2 * j * chi)
    lon = _LON0 + np.arctan2(np.sinh(eta_p), np.cos(xi_p))
    lat, lon = np.degrees(phi), np.degrees(lon)
    if lat.ndim == 0:
        return float(lat), float(lon)
    return lat, lon


def sample_file(name: str) -> Path:
    """Path of a bundled synthetic fixture: ``sample_terrain.asc`` or ``sample_ais.csv``."""
    from importlib import resources
    p = Path(str(resources.files("shipcolav.resources").joinpath(name)))
    if not p.is_file():
        raise FileNotFoundError(f"no bundled sample named {name!r}")
    return p


# -- terrain ----------------------------------------------------------------------

class TerrainParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class TerrainGrid:
    """Elevation raster; ``origin`` is the (east, north) of the lower-left cell corner."""

    origin: tuple
    cell_size: float
    elevation: np.ndarray           # rows x cols, row 0 northernmost

    def __post_init__(self):
        self.elevation = np.asarray(self.elevation, dtype=float)
        if not self.cell_size > 0:
            raise ValueError("cell size must be positive")
        if self.elevation.ndim != 2 or 0 in self.elevation.shape:
            raise ValueError("elevation must be a non-empty 2-D array")
        if not np.all(np.isfinite(self.elevation)):
            raise ValueError("elevations must be finite")
        self.origin = (float(self.origin[0]), float(self.origin[1]))

    @property
    def shape(self):
        return self.elevation.shape

    def cell_center(self, row, col):
        """(north, east) of a cell center."""
        nrows = self.shape[0]
        east = self.origin[0] + (np.asarray(col) + 0.5) * self.cell_size
        north = self.origin[1] + (nrows - np.asarray(row) - 0.5) * self.cell_size
        return north, east

    def bounds(self):
        """(north_min, north_max, east_min, east_max)."""
        nrows, ncols = self.shape
        e0, n0 = self.origin
        return (n0, n0 + nrows * self.cell_size, e0, e0 + ncols * self.cell_size)

    def checksum(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.elevation, dtype="<f8").tobytes()).hexdigest()


_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "xllcenter", "yllcenter", "cellsize", "nodata_value")


def load_terrain(path) -> TerrainGrid:
    """Parse an ESRI ASCII grid; no-data cells become ``NODATA_SENTINEL``."""
    lines = Path(path).read_text().splitlines()
    header = {}
    k = 0
    while k < len(lines):
        parts = lines[k].split()
        if not parts:
            k += 1
            continue
        key = parts[0].lower()
        if key not in _HEADER_KEYS:
            break
        if len(parts) != 2:
            raise TerrainParseError(k + 1, f"header entry {parts[0]!r} needs exactly one value")
        try:
            header[key] = float(parts[1])
        except ValueError:
            raise TerrainParseError(k + 1, f"header value {parts[1]!r} is not a number") from None
        k += 1
    for req in ("ncols", "nrows", "cellsize"):
        if req not in header:
            raise TerrainParseError(k + 1, f"missing header entry {req}")
    ncols, nrows = int(header["ncols"]), int(header["nrows"])
    if ncols != header["ncols"] or nrows != header["nrows"] or ncols < 1 or nrows < 1:
        raise TerrainParseError(1, "ncols and nrows must be positive integers")
    cs = header["cellsize"]
    if not cs > 0:
        raise TerrainParseError(1, "cellsize must be positive")
    if "xllcorner" in header and "yllcorner" in header:
        origin = (header["xllcorner"], header["yllcorner"])
    elif "xllcenter" in header and "yllcenter" in header:
        origin = (header["xllcenter"] - cs / 2, header["yllcenter"] - cs / 2)
    else:
        raise TerrainParseError(k + 1, "missing xllcorner/yllcorner (or xllcenter/yllcenter)")
    nodata = header.get("nodata_value")

    rows = []
    for ln in range(k, len(lines)):
        parts = lines[ln].split()
        if not parts:
            continue
        if len(rows) == nrows:
            raise TerrainParseError(ln + 1, f"more than {nrows} data rows")
        if len(parts) != ncols:
            raise TerrainParseError(ln + 1, f"expected {ncols} values, found {len(parts)}")
        try:
            rows.append([float(x) for x in parts])
        except ValueError as exc:
            raise TerrainParseError(ln + 1, str(exc)) from None
    if len(rows) != nrows:
        raise TerrainParseError(len(lines), f"expected {nrows} data rows, found {len(rows)}")
    elev = np.array(rows, dtype=float)
    if nodata is not None:
        elev[elev == nodata] = NODATA_SENTINEL
    elev[~np.isfinite(elev)] = NODATA_SENTINEL
    return TerrainGrid(origin, cs, elev)


def write_terrain(grid: TerrainGrid, path, nodata: float = NODATA_SENTINEL) -> None:
    nrows, ncols = grid.shape
    out = [
        f"ncols {ncols}",
        f"nrows {nrows}",
        f"xllcorner {grid.origin[0]!r}",
        f"yllcorner {grid.origin[1]!r}",
        f"cellsize {grid.cell_size!r}",
        f"NODATA_value {nodata!r}",
    ]
    out += [" ".join(repr(float(v)) for v in row) for row in grid.elevation]
    Path(path).write_text("\n".join(out) + "\n")


def _signed_area(p: np.ndarray) -> float:
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def terrain_to_obstacles(grid: TerrainGrid, sea_level: float = 0.0, tolerance: float = 5.0,
                         min_area: float = 0.0, prefix: str = "land") -> list[Obstacle]:
    """Coastline polygons around cells above ``sea_level``.

    Marching squares on the cell centers, then Douglas-Peucker simplification
    with a maximum deviation of ``tolerance`` metres. Small islands are kept
    unless their area is below ``min_area``; lakes inside land are dropped.
    """
    from skimage.measure import approximate_polygon, find_contours

    low = min(float(grid.elevation.min()), sea_level) - 1.0
    padded = np.pad(grid.elevation, 1, constant_values=low)
    contours = find_contours(padded, sea_level, fully_connected="high", positive_orientation="high")
    nrows = grid.shape[0]
    cs = grid.cell_size
    obstacles = []
    for c in contours:
        if len(c) < 4 or not np.allclose(c[0], c[-1]):
            continue
        # (row, col) -> (north, east); row/col are offset by the padding
        north = grid.origin[1] + (nrows - (c[:, 0] - 1) - 0.5) * cs
        east = grid.origin[0] + ((c[:, 1] - 1) + 0.5) * cs
        pts = np.column_stack([north, east])
        # land lies on the left of the contour in (row, col), i.e. the loop
        # is clockwise in (north, east)
        area = -_signed_area(pts[:-1])
        if area <= 0:
            continue
        if area < min_area:
            continue
        simple = approximate_polygon(pts, tolerance) if tolerance > 0 else pts
        # small islands collapse under a tolerance comparable to their size; keep them whole
        if len(simple) < 5 or -_signed_area(simple[:-1]) < 0.75 * area:
            simple = pts
        obstacles.append(polygon(f"{prefix}{len(obstacles)}", simple[:-1]))
    return obstacles


# -- AIS ----------------------------------------------------------------------------

@dataclass
class AisTrack:
    id: str
    times: np.ndarray               # unix seconds, strictly increasing
    lat: np.ndarray
    lon: np.ndarray
    speed: np.ndarray               # knots, nan where missing
    heading: np.ndarray             # degrees, nan where missing
    north: np.ndarray = field(init=False)
    east: np.ndarray = field(init=False)

    def __post_init__(self):
        for name in ("times", "lat", "lon", "speed", "heading"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if np.any(np.diff(self.times) <= 0):
            raise ValueError(f"track {self.id}: timestamps must be strictly increasing")
        e, n = latlon_to_utm33(self.lat, self.lon)
        self.east, self.north = np.atleast_1d(e), np.atleast_1d(n)

    def __len__(self):
        return len(self.times)

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.north, self.east])

    def derived_speed(self) -> np.ndarray:
        """Speed over ground between consecutive fixes, m/s."""
        d = np.hypot(np.diff(self.north), np.diff(self.east))
        return d / np.diff(self.times)

    def position_at(self, t: float) -> np.ndarray:
        return np.array([np.interp(t, self.times, self.north), np.interp(t, self.times, self.east)])

    def to_target(self, t0: float, t1: float | None = None, length: float = 40.0, width: float = 10.0,
                  origin=(0.0, 0.0)) -> TargetVessel:
        """Target vessel replaying this track with time measured from ``t0``."""
        keep = np.ones(len(self), dtype=bool) if t1 is None else self.times <= t1
        t = self.times[keep] - t0
        pts = self.points[keep] - np.asarray(origin, dtype=float)
        return TargetVessel(self.id, times=t, points=pts, length=length, width=width)


def _parse_time(s: str) -> float:
    s = s.strip()
    try:
        return float(s)
    except ValueError:
        pass
    dt = datetime.fromisoformat(s.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def _opt_float(s) -> float:
    s = (s or "").strip()
    return float(s) if s else float("nan")


def parse_ais(path, max_gap: float = 600.0) -> tuple[list[AisTrack], int]:
    """Return (tracks, number of skipped rows).

    Rows are grouped by id and sorted by time; duplicate timestamps keep the
    first fix, and gaps longer than ``max_gap`` seconds start a new track.
    """
    rows = {}
    skipped = 0
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return [], 0
        missing = {"id", "timestamp", "lat", "lon"} - {f.strip() for f in reader.fieldnames}
        if missing:
            raise ValueError(f"AIS header lacks columns {sorted(missing)}")
        for row in reader:
            row = {(k or "").strip(): v for k, v in row.items()}
            try:
                t = _parse_time(row["timestamp"])
                lat, lon = float(row["lat"]), float(row["lon"])
                if not (-80 < lat < 84 and math.isfinite(lon)):
                    raise ValueError("position out of range")
                rec = (t, lat, lon, _opt_float(row.get("speed")), _opt_float(row.get("heading")))
                vid = row["id"].strip()
                if not vid:
                    raise ValueError("empty id")
            except (KeyError, ValueError, TypeError, AttributeError):
                skipped += 1
                continue
            rows.setdefault(vid, []).append(rec)
    tracks = []
    for vid in sorted(rows):
        recs = sorted(rows[vid], key=lambda r: r[0])
        dedup = [recs[0]]
        for r in recs[1:]:
            if r[0] > dedup[-1][0]:
                dedup.append(r)
        arr = np.array(dedup, dtype=float)
        cuts = np.flatnonzero(np.diff(arr[:, 0]) > max_gap) + 1
        pieces = np.split(arr, cuts)
        for k, p in enumerate(pieces):
            tid = vid if len(pieces) == 1 else f"{vid}#{k}"
            tracks.append(AisTrack(tid, p[:, 0], p[:, 1], p[:, 2], p[:, 3], p[:, 4]))
    return tracks, skipped


def load_ais(path, max_gap: float = 600.0) -> list[AisTrack]:
    tracks, skipped = parse_ais(path, max_gap)
    if skipped:
        log.warning("skipped %d unparseable AIS rows in %s", skipped, path)
    return tracks


# -- replay scenarios ------------------------------------------------------------------

def _first_land_waypoint(waypoints: np.ndarray, land: list[Obstacle], step: float = 5.0):
    for i, p in enumerate(waypoints):
        if any(o.contains(p) for o in land):
            return i
        if i + 1 < len(waypoints):
            q = waypoints[i + 1]
            n = max(2, int(math.ceil(np.hypot(*(q - p)) / step)) + 1)
            for s in np.linspace(0.0, 1.0, n)[1:]:
                pt = p + s * (q - p)
                if any(o.contains(pt) for o in land):
                    return i
    return None


def build_replay_scenario(terrain, tracks, path_waypoints, window, *, latlon: bool = False,
                          target_length: float = 40.0, target_width: float = 10.0,
                          goal_radius: float = 100.0, max_steps: int = 10_000, name: str = "replay",
                          bounds=None, fillet_radius: float = 2.51) -> Scenario:
    """Scenario with terrain polygons as static obstacles and AIS targets replayed in time.

    ``terrain`` is a TerrainGrid, a list of obstacles or None. ``window`` is
    ``(t0, t1)`` in track time (unix seconds); scenario time 0 is ``t0``.
    ``path_waypoints`` are (north, east) metres, or (lat, lon) degrees with
    ``latlon=True``. Raises ScenarioError if the path touches land.
    """
    if isinstance(terrain, TerrainGrid):
        land = terrain_to_obstacles(terrain)
        default_bounds = terrain.bounds()
    else:
        land = list(terrain or [])
        default_bounds = None
    wps = np.asarray(path_waypoints, dtype=float)
    if latlon:
        e, n = latlon_to_utm33(wps[:, 0], wps[:, 1])
        wps = np.column_stack([n, e])
    bad = _first_land_waypoint(wps, land)
    if bad is not None:
        raise ScenarioError(f"waypoints[{bad}]: path runs over land starting at waypoint {bad}")
    t0, t1 = float(window[0]), float(window[1])
    if not t1 > t0:
        raise ValueError("window must satisfy t0 < t1")
    targets = []
    for tr in tracks:
        if tr.times[-1] < t0 or tr.times[0] > t1:
            continue
        targets.append(tr.to_target(t0, t1, target_length, target_width))
    d = wps[1] - wps[0]
    spawn = VesselState(wps[0, 0], wps[0, 1], math.atan2(d[1], d[0]))
    return Scenario(wps, land, targets, spawn, goal_radius, max_steps, None,
                    bounds or default_bounds, fillet_radius, name=name)


# Waypoints (lat, lon) read off the published scenario figures; approximate.
PRESETS = {
    "orland-agdenes": {
        "waypoints": [(63.700, 9.450), (63.665, 9.620), (63.620, 9.760), (63.580, 9.900)],
        "description": "fjord mouth between Orland and Agdenes (approximate)",
    },
    "trondheim": {
        "waypoints": [(63.470, 10.300), (63.455, 10.360), (63.442, 10.410)],
        "description": "approach to Trondheim harbour (approximate)",
    },
    "froan": {
        "waypoints": [(63.950, 8.800), (63.990, 8.960), (64.030, 9.100), (64.050, 9.200)],
        "description": "skerries of the Froan archipelago (approximate)",
    },
}


def load_preset(name: str, terrain_file, ais_file, window=None, **kw) -> Scenario:
    """Replay scenario for a named preset from user-supplied terrain and AIS files.

    Without ``window`` the first hour of AIS coverage is used.
    """
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    grid = load_terrain(terrain_file)
    tracks = load_ais(ais_file) if ais_file is not None else []
    if window is None:
        start = min((t.times[0] for t in tracks), default=0.0)
        window = (start, start + 3600.0)
    return build_replay_scenario(grid, tracks, PRESETS[name]["waypoints"], window, latlon=True,
                                 name=name, **kw)
