"""Raw tag-channel ingestion: CSV parsing, resampling, smoothing, geodesy.

The tag records two native rates: inertial channels (accelerometer,
gyroscope, magnetometer) at nominally 50 Hz and environmental channels
(depth, speed, temperature) at nominally 5 Hz. Parsing keeps both rates;
all downstream analysis runs on a uniform 5 Hz master timeline.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

EARTH_RADIUS_M = 6_371_000.0

# Canonical CSV column names; a schema map may rename any of them.
CSV_COLUMNS = ("t", "ax", "ay", "az", "gx", "gy", "gz",
               "mx", "my", "mz", "depth", "speed", "temp")

IMU_FIELDS = ("ax", "ay", "az", "gx", "gy", "gz")
MAG_FIELDS = ("mx", "my", "mz")
SLOW_FIELDS = ("depth", "speed")


class IngestError(ValueError):
    """Raised for malformed tag input files."""


@dataclass(frozen=True)
class MasterTimeline:
    """Uniform analysis timeline: ``t0 + dt * [0..n)``."""

    t0: float
    dt: float = 0.2
    n: int = 0

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.n < 0:
            raise ValueError("n must be non-negative")

    @property
    def t(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (self.n - 1) if self.n else self.t0


@dataclass
class TagSeries:
    """Validated raw tag channels at their native rates.

    ``t_imu`` indexes the inertial arrays, ``t_slow`` the depth/speed
    arrays. ``mag`` is None when the file carries no magnetometer columns.
    Rows containing non-finite values are excluded from the channels but
    their file row numbers are kept in ``flagged_rows``.
    """

    t_imu: np.ndarray
    accel: np.ndarray
    gyro: np.ndarray
    mag: np.ndarray | None
    t_slow: np.ndarray
    depth: np.ndarray
    speed: np.ndarray
    temp: np.ndarray | None = None
    flagged_rows: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        for name, t in (("IMU", self.t_imu), ("depth/speed", self.t_slow)):
            if len(t) and np.any(np.diff(t) <= 0.0):
                raise IngestError(f"non-monotone time in {name} channel")
        if np.any(self.speed < 0.0):
            raise IngestError("speed_meas must be non-negative")
        if np.any(self.depth < 0.0):
            raise IngestError("depth must be non-negative")

    @property
    def n_imu(self) -> int:
        return len(self.t_imu)

    @property
    def n_slow(self) -> int:
        return len(self.t_slow)


def _row_values(row: dict[str, str], names: tuple[str, ...],
                colmap: dict[str, str]) -> list[str]:
    return [row.get(colmap[n], "").strip() for n in names]


def parse_tag_csv(path: str | Path,
                  schema: dict[str, str] | None = None) -> TagSeries:
    """Parse a tag export CSV into a :class:`TagSeries`.

    ``schema`` maps canonical names (``t, ax..az, gx..gz, mx..mz, depth,
    speed, temp``) to the file's column names; canonical names are used
    directly when omitted. A row is an IMU sample when all six
    accelerometer/gyroscope cells are present, and a slow sample when both
    depth and speed cells are present; one row may be both. Rows with
    non-finite numeric cells are flagged and excluded.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"tag file not found: {path}")
    colmap = {name: name for name in CSV_COLUMNS}
    if schema:
        colmap.update(schema)

    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for required in ("t",) + IMU_FIELDS + SLOW_FIELDS:
            if colmap[required] not in header:
                raise IngestError(
                    f"missing column {colmap[required]!r} in {path}")
        has_mag = all(colmap[n] in header for n in MAG_FIELDS)
        has_temp = colmap["temp"] in header

        t_imu, imu_rows = [], []
        t_slow, slow_rows = [], []
        flagged: list[int] = []
        for lineno, row in enumerate(reader, start=2):
            t_cell = row.get(colmap["t"], "").strip()
            if not t_cell:
                continue
            imu_cells = _row_values(row, IMU_FIELDS, colmap)
            mag_cells = _row_values(row, MAG_FIELDS, colmap) if has_mag else []
            slow_cells = _row_values(row, SLOW_FIELDS, colmap)
            temp_cell = _row_values(row, ("temp",), colmap)[0] if has_temp else ""
            # Partially filled channel groups are malformed, not usable data.
            if any(imu_cells) != all(imu_cells) or \
                    any(slow_cells) != all(slow_cells) or \
                    (has_mag and any(mag_cells) != all(mag_cells)):
                flagged.append(lineno)
                continue
            try:
                t_val = float(t_cell)
                imu_vals = [float(c) for c in imu_cells] if all(imu_cells) else None
                mag_vals = ([float(c) for c in mag_cells]
                            if has_mag and all(mag_cells) else None)
                slow_vals = ([float(c) for c in slow_cells]
                             if all(slow_cells) else None)
                temp_val = float(temp_cell) if temp_cell else math.nan
            except ValueError:
                flagged.append(lineno)
                continue
            row_vals = [t_val] + (imu_vals or []) + (mag_vals or []) + (slow_vals or [])
            if not all(math.isfinite(v) for v in row_vals):
                flagged.append(lineno)
                continue
            if imu_vals is not None:
                t_imu.append(t_val)
                if has_mag:
                    imu_rows.append(imu_vals + (mag_vals or [math.nan] * 3))
                else:
                    imu_rows.append(imu_vals)
            if slow_vals is not None:
                t_slow.append(t_val)
                slow_rows.append(slow_vals + [temp_val])

    if not t_imu and not t_slow:
        raise IngestError(f"empty tag file: {path}")
    if flagged:
        warnings.warn(
            f"{path}: flagged {len(flagged)} row(s) with non-finite values",
            stacklevel=2)

    imu_width = 9 if has_mag else 6
    imu = (np.asarray(imu_rows, dtype=float).reshape(len(t_imu), -1)
           if t_imu else np.zeros((0, imu_width)))
    slow = (np.asarray(slow_rows, dtype=float).reshape(len(t_slow), -1)
            if t_slow else np.zeros((0, 3)))
    mag = None
    if has_mag and len(t_imu):
        mag = imu[:, 6:9]
        if np.isnan(mag).all():
            mag = None
        elif np.isnan(mag).any():
            raise IngestError("magnetometer present on only some IMU rows")
    temp = slow[:, 2] if has_temp and len(t_slow) else None
    if temp is not None and np.all(np.isnan(temp)):
        temp = None
    return TagSeries(
        t_imu=np.asarray(t_imu, dtype=float),
        accel=imu[:, 0:3],
        gyro=imu[:, 3:6],
        mag=mag,
        t_slow=np.asarray(t_slow, dtype=float),
        depth=slow[:, 0],
        speed=slow[:, 1],
        temp=temp,
        flagged_rows=flagged,
    )


def master_timeline(tag: TagSeries, dt: float = 0.2) -> MasterTimeline:
    """Build the analysis timeline from the slow channels of ``tag``.

    The timeline starts at the first slow sample and is trimmed so that
    both the slow and IMU channels span every instant (no extrapolation
    downstream).
    """
    if tag.n_slow < 2:
        raise IngestError("need at least 2 depth/speed samples")
    t0 = float(tag.t_slow[0])
    t_hi = float(tag.t_slow[-1])
    if tag.n_imu:
        t0 = max(t0, float(tag.t_imu[0]))
        t_hi = min(t_hi, float(tag.t_imu[-1]))
    # Nudge t0 onto the slow grid so simulator fixtures resample exactly.
    k0 = math.ceil(round((t0 - tag.t_slow[0]) / dt, 9))
    t0 = float(tag.t_slow[0]) + k0 * dt
    n = int(math.floor(round((t_hi - t0) / dt, 9))) + 1
    if n < 3:
        raise IngestError("channel overlap too short for analysis")
    return MasterTimeline(t0=t0, dt=dt, n=n)


def resample_linear(t_src: np.ndarray, values: np.ndarray,
                    timeline: MasterTimeline) -> np.ndarray:
    """Linearly interpolate ``values`` onto the timeline instants.

    Raises if the timeline extends beyond the channel support; this module
    never extrapolates.
    """
    t_src = np.asarray(t_src, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(t_src) < 2:
        raise IngestError("resample needs at least 2 samples")
    t_new = timeline.t
    eps = 1e-9
    if t_new[0] < t_src[0] - eps or t_new[-1] > t_src[-1] + eps:
        raise IngestError(
            f"timeline [{t_new[0]:g}, {t_new[-1]:g}] extends beyond channel "
            f"support [{t_src[0]:g}, {t_src[-1]:g}]")
    return np.interp(t_new, t_src, values)


def moving_average(values: np.ndarray, window_s: float, dt: float) -> np.ndarray:
    """Centered moving average with an odd window of ``round(window_s/dt)``.

    Near the edges the window shrinks symmetrically, so a linear ramp is a
    fixed point everywhere and the output always has the input's length.
    """
    if window_s <= 0.0:
        raise ValueError("window_s must be positive")
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n == 0:
        raise ValueError("empty channel")
    w = int(round(window_s / dt))
    if w % 2 == 0:
        w += 1
    half = w // 2
    if half == 0 or n == 1:
        return values.copy()
    idx = np.arange(n)
    k = np.minimum(half, np.minimum(idx, n - 1 - idx))
    csum = np.concatenate(([0.0], np.cumsum(values)))
    return (csum[idx + k + 1] - csum[idx - k]) / (2 * k + 1)


def latlon_to_local(lat: float | np.ndarray, lon: float | np.ndarray,
                    origin: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    """Project WGS-84 degrees to local tangent-plane meters.

    Equirectangular projection about ``origin``: adequate at lagoon scale
    (sub-kilometer extents). Returns (x east, y north).
    """
    lat = np.asarray(lat, dtype=float)
    lon = np.asarray(lon, dtype=float)
    if np.any(np.abs(lat) > 90.0):
        raise ValueError("latitude out of range")
    lat0, lon0 = origin
    x = EARTH_RADIUS_M * math.cos(math.radians(lat0)) * np.radians(lon - lon0)
    y = EARTH_RADIUS_M * np.radians(lat - lat0)
    return x, y


def local_to_latlon(x: float | np.ndarray, y: float | np.ndarray,
                    origin: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`latlon_to_local`."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lat0, lon0 = origin
    lat = lat0 + np.degrees(y / EARTH_RADIUS_M)
    lon = lon0 + np.degrees(x / (EARTH_RADIUS_M * math.cos(math.radians(lat0))))
    return lat, lon


def _segments_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0))


@dataclass(frozen=True)
class LagoonBoundary:
    """Closed lagoon outline in local metric coordinates."""

    vertices: np.ndarray
    origin: tuple[float, float]

    def __post_init__(self) -> None:
        verts = np.asarray(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
            raise ValueError("boundary needs >= 3 (x, y) vertices")
        object.__setattr__(self, "vertices", verts)
        n = len(verts)
        closed = np.vstack([verts, verts[0]])
        for i in range(n):
            for j in range(i + 2, n):
                if i == 0 and j == n - 1:
                    continue  # wrap-around neighbours share a vertex
                if _segments_intersect(closed[i], closed[i + 1],
                                       closed[j], closed[j + 1]):
                    raise ValueError("boundary polygon self-intersects")

    @classmethod
    def from_geojson(cls, path: str | Path,
                     origin: tuple[float, float] | None = None) -> "LagoonBoundary":
        """Load a WGS-84 GeoJSON Polygon; origin defaults to its first vertex."""
        data = json.loads(Path(path).read_text())
        geom = data.get("geometry", data)
        if geom.get("type") != "Polygon":
            raise ValueError("boundary file must contain a Polygon")
        ring = geom["coordinates"][0]
        lon = np.array([p[0] for p in ring], dtype=float)
        lat = np.array([p[1] for p in ring], dtype=float)
        if len(ring) > 1 and ring[0] == ring[-1]:
            lon, lat = lon[:-1], lat[:-1]
        if origin is None:
            origin = (float(lat[0]), float(lon[0]))
        x, y = latlon_to_local(lat, lon, origin)
        return cls(vertices=np.column_stack([x, y]), origin=origin)

    @property
    def station(self) -> tuple[float, float]:
        """Default station position: the first boundary vertex."""
        return float(self.vertices[0, 0]), float(self.vertices[0, 1])
