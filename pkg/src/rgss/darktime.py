"""Dark-time windows, interval union, availability and transmitter filters.

A scan line is dark for a transmitter when the transmitter lies within the
scan-line geofence. Dark scan lines are counted on a whole-scan-line grid
anchored at the start of each regional pass; open-loop radiometers get
``open_loop_guard_scanlines`` extra scan lines before and after every run of
dark lines, because their scan phase cannot be predicted. Distances equal to
a threshold count as inside.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import ValidationError
from .geodesy import EARTH_RADIUS_KM, from_unix, normalize_lon, to_unix
from .orbit import DEFAULT_MAX_AGE_DAYS, find_passes, propagate_many
from .scan_geometry import (
    geofence_halfwidth,
    max_inland_extent,
    scanline_arc,
    scanline_traces,
    trace_reach_km,
)

REFINE_MARGIN_KM = 1.0
GROUND_SPEED_BOUND_KM_S = 8.0


@dataclass(frozen=True)
class Transmitter:
    id: str
    lat: float
    lon: float
    tx_band: tuple  # (low_ghz, high_ghz)

    def __post_init__(self):
        if not -90.0 <= self.lat <= 90.0:
            raise ValidationError("latitude outside [-90, 90]", "lat")
        object.__setattr__(self, "lon", normalize_lon(float(self.lon)))
        lo, hi = self.tx_band
        if not hi > lo:
            raise ValidationError("band width must be positive", "tx_band")
        object.__setattr__(self, "tx_band", (float(lo), float(hi)))

    @property
    def location(self):
        return (self.lat, self.lon)


@dataclass(frozen=True)
class DarkTimeWindow:
    satellite_id: str
    start: datetime
    end: datetime
    scanline_count: int
    direction: str
    core_scanlines: int = 0
    scan_period_s: float = 0.0

    @property
    def duration_s(self) -> float:
        return (self.end - self.start).total_seconds()


@dataclass(frozen=True)
class DarkInterval:
    """One interval of the union; ``satellites`` lists the contributors."""

    start: object
    end: object
    satellites: tuple = ()


@dataclass(frozen=True)
class AvailabilityReport:
    period_start: datetime
    period_end: datetime
    windows: tuple
    total_dark_s: float
    availability: float

    @property
    def period_s(self) -> float:
        return (self.period_end - self.period_start).total_seconds()


def band_overlap(tx_band, band, adjacency_guard: float = 0.0) -> bool:
    """True iff the guarded transmit band overlaps the measurement band.

    Intervals are compared half-open, so bands that merely touch do not
    overlap.
    """
    if adjacency_guard < 0:
        raise ValueError("adjacency_guard must be >= 0")
    lo, hi = tx_band
    lo -= adjacency_guard
    hi += adjacency_guard
    return max(lo, band.low) < min(hi, band.high)


def _distances_km(lat, lon, tx):
    d = _kernels.polyline_min_distance(np.radians(lat), np.radians(lon), math.radians(tx.lat), math.radians(tx.lon))
    return d * EARTH_RADIUS_KM


def _refine(states, idx, spec, band, gf, tx, coarse_km):
    """Re-evaluate near-threshold rows on a 20x denser trace."""
    from .scan_geometry import _trace_layout  # noqa: PLC0415

    sub = type(states)(*(np.asarray(f)[idx] for f in states))
    rel, dist = _trace_layout(spec, band, gf, sub.altitude)
    m = rel.shape[1]
    u = np.linspace(0.0, m - 1.0, 20 * (m - 1) + 1)
    rel_f = np.stack([np.interp(u, np.arange(m), r) for r in rel])
    dist_f = np.stack([np.interp(u, np.arange(m), d) for d in dist])
    bearing = np.radians(np.asarray(sub.heading)[:, None] + rel_f)
    lat, lon = _kernels.fan_points(np.radians(sub.lat), np.radians(sub.lon), bearing, dist_f)
    fine = _distances_km(np.degrees(lat), np.degrees(lon), tx)
    return np.minimum(coarse_km, fine)


def scanline_dark_mask(states, spec, band, gf, tx) -> np.ndarray:
    """Boolean darkness of each state's scan line for ``tx`` (vectorised)."""
    if len(states.t) == 0:
        return np.zeros(0, dtype=bool)
    lat, lon = scanline_traces(states, spec, band, gf)
    d = _distances_km(lat, lon, tx)
    h = geofence_halfwidth(spec, band, gf)
    near = np.flatnonzero(np.abs(d - h) <= REFINE_MARGIN_KM)
    if near.size:
        d[near] = _refine(states, near, spec, band, gf, tx, d[near])
    return d <= h


def scanline_is_dark(state, spec, band, gf, tx: Transmitter) -> bool:
    """Whether ``tx`` lies inside the geofence of the scan line at ``state``."""
    arc = scanline_arc(state, spec, band, gf)
    d = _distances_km(np.array([arc.lats]), np.array([arc.lons]), tx)
    return bool(d[0] <= arc.halfwidth_km)


def guard_scanlines(spec, gf) -> int:
    return gf.open_loop_guard_scanlines if spec.open_loop else 0


def search_radius_km(spec, band, gf, altitude_km: float) -> float:
    """Pass-search radius that contains every guarded dark scan line."""
    g = guard_scanlines(spec, gf)
    travel = (g + 2) * spec.scan_period_s * GROUND_SPEED_BOUND_KM_S
    return trace_reach_km(spec, band, gf, altitude_km) + travel + 50.0


def _runs(mask):
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    edges = np.diff(padded)
    return list(zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1) - 1))


def compute_dark_windows(
    tle,
    spec,
    band,
    gf,
    tx: Transmitter,
    start: datetime,
    end: datetime,
    *,
    satellite_id=None,
    max_age_days=DEFAULT_MAX_AGE_DAYS,
) -> list[DarkTimeWindow]:
    """Dark-time windows of one satellite over one transmitter.

    Each regional pass is cut into whole scan lines starting at the pass
    start. Contiguous dark lines form a core; open-loop radiometers add guard
    lines on both sides. Overlapping guarded runs inside a pass are joined.
    """
    t0, t1 = to_unix(start), to_unix(end)
    if t1 < t0:
        raise ValueError("empty range: end precedes start")
    if t1 == t0:
        return []
    sid = str(satellite_id if satellite_id is not None else tle.norad_id)
    altitude = propagate_many(tle, [t0], max_age_days).altitude[0]
    radius = search_radius_km(spec, band, gf, altitude + 50.0)
    passes = find_passes(tle, tx.location, radius, start, end, satellite_id=sid, max_age_days=max_age_days)
    period = spec.scan_period_s
    g = guard_scanlines(spec, gf)
    windows = []
    for p in passes:
        a = to_unix(p.start)
        n = int(math.ceil((to_unix(p.end) - a) / period))
        k = np.arange(max(n, 1))
        states = propagate_many(tle, a + (k + 0.5) * period, max_age_days)
        dark = scanline_dark_mask(states, spec, band, gf, tx)
        spans = []
        for ka, kb in _runs(dark):
            lo, hi = ka - g, kb + g
            if spans and lo <= spans[-1][1] + 1:
                spans[-1] = (spans[-1][0], hi, spans[-1][2], kb)
            else:
                spans.append((lo, hi, ka, kb))
        for lo, hi, core_a, core_b in spans:
            w_start, w_end = a + lo * period, a + (hi + 1) * period
            mid = 0.5 * (w_start + w_end)
            lat_pair = propagate_many(tle, [mid - 0.5, mid + 0.5], max_age_days).lat
            windows.append(
                DarkTimeWindow(
                    satellite_id=sid,
                    start=from_unix(w_start),
                    end=from_unix(w_end),
                    scanline_count=int(hi - lo + 1),
                    direction="ascending" if lat_pair[1] >= lat_pair[0] else "descending",
                    core_scanlines=int(core_b - core_a + 1),
                    scan_period_s=period,
                )
            )
    windows.sort(key=lambda w: w.start)
    return windows


def merge_windows(*window_lists) -> list[DarkInterval]:
    """Union of windows from any number of lists.

    Windows are anything with ``start``/``end`` (or ``(start, end)`` pairs).
    Overlapping and abutting windows fuse; the result is sorted and disjoint.
    """
    items = []
    for lst in window_lists:
        for w in lst:
            if isinstance(w, tuple):
                s, e, sats = w[0], w[1], ()
            else:
                s, e = w.start, w.end
                sats = getattr(w, "satellites", None) or (
                    (w.satellite_id,) if hasattr(w, "satellite_id") else ()
                )
            if e < s:
                raise ValueError("window ends before it starts")
            items.append((s, e, tuple(sats)))
    items.sort(key=lambda x: (x[0], x[1]))
    merged = []
    for s, e, sats in items:
        if merged and s <= merged[-1][1]:
            ps, pe, psats = merged[-1]
            merged[-1] = (ps, max(pe, e), psats | set(sats))
        else:
            merged.append((s, e, set(sats)))
    return [DarkInterval(s, e, tuple(sorted(sats))) for s, e, sats in merged]


def availability(windows, period_start: datetime, period_end: datetime) -> AvailabilityReport:
    """Fraction of ``[period_start, period_end)`` free of dark time.

    Windows are merged first; parts outside the period are clipped off.
    """
    span = (period_end - period_start).total_seconds()
    if not span > 0:
        raise ValueError("empty evaluation period")
    clipped = []
    for w in merge_windows(windows):
        s, e = max(w.start, period_start), min(w.end, period_end)
        if e > s:
            clipped.append(DarkInterval(s, e, w.satellites))
    total = sum((w.end - w.start).total_seconds() for w in clipped)
    return AvailabilityReport(period_start, period_end, tuple(clipped), total, 1.0 - total / span)


@dataclass(frozen=True)
class CoastlineSet:
    """Shoreline as great-circle segments (degrees)."""

    a_lat: np.ndarray = field(repr=False)
    a_lon: np.ndarray = field(repr=False)
    b_lat: np.ndarray = field(repr=False)
    b_lon: np.ndarray = field(repr=False)
    names: tuple = ()
    source: str = ""

    def __len__(self):
        return len(self.a_lat)

    def distance_km(self, lat, lon) -> np.ndarray:
        """Distance from each point to the nearest shoreline segment."""
        d = _kernels.points_segments_min_distance(
            np.radians(np.atleast_1d(lat)), np.radians(np.atleast_1d(lon)),
            np.radians(self.a_lat), np.radians(self.a_lon),
            np.radians(self.b_lat), np.radians(self.b_lon),
        )
        return d * EARTH_RADIUS_KM

    @classmethod
    def from_lines(cls, lines, names=(), source=""):
        """Build from polylines given as sequences of (lon, lat) positions."""
        segs = []
        for line in lines:
            pts = [(float(p[0]), float(p[1])) for p in line]
            if len(pts) < 2:
                raise ValidationError("coastline line needs at least 2 positions", "coastline")
            for (lo1, la1), (lo2, la2) in zip(pts[:-1], pts[1:]):
                if not (-90 <= la1 <= 90 and -90 <= la2 <= 90 and -180 <= lo1 <= 180 and -180 <= lo2 <= 180):
                    raise ValidationError("position outside lon/lat range", "coastline")
                segs.append((la1, lo1, la2, lo2))
        if not segs:
            raise ValidationError("coastline is empty", "coastline")
        arr = np.array(segs, dtype=float)
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], tuple(names), source)

    @classmethod
    def from_geojson(cls, doc, source=""):
        """Ingest LineString/MultiLineString/Polygon/MultiPolygon geometries.

        Polygon rings contribute their boundary.
        """
        if isinstance(doc, (str, Path)):
            source = source or str(doc)
            doc = json.loads(Path(doc).read_text())
        lines, names = [], []

        def add(geom, name):
            if geom is None:
                return
            kind, coords = geom.get("type"), geom.get("coordinates")
            if kind == "LineString":
                lines.append(coords)
            elif kind in ("MultiLineString", "Polygon"):
                lines.extend(coords)
            elif kind == "MultiPolygon":
                for poly in coords:
                    lines.extend(poly)
            elif kind == "GeometryCollection":
                for sub in geom.get("geometries", []):
                    add(sub, name)
            else:
                raise ValidationError(f"unsupported geometry type {kind!r}", "coastline")
            if name:
                names.append(name)

        kind = doc.get("type")
        if kind == "FeatureCollection":
            for feat in doc.get("features", []):
                add(feat.get("geometry"), (feat.get("properties") or {}).get("name", ""))
        elif kind == "Feature":
            add(doc.get("geometry"), (doc.get("properties") or {}).get("name", ""))
        else:
            add(doc, "")
        return cls.from_lines(lines, names, source)


def coastal_threshold_km(spec, band, gf) -> float:
    """Coastal-zone depth: two geofenced pixels at the widest scan-angle projection."""
    return max_inland_extent(spec, band, gf, pixels=2)


def coastal_filter(transmitters, coastline: CoastlineSet, spec, band, gf) -> list:
    """Transmitters within the coastal zone of ``coastline`` (ties retained)."""
    if coastline is None or len(coastline) == 0:
        raise ValidationError("coastline is empty", "coastline")
    txs = list(transmitters)
    if not txs:
        return []
    limit = coastal_threshold_km(spec, band, gf)
    d = coastline.distance_km([t.lat for t in txs], [t.lon for t in txs])
    return [t for t, dist in zip(txs, d) if dist <= limit]
