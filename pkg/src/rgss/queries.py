"""Query models and JSON payload builders shared by the HTTP API and the CLI.

Every public entry point takes a catalog snapshot and a plain dict (the wire
body), validates it, runs the engine and returns a JSON-ready dict. Timestamps
on the wire are ISO-8601 UTC with millisecond precision.
"""
from __future__ import annotations

import datetime as dt
import json
import math
from datetime import datetime, time, timedelta, timezone
from typing import Literal, Optional, Union

import numpy as np
import pydantic
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .catalog import Catalog, lookup_transmitter
from .darktime import (
    Transmitter,
    availability,
    band_overlap,
    coastal_filter,
    coastal_threshold_km,
    compute_dark_windows,
    merge_windows,
)
from .errors import NoTraversalError, PropagationError, ValidationError
from .geodesy import EARTH_RADIUS_KM, destination, initial_bearing, to_unix
from .mitigation import CellSite, MitigationPolicy, TrafficProfile, impact_score, plan_mitigation
from .orbit import propagate_many
from .scan_geometry import GeofenceSpec, geofence_halfwidth, scanline_arc

PSST_BAND_GHZ = (7.125, 7.475)


def iso(t: datetime) -> str:
    t = t.astimezone(timezone.utc)
    return t.isoformat(timespec="milliseconds").replace("+00:00", "Z")


def dumps(payload) -> str:
    """Canonical JSON text: identical payloads give byte-identical output."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False)


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Location(_Model):
    lat: float = Field(ge=-90, le=90)
    lon: float = Field(ge=-180, le=180)


class GeofenceParams(_Model):
    pixel_scale: float = Field(2.0, ge=1.0)
    guard_pixels: int = Field(1, ge=0)
    open_loop_guard_scanlines: int = Field(1, ge=0)


class _SiteQuery(_Model):
    """Site, date range, frequency range and geofence parameters."""

    location: Optional[Location] = None
    ngci: Optional[str] = None
    date: Optional[dt.date] = None
    days: int = Field(1, ge=1, le=31)
    start: Optional[datetime] = None
    end: Optional[datetime] = None
    freq_ghz: tuple[float, float] = PSST_BAND_GHZ
    adjacency_guard_ghz: float = Field(0.0, ge=0.0)
    geofence: GeofenceParams = GeofenceParams()

    @model_validator(mode="after")
    def _check(self):
        if (self.location is None) == (self.ngci is None):
            raise ValueError("exactly one of location or ngci is required")
        self._check_range()
        return self

    def _check_range(self):
        if self.date is not None and (self.start is not None or self.end is not None):
            raise ValueError("give either date/days or start/end, not both")
        if self.date is None and (self.start is None or self.end is None):
            raise ValueError("a date or a start/end range is required")
        if self.start is not None and self.end is not None:
            for t in (self.start, self.end):
                if t.tzinfo is None:
                    raise ValueError("start/end must carry a UTC offset")
            if not self.end > self.start:
                raise ValueError("date range is empty")
        lo, hi = self.freq_ghz
        if not hi > lo:
            raise ValueError("frequency range must have positive width")

    def period(self):
        if self.date is not None:
            s = datetime.combine(self.date, time(0), tzinfo=timezone.utc)
            return s, s + timedelta(days=self.days)
        return self.start.astimezone(timezone.utc), self.end.astimezone(timezone.utc)

    def gf(self) -> GeofenceSpec:
        return GeofenceSpec(**self.geofence.model_dump())


class DarkTimeQuery(_SiteQuery):
    satellites: Union[Literal["all"], list[str]] = "all"


class AvailabilityQuery(DarkTimeQuery):
    """Like a dark-time query, but the site is optional: none means every registered transmitter."""

    @model_validator(mode="after")
    def _check(self):
        if self.location is not None and self.ngci is not None:
            raise ValueError("give at most one of location or ngci")
        self._check_range()
        return self


class GeofenceQuery(_SiteQuery):
    satellite: str
    traversal: int = Field(0, ge=0)


def _parse(model, body):
    if not isinstance(body, dict):
        raise ValidationError("request body must be a JSON object", "body")
    try:
        return model.model_validate(body)
    except pydantic.ValidationError as exc:
        err = exc.errors()[0]
        path = ".".join(str(p) for p in err["loc"]) or "body"
        msg = err["msg"].removeprefix("Value error, ")
        raise ValidationError(msg, path) from None


def _transmitter(catalog: Catalog, q) -> Transmitter:
    if q.ngci is not None:
        return lookup_transmitter(catalog, q.ngci)
    return Transmitter("query", q.location.lat, q.location.lon, tuple(q.freq_ghz))


def _matched(catalog: Catalog, q, tx_band):
    if q.satellites == "all":
        ids = [sid for sid, e in catalog.satellites.items() if not e.simulated]
    else:
        ids = list(q.satellites)
    out = []
    for sid in ids:
        entry = catalog.satellite(sid)
        bands = [b for b in entry.radiometer.bands if band_overlap(tx_band, b, q.adjacency_guard_ghz)]
        if bands:
            out.append((entry, bands))
    return out


def window_record(w) -> dict:
    return {
        "satellite": w.satellite_id,
        "start": iso(w.start),
        "end": iso(w.end),
        "duration_s": round(w.duration_s, 3),
        "scanline_count": w.scanline_count,
        "core_scanlines": w.core_scanlines,
        "scan_period_s": w.scan_period_s,
        "direction": w.direction,
    }


def availability_record(report) -> dict:
    return {
        "period": {"start": iso(report.period_start), "end": iso(report.period_end)},
        "total_dark_s": round(report.total_dark_s, 3),
        "availability": round(report.availability, 9),
        "windows": [
            {"start": iso(w.start), "end": iso(w.end),
             "duration_s": round((w.end - w.start).total_seconds(), 3),
             "satellites": list(w.satellites)}
            for w in report.windows
        ],
    }


def _tx_record(tx: Transmitter) -> dict:
    return {"id": tx.id, "lat": tx.lat, "lon": tx.lon, "band_ghz": list(tx.tx_band)}


def _satellite_windows(catalog, entry, bands, q, tx, start, end):
    mid = start + (end - start) / 2
    catalog.check_exclusions(entry.id, start, end)
    tle = catalog.elements_for(entry.id, mid)
    try:
        per_band = [
            compute_dark_windows(tle, entry.radiometer, b, q.gf(), tx, start, end, satellite_id=entry.id)
            for b in bands
        ]
    except PropagationError as exc:
        exc.satellite = entry.id
        raise
    if len(per_band) == 1:
        return per_band[0]
    # several overlapping bands: keep the union, one record per fused window
    fused = merge_windows(*per_band)
    originals = sorted((w for lst in per_band for w in lst), key=lambda w: w.start)
    out = []
    for f in fused:
        members = [w for w in originals if f.start <= w.start and w.end <= f.end]
        best = max(members, key=lambda w: w.scanline_count)
        period = best.scan_period_s
        count = int(round((f.end - f.start).total_seconds() / period))
        core = max(w.core_scanlines for w in members)
        out.append(type(best)(entry.id, f.start, f.end, count, best.direction, core, period))
    return out


def darktimes(catalog: Catalog, body: dict) -> dict:
    """POST /v1/darktimes."""
    q = _parse(DarkTimeQuery, body)
    tx = _transmitter(catalog, q)
    start, end = q.period()
    return _darktimes_payload(catalog, q, tx, start, end)


def _darktimes_payload(catalog, q, tx, start, end):
    tx_band = tx.tx_band if q.ngci is not None else tuple(q.freq_ghz)
    matched = _matched(catalog, q, tx_band)
    per_sat = {}
    for entry, bands in matched:
        per_sat[entry.id] = _satellite_windows(catalog, entry, bands, q, tx, start, end)
    report = availability([w for ws in per_sat.values() for w in ws], start, end)
    return {
        "transmitter": _tx_record(tx),
        "frequency_ghz": list(tx_band),
        "period": {"start": iso(start), "end": iso(end)},
        "matched_satellites": [
            {"id": e.id, "name": e.name, "instrument": e.radiometer.name,
             "bands": [{"center_ghz": b.center_ghz, "width_ghz": b.width_ghz} for b in bands]}
            for e, bands in matched
        ],
        "windows": {sid: [window_record(w) for w in ws] for sid, ws in per_sat.items()},
        "merged": availability_record(report)["windows"],
        "availability": availability_record(report),
    }


def availability_query(catalog: Catalog, body: dict) -> dict:
    """POST /v1/availability: availability for one site or the worst registered one."""
    q = _parse(AvailabilityQuery, body)
    start, end = q.period()
    if q.location is not None or q.ngci is not None:
        txs = [_transmitter(catalog, q)]
    else:
        lo, hi = q.freq_ghz
        txs = [t for t in catalog.transmitters.values() if max(t.tx_band[0], lo) < min(t.tx_band[1], hi)]
    sites = []
    for tx in txs:
        sub = q.model_copy(update={"ngci": tx.id} if q.location is None else {})
        p = _darktimes_payload(catalog, sub, tx, start, end)
        sites.append({"transmitter": p["transmitter"],
                      "matched_satellites": [m["id"] for m in p["matched_satellites"]],
                      "availability": p["availability"]})
    worst = min((s["availability"]["availability"] for s in sites), default=1.0)
    return {"period": {"start": iso(start), "end": iso(end)}, "sites": sites, "min_availability": worst}


def satellites(catalog: Catalog) -> dict:
    """GET /v1/satellites."""
    out = []
    for e in catalog.satellites.values():
        out.append({
            "id": e.id,
            "norad_id": e.norad_id,
            "name": e.name,
            "instrument": e.radiometer.name,
            "scan_type": e.radiometer.scan_type.kind,
            "open_loop": e.radiometer.open_loop,
            "simulated": e.simulated,
            "bands": [{"center_ghz": b.center_ghz, "width_ghz": b.width_ghz} for b in e.radiometer.bands],
            "latest_epoch": iso(e.latest.epoch),
        })
    return {"satellites": out}


def _ccw(ring):
    area = sum(x1 * y2 - x2 * y1 for (x1, y1), (x2, y2) in zip(ring[:-1], ring[1:]))
    return ring if area > 0 else ring[::-1]


def geofence(catalog: Catalog, body: dict) -> dict:
    """POST /v1/geofence: GeoJSON of one traversal's scan lines and fenced area."""
    q = _parse(GeofenceQuery, body)
    tx = _transmitter(catalog, q)
    start, end = q.period()
    tx_band = tx.tx_band if q.ngci is not None else tuple(q.freq_ghz)
    entry = catalog.satellite(q.satellite)
    bands = [b for b in entry.radiometer.bands if band_overlap(tx_band, b, q.adjacency_guard_ghz)]
    if not bands:
        raise NoTraversalError(f"{q.satellite} has no band overlapping {tx_band[0]:g}-{tx_band[1]:g} GHz")
    band = bands[0]
    windows = _satellite_windows(catalog, entry, [band], q, tx, start, end)
    if q.traversal >= len(windows):
        raise NoTraversalError(f"traversal {q.traversal} not found ({len(windows)} in range)")
    w = windows[q.traversal]
    spec, gf = entry.radiometer, q.gf()
    tle = catalog.elements_for(entry.id, start + (end - start) / 2)
    n = w.scanline_count
    t_mid = to_unix(w.start) + (np.arange(n) + 0.5) * spec.scan_period_s
    states = propagate_many(tle, t_mid)
    arcs = [scanline_arc(states.state(i), spec, band, gf) for i in range(n)]
    dists = [_arc_distance(a, tx) for a in arcs]
    center = int(np.argmin(dists))
    guard = spec.open_loop and gf.open_loop_guard_scanlines > 0
    feats = []
    for i, arc in enumerate(arcs):
        if i == center:
            role = "center"
        elif guard and (i < gf.open_loop_guard_scanlines or i >= n - gf.open_loop_guard_scanlines):
            role = "guard"
        elif i in (0, n - 1):
            role = "guard"
        else:
            continue
        feats.append(arc.to_geojson(role=role, scanline=i, distance_km=round(dists[i], 3)))
    feats.append(_area_feature(arcs[center], tx, spec, band, gf))
    return {
        "type": "FeatureCollection",
        "features": feats,
        "transmitter": _tx_record(tx),
        "window": window_record(w),
    }


def _arc_distance(arc, tx) -> float:
    from .darktime import _distances_km

    return float(_distances_km(np.array([arc.lats]), np.array([arc.lons]), tx)[0])


def _area_feature(arc, tx, spec, band, gf) -> dict:
    """Two geofenced pixels along the centre scan line, centred on the transmitter's nearest arc point."""
    lats, lons = np.array(arc.lats), np.array(arc.lons)
    d = EARTH_RADIUS_KM * np.array(
        [float(_dist(la, lo, tx)) for la, lo in zip(lats, lons)]
    )
    i = int(np.argmin(d))
    j = min(i + 1, len(lats) - 1) if i + 1 < len(lats) else i - 1
    along = float(initial_bearing(lats[i], lons[i], lats[j], lons[j]))
    if j < i:
        along = (along + 180.0) % 360.0
    pixel = gf.pixel_scale * spec.footprint(band).along_km
    half_w = geofence_halfwidth(spec, band, gf)
    corners = []
    for s_along, s_cross in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
        la, lo = destination(lats[i], lons[i], along, s_along * pixel)
        la, lo = destination(float(la), float(lo), along + 90.0, s_cross * half_w)
        corners.append([round(float(lo), 6), round(float(la), 6)])
    ring = _ccw(corners + [corners[0]])
    return {
        "type": "Feature",
        "geometry": {"type": "Polygon", "coordinates": [ring]},
        "properties": {"role": "geofence-area", "pixels": 2,
                       "along_scan_km": round(2 * pixel, 3), "across_scan_km": round(2 * half_w, 3)},
    }


def _dist(lat, lon, tx):
    from .geodesy import central_angle

    return central_angle(lat, lon, tx.lat, tx.lon)


class CoastalQuery(_Model):
    satellite: str = "amsr2"
    band_ghz: float = 7.3
    transmitters: Optional[list[dict]] = None
    geofence: GeofenceParams = GeofenceParams()


def coastal(catalog: Catalog, body: dict) -> dict:
    """POST /v1/coastal-filter: transmitters inside the coastal protection zone."""
    q = _parse(CoastalQuery, body)
    entry = catalog.satellite(q.satellite)
    band = next((b for b in entry.radiometer.bands if math.isclose(b.center_ghz, q.band_ghz)), None)
    if band is None:
        raise ValidationError(f"{q.satellite} has no {q.band_ghz:g} GHz band", "band_ghz")
    if catalog.coastline is None:
        raise ValidationError("catalog has no coastline configured", "coastline")
    if q.transmitters is None:
        txs = list(catalog.transmitters.values())
    else:
        txs = []
        for i, t in enumerate(q.transmitters):
            try:
                txs.append(Transmitter(str(t["id"]), float(t["lat"]), float(t["lon"]), tuple(t.get("band_ghz", PSST_BAND_GHZ))))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"bad transmitter record ({exc})", f"transmitters.{i}") from None
    gf = GeofenceSpec(**q.geofence.model_dump())
    kept = coastal_filter(txs, catalog.coastline, entry.radiometer, band, gf)
    dist = catalog.coastline.distance_km([t.lat for t in txs], [t.lon for t in txs]) if txs else []
    return {
        "threshold_km": round(coastal_threshold_km(entry.radiometer, band, gf), 3),
        "retained": [t.id for t in kept],
        "transmitters": [
            dict(_tx_record(t), coast_distance_km=round(float(d), 3), retained=t in kept)
            for t, d in zip(txs, dist)
        ],
    }


class _WindowIn(_Model):
    satellite: str = ""
    start: datetime
    end: datetime


class _SiteIn(_Model):
    site_id: str
    transmitter: str = ""
    sessions: dict[str, int]
    spare_capacity: int = Field(ge=0)
    utc_offset_h: float = 0.0


class _PolicyIn(_Model):
    sleep_window: tuple[float, float] = (1.0, 5.0)
    sleep_load_threshold: float = Field(0.15, ge=0, le=1)
    handover_failure_probability: float = Field(0.0, ge=0, le=1)
    mechanism: Literal["DAPS", "L1L2"] = "DAPS"


class MitigationQuery(_Model):
    window: _WindowIn
    sites: list[_SiteIn]
    profile: Optional[list[tuple[float, float]]] = None
    policy: _PolicyIn = _PolicyIn()


class _Window:
    def __init__(self, w: _WindowIn):
        self.satellite_id = w.satellite
        self.start = w.start.astimezone(timezone.utc)
        self.end = w.end.astimezone(timezone.utc)


def mitigation(body: dict) -> dict:
    """POST /v1/mitigation-plan."""
    q = _parse(MitigationQuery, body)
    try:
        sites = [CellSite(s.site_id, s.transmitter, dict(s.sessions), s.spare_capacity, s.utc_offset_h) for s in q.sites]
        profile = TrafficProfile(tuple(tuple(a) for a in q.profile)) if q.profile else TrafficProfile()
        policy = MitigationPolicy(tuple(q.policy.sleep_window), q.policy.sleep_load_threshold,
                                  q.policy.handover_failure_probability, q.policy.mechanism)
    except ValueError as exc:
        raise ValidationError(str(exc), "sites") from None
    plan = plan_mitigation(_Window(q.window), sites, profile, policy)
    return {
        "window": {"satellite": plan.satellite_id, "start": iso(plan.window_start), "end": iso(plan.window_end)},
        "mechanism": policy.mechanism,
        "actions": [
            {"site_id": a.site_id, "action": a.action, "mechanism": a.mechanism or None,
             "load": round(a.load, 6), "active": a.active, "handed_over": a.handed_over, "shed": a.shed}
            for a in plan.actions
        ],
        "impact": impact_score(plan),
    }
