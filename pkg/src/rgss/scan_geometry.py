"""Radiometer scan geometry: boresight ground points, scan-line arcs, geofence sizes.

A geofenced pixel is the radiometer footprint scaled by ``pixel_scale``
(2 x FWHM by default). Footprints are elliptical Gaussians with a cross-scan
axis (radial from the sub-satellite point for conical scanners) and an
along-scan axis. Scan lines are geofenced as a whole: a transmitter is inside
a scan line's fence when its distance to the scan arc is at most
:func:`geofence_halfwidth`.

Default AMSR2 footprint values at 7.3 GHz are calibration, not instrument
constants. With FWHM 45.2 km along-scan and 8.0 km cross-scan, two adjacent
geofenced pixels span 180.8 km across-track at scan centre and 89.8 km at
the +/-61 deg scan edges, and the scan-line fence half-width is 24 km, which
gives about 7 guarded scan lines per traversal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from . import _kernels
from .errors import ValidationError
from .geodesy import EARTH_RADIUS_KM

MAX_AZIMUTH_STEP_DEG = 0.5


@dataclass(frozen=True)
class Conical:
    off_nadir_deg: float
    # centre of the active sector relative to the along-track direction; 180 = aft-looking
    look_azimuth_deg: float = 0.0

    kind = "conical"


@dataclass(frozen=True)
class CrossTrack:
    max_scan_deg: float

    kind = "cross_track"


@dataclass(frozen=True)
class MeasurementBand:
    center_ghz: float
    width_ghz: float

    def __post_init__(self):
        if not self.width_ghz > 0:
            raise ValidationError("band width must be positive", "width_ghz")

    @property
    def low(self) -> float:
        return self.center_ghz - self.width_ghz / 2.0

    @property
    def high(self) -> float:
        return self.center_ghz + self.width_ghz / 2.0


@dataclass(frozen=True)
class Footprint:
    """Beam FWHM on the ground, km."""

    along_km: float
    cross_km: float


@dataclass(frozen=True)
class GeofenceSpec:
    pixel_scale: float = 2.0
    guard_pixels: int = 1
    open_loop_guard_scanlines: int = 1

    def __post_init__(self):
        if not self.pixel_scale >= 1.0:
            raise ValidationError("must be >= 1", "pixel_scale")
        if self.guard_pixels < 0:
            raise ValidationError("must be >= 0", "guard_pixels")
        if self.open_loop_guard_scanlines < 0:
            raise ValidationError("must be >= 0", "open_loop_guard_scanlines")


@dataclass(frozen=True)
class RadiometerSpec:
    name: str
    scan_type: Conical | CrossTrack
    scan_period_s: float
    active_scan_deg: float
    open_loop: bool
    bands: tuple = ()
    fov: tuple = ()
    polarizations: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not self.scan_period_s > 0:
            raise ValidationError("must be > 0", "scan_period_s")
        limit = 360.0 if isinstance(self.scan_type, Conical) else 180.0
        if not 0 < self.active_scan_deg <= limit:
            raise ValidationError(f"must be in (0, {limit:g}]", "active_scan_deg")
        if isinstance(self.scan_type, CrossTrack) and self.active_scan_deg / 2 > self.scan_type.max_scan_deg + 1e-9:
            raise ValidationError("half the active scan exceeds max_scan_deg", "active_scan_deg")
        if len(self.bands) != len(self.fov):
            raise ValidationError("one footprint per band required", "fov")
        for i, fp in enumerate(self.fov):
            if not (fp.along_km > 0 and fp.cross_km > 0):
                raise ValidationError("FWHM values must be > 0", f"fov[{i}]")

    def footprint(self, band: MeasurementBand) -> Footprint:
        for b, fp in zip(self.bands, self.fov):
            if b == band:
                return fp
        raise ValidationError(f"band {band.center_ghz:g} GHz not carried by {self.name}", "band")


def horizon_limit_deg(altitude_km: float) -> float:
    """Largest off-nadir angle whose ray still meets the sphere."""
    return math.degrees(math.asin(EARTH_RADIUS_KM / (EARTH_RADIUS_KM + altitude_km)))


def ground_angle_rad(altitude_km, off_nadir_deg):
    """Earth central angle between sub-satellite point and boresight hit."""
    theta = np.radians(np.abs(off_nadir_deg))
    s = (EARTH_RADIUS_KM + np.asarray(altitude_km)) / EARTH_RADIUS_KM * np.sin(theta)
    if np.any(s > 1.0):
        raise ValidationError("boresight does not intersect the Earth (beyond horizon)", "off_nadir_deg")
    return np.arcsin(s) - theta


def boresight_ground_point(state, azimuth_deg: float, off_nadir_deg: float):
    """Nearer intersection of a boresight ray with the Earth sphere.

    The ray leaves the satellite at ``off_nadir_deg`` from nadir, tilted
    towards ``azimuth_deg`` measured clockwise from the ground-track
    direction. Solved directly as a ray/sphere intersection.

    Returns:
        (lat, lon) in degrees.
    """
    r = np.asarray(state.position, dtype=float)
    v = np.asarray(state.velocity, dtype=float)
    up = r / np.linalg.norm(r)
    fwd = v - np.dot(v, up) * up
    fwd /= np.linalg.norm(fwd)
    right = np.cross(fwd, up)
    th, az = math.radians(off_nadir_deg), math.radians(azimuth_deg)
    d = -math.cos(th) * up + math.sin(th) * (math.cos(az) * fwd + math.sin(az) * right)
    b = float(np.dot(r, d))
    disc = b * b - (float(np.dot(r, r)) - EARTH_RADIUS_KM**2)
    if disc < 0:
        raise ValidationError("boresight does not intersect the Earth (beyond horizon)", "off_nadir_deg")
    s = -b - math.sqrt(disc)
    p = r + s * d
    lat = math.degrees(math.asin(p[2] / np.linalg.norm(p)))
    lon = math.degrees(math.atan2(p[1], p[0]))
    return lat, lon


def geofence_halfwidth(spec: RadiometerSpec, band: MeasurementBand, gf: GeofenceSpec) -> float:
    """Half a geofenced pixel plus the guard band, across the scan line (km)."""
    pixel = gf.pixel_scale * spec.footprint(band).cross_km
    return pixel / 2.0 + gf.guard_pixels * pixel


def inland_extent(spec, band, gf, scan_azimuth_deg, pixels: int = 2) -> float:
    """Across-track width of ``pixels`` adjacent geofenced pixels at a scan angle.

    Pixels sit side by side along the scan. At scan centre the along-scan axis
    points across-track, so the width is ``pixels`` along-scan lengths; at
    the scan edges it shrinks with the cosine of the scan azimuth.
    """
    fp = spec.footprint(band)
    a = gf.pixel_scale * fp.along_km
    b = gf.pixel_scale * fp.cross_km
    phi = np.radians(scan_azimuth_deg)
    single = np.sqrt((b * np.sin(phi)) ** 2 + (a * np.cos(phi)) ** 2)
    return single + (pixels - 1) * a * np.abs(np.cos(phi))


def max_inland_extent(spec, band, gf, pixels: int = 2) -> float:
    half = spec.active_scan_deg / 2.0
    az = np.linspace(-half, half, int(math.ceil(spec.active_scan_deg / 0.1)) + 1)
    return float(np.max(inland_extent(spec, band, gf, az, pixels)))


def beam_containment(fwhm_multiples: float) -> float:
    """Fraction of a 1-D Gaussian beam's power within a total width of k x FWHM."""
    if not fwhm_multiples > 0:
        raise ValueError("fwhm_multiples must be positive")
    if math.isinf(fwhm_multiples):
        return 1.0
    return math.erf(fwhm_multiples * math.sqrt(math.log(2.0)))


@dataclass(frozen=True)
class SwathArc:
    """Ground trace of one scan line: footprint centres plus the fence half-width."""

    time: datetime
    lats: tuple
    lons: tuple
    halfwidth_km: float

    def length_km(self) -> float:
        from .geodesy import great_circle_km

        la, lo = np.array(self.lats), np.array(self.lons)
        return float(np.sum(great_circle_km(la[:-1], lo[:-1], la[1:], lo[1:])))

    def to_geojson(self, **properties) -> dict:
        coords = [[round(lo, 6), round(la, 6)] for la, lo in zip(self.lats, self.lons)]
        if len(coords) == 1:
            coords = coords * 2
        props = {"time": self.time.isoformat(timespec="milliseconds").replace("+00:00", "Z"),
                 "halfwidth_km": round(self.halfwidth_km, 3)}
        props.update(properties)
        return {"type": "Feature", "geometry": {"type": "LineString", "coordinates": coords},
                "properties": props}


def _trace_layout(spec, band, gf, altitude):
    """Relative bearings and ground central angles of trace samples, shape (n, m).

    ``altitude`` is an array of n altitudes. Sample spacing is at most 0.5 deg
    of scan azimuth (conical) or scan angle (cross-track), further limited so
    neighbours are less than one geofenced pixel apart. Both ends are extended
    by ``guard_pixels`` along-scan geofenced pixels.
    """
    altitude = np.atleast_1d(np.asarray(altitude, dtype=float))
    fp = spec.footprint(band)
    ext_km = gf.guard_pixels * gf.pixel_scale * fp.along_km
    pixel_km = gf.pixel_scale * min(fp.along_km, fp.cross_km)
    st = spec.scan_type
    if isinstance(st, Conical):
        alpha = ground_angle_rad(altitude, st.off_nadir_deg)  # (n,)
        ring_km = EARTH_RADIUS_KM * np.sin(alpha)
        ext_deg = np.degrees(ext_km / ring_km)  # along the constant-radius ring
        half = spec.active_scan_deg / 2.0 + ext_deg.max()
        step = min(MAX_AZIMUTH_STEP_DEG, math.degrees(0.9 * pixel_km / ring_km.max()))
        m = max(2, int(math.ceil(2 * half / step)) + 1)
        u = np.linspace(-1.0, 1.0, m)
        half_n = spec.active_scan_deg / 2.0 + ext_deg  # (n,)
        rel = st.look_azimuth_deg + u[None, :] * half_n[:, None]
        dist = np.broadcast_to(alpha[:, None], rel.shape)
        return rel, dist
    # cross-track: scan line perpendicular to the track through the sub-point
    half = spec.active_scan_deg / 2.0
    m = max(2, int(math.ceil(half / MAX_AZIMUTH_STEP_DEG)) + 1)
    theta = np.linspace(0.0, half, m)
    edge = ground_angle_rad(altitude[:, None], theta[None, :])  # (n, m)
    ext = ext_km / EARTH_RADIUS_KM
    far = edge[:, -1:] + ext
    side = np.concatenate([edge, far], axis=1)
    dist = np.concatenate([side[:, ::-1], side[:, 1:]], axis=1)
    rel = np.concatenate(
        [np.full(side.shape, -90.0), np.full((len(altitude), side.shape[1] - 1), 90.0)], axis=1
    )
    return rel, dist


def scanline_traces(states, spec, band, gf):
    """Ground traces for a batch of states (``orbit.StateArrays``).

    Returns:
        (lat, lon) in degrees, each shaped (n, m).
    """
    rel, dist = _trace_layout(spec, band, gf, states.altitude)
    bearing = np.radians(np.asarray(states.heading)[:, None] + rel)
    lat, lon = _kernels.fan_points(np.radians(states.lat), np.radians(states.lon), bearing, dist)
    return np.degrees(lat), np.degrees(lon)


def trace_reach_km(spec, band, gf, altitude_km: float) -> float:
    """Farthest any fenced point of a scan line lies from the sub-satellite point."""
    _, dist = _trace_layout(spec, band, gf, [altitude_km])
    return float(dist.max()) * EARTH_RADIUS_KM + geofence_halfwidth(spec, band, gf)


def scanline_arc(state, spec: RadiometerSpec, band: MeasurementBand, gf: GeofenceSpec) -> SwathArc:
    """Ground arc swept by one scan line at ``state``, with guard extension."""
    from .orbit import StateArrays

    arrays = StateArrays(
        np.array([state.time.timestamp()]),
        np.array([state.position]),
        np.array([state.velocity]),
        np.array([state.lat]),
        np.array([state.lon]),
        np.array([state.altitude]),
    )
    lat, lon = scanline_traces(arrays, spec, band, gf)
    return SwathArc(
        time=state.time,
        lats=tuple(float(x) for x in lat[0]),
        lons=tuple(float(x) for x in lon[0]),
        halfwidth_km=geofence_halfwidth(spec, band, gf),
    )
