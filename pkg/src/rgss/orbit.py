"""Two-line element ingest, SGP4 propagation and regional pass search.

Propagation follows SGP4 semantics through the ``sgp4`` package (WGS-72
constants, TEME frame). Positions are rotated to the Earth-fixed frame with
GMST and then reduced to sub-satellite points on the 6371 km sphere used by
every other module.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from sgp4.api import WGS72, Satrec

from .errors import DecayedOrbitError, PropagationError, StaleElementsError, TleFormatError
from .geodesy import (
    EARTH_RADIUS_KM,
    UNIX_EPOCH_JD,
    central_angle,
    ecef_to_spherical,
    from_unix,
    teme_to_ecef,
    to_unix,
)

DEFAULT_MAX_AGE_DAYS = 14.0
MU_EARTH = 398600.8  # km^3/s^2, WGS-72
TLE_LINE_LENGTH = 69


def tle_checksum(line: str) -> int:
    """Modulo-10 checksum over the first 68 columns (digits, '-' counts 1)."""
    total = 0
    for ch in line[:68]:
        if ch.isdigit():
            total += int(ch)
        elif ch == "-":
            total += 1
    return total % 10


def _exp_field(value: float) -> str:
    # " 12345-3" means 0.12345e-3
    if value == 0.0:
        return " 00000+0"
    sign = "-" if value < 0 else " "
    exponent = math.floor(math.log10(abs(value))) + 1
    mantissa = round(abs(value) / 10.0**exponent * 1e5)
    if mantissa >= 100000:
        mantissa //= 10
        exponent += 1
    return f"{sign}{mantissa:05d}{'-' if exponent < 0 else '+'}{abs(exponent):d}"


def _parse_exp_field(field: str) -> float:
    field = field.strip()
    if not field:
        return 0.0
    sign = -1.0 if field[0] == "-" else 1.0
    field = field.lstrip("+-")
    mantissa, exponent = field[:-2], field[-2:]
    return sign * float("0." + mantissa) * 10.0 ** int(exponent)


def _decode_epoch(yy: int, doy: float) -> datetime:
    year = 1900 + yy if yy >= 57 else 2000 + yy
    base = datetime(year, 1, 1, tzinfo=timezone.utc)
    # round to the microsecond; the field carries ~1 ms precision
    return base + timedelta(microseconds=round((doy - 1.0) * 86400e6))


@dataclass(frozen=True)
class TwoLineElements:
    norad_id: int
    name: str
    line1: str
    line2: str
    epoch: datetime

    @property
    def inclination_deg(self) -> float:
        return float(self.line2[8:16])

    @property
    def raan_deg(self) -> float:
        return float(self.line2[17:25])

    @property
    def eccentricity(self) -> float:
        return float("0." + self.line2[26:33].strip())

    @property
    def arg_perigee_deg(self) -> float:
        return float(self.line2[34:42])

    @property
    def mean_anomaly_deg(self) -> float:
        return float(self.line2[43:51])

    @property
    def mean_motion(self) -> float:
        """Revolutions per day."""
        return float(self.line2[52:63])

    @property
    def bstar(self) -> float:
        return _parse_exp_field(self.line1[53:61])

    @property
    def period_s(self) -> float:
        return 86400.0 / self.mean_motion

    def semi_major_axis_km(self) -> float:
        n = self.mean_motion * 2.0 * math.pi / 86400.0
        return (MU_EARTH / n**2) ** (1.0 / 3.0)

    def text(self) -> str:
        lines = [self.name] if self.name else []
        return "\n".join(lines + [self.line1, self.line2]) + "\n"


def parse_tle(text: str, verify_checksum: bool = True) -> TwoLineElements:
    """Parse one element set, optionally preceded by a name line.

    ``verify_checksum=False`` accepts sets whose modulo-10 check digit is
    wrong (some published verification sets carry bad digits on purpose).

    Raises:
        TleFormatError: on a bad line length, checksum or catalog mismatch;
            the message names the 1-based line number within ``text``.
    """
    raw = [(i + 1, ln.rstrip("\r\n")) for i, ln in enumerate(text.splitlines())]
    raw = [(no, ln) for no, ln in raw if ln.strip()]
    if len(raw) == 3:
        name = raw[0][1].strip()
        if name.startswith("0 "):
            name = name[2:].strip()
        raw = raw[1:]
    elif len(raw) == 2:
        name = ""
    else:
        no = raw[0][0] if raw else 1
        raise TleFormatError(f"expected 2 or 3 lines, found {len(raw)}", no)
    (no1, l1), (no2, l2) = raw
    for no, line, tag in ((no1, l1, "1"), (no2, l2, "2")):
        if len(line) != TLE_LINE_LENGTH:
            raise TleFormatError(f"length {len(line)}, expected {TLE_LINE_LENGTH}", no)
        if not line.startswith(tag + " "):
            raise TleFormatError(f"expected data line {tag}", no)
        if verify_checksum and (not line[68].isdigit() or tle_checksum(line) != int(line[68])):
            raise TleFormatError(
                f"checksum mismatch (computed {tle_checksum(line)}, found {line[68]!r})", no
            )
    try:
        cat1, cat2 = int(l1[2:7]), int(l2[2:7])
    except ValueError:
        raise TleFormatError("catalog number is not numeric", no1) from None
    if cat1 != cat2:
        raise TleFormatError(f"catalog number {cat2} differs from line 1 ({cat1})", no2)
    try:
        epoch = _decode_epoch(int(l1[18:20]), float(l1[20:32]))
    except ValueError:
        raise TleFormatError("unreadable epoch field", no1) from None
    return TwoLineElements(norad_id=cat1, name=name, line1=l1, line2=l2, epoch=epoch)


def parse_tle_history(text: str) -> list[TwoLineElements]:
    """Parse a file of consecutive element sets (names optional)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    out = []
    i = 0
    while i < len(lines):
        if lines[i].startswith("1 ") and i + 1 < len(lines) and lines[i + 1].startswith("2 "):
            chunk, i = lines[i : i + 2], i + 2
        else:
            chunk, i = lines[i : i + 3], i + 3
        out.append(parse_tle("\n".join(chunk)))
    return out


def format_tle(
    norad_id: int,
    epoch: datetime,
    inclination_deg: float,
    raan_deg: float,
    eccentricity: float,
    arg_perigee_deg: float,
    mean_anomaly_deg: float,
    mean_motion: float,
    *,
    name: str = "",
    bstar: float = 0.0,
    ndot: float = 0.0,
    intl_designator: str = "",
    element_set_no: int = 999,
    rev_number: int = 0,
) -> TwoLineElements:
    """Write an element set from mean elements (angles in degrees, rev/day)."""
    epoch = epoch.astimezone(timezone.utc)
    start = datetime(epoch.year, 1, 1, tzinfo=timezone.utc)
    doy = 1.0 + (epoch - start).total_seconds() / 86400.0
    ndot_s = ("-" if ndot < 0 else " ") + f"{abs(ndot):.8f}"[1:]
    l1 = (
        f"1 {norad_id:05d}U {intl_designator:<8} {epoch.year % 100:02d}{doy:012.8f} "
        f"{ndot_s} {_exp_field(0.0)} {_exp_field(bstar)} 0 {element_set_no % 10000:>4d}"
    )
    ecc = f"{eccentricity:.7f}"[2:]
    l2 = (
        f"2 {norad_id:05d} {inclination_deg % 360:8.4f} {raan_deg % 360:8.4f} {ecc} "
        f"{arg_perigee_deg % 360:8.4f} {mean_anomaly_deg % 360:8.4f} "
        f"{mean_motion:11.8f}{rev_number % 100000:5d}"
    )
    l1 += str(tle_checksum(l1))
    l2 += str(tle_checksum(l2))
    return parse_tle("\n".join(([name] if name else []) + [l1, l2]))


@lru_cache(maxsize=256)
def _satrec(line1: str, line2: str) -> Satrec:
    return Satrec.twoline2rv(line1, line2, WGS72)


@dataclass(frozen=True)
class SatelliteState:
    """Earth-fixed state of a satellite at one instant.

    ``position``/``velocity`` are geocentric Earth-fixed (km, km/s);
    ``lat``/``lon`` are the spherical sub-satellite point in degrees and
    ``altitude`` is height above the 6371 km sphere.
    """

    time: datetime
    position: tuple
    velocity: tuple
    lat: float
    lon: float
    altitude: float

    @property
    def heading_deg(self) -> float:
        """Ground-track bearing of the Earth-fixed velocity, degrees from north."""
        return float(_headings(np.array([self.position]), np.array([self.velocity]))[0])


class StateArrays(NamedTuple):
    """Vectorised states; every field has leading dimension n."""

    t: np.ndarray  # POSIX seconds
    position: np.ndarray
    velocity: np.ndarray
    lat: np.ndarray
    lon: np.ndarray
    altitude: np.ndarray

    @property
    def heading(self) -> np.ndarray:
        return _headings(self.position, self.velocity)

    def state(self, i: int) -> SatelliteState:
        return SatelliteState(
            time=from_unix(float(self.t[i])),
            position=tuple(float(x) for x in self.position[i]),
            velocity=tuple(float(x) for x in self.velocity[i]),
            lat=float(self.lat[i]),
            lon=float(self.lon[i]),
            altitude=float(self.altitude[i]),
        )


def _headings(r, v):
    up = r / np.linalg.norm(r, axis=-1, keepdims=True)
    z = np.array([0.0, 0.0, 1.0])
    east = np.cross(z, up)
    east_norm = np.linalg.norm(east, axis=-1, keepdims=True)
    east = np.where(east_norm > 1e-12, east / np.where(east_norm > 0, east_norm, 1.0), [0.0, 1.0, 0.0])
    north = np.cross(up, east)
    ve = np.sum(v * east, axis=-1)
    vn = np.sum(v * north, axis=-1)
    return np.degrees(np.arctan2(ve, vn)) % 360.0


def _check_age(tle: TwoLineElements, t_min: float, t_max: float, max_age_days):
    if max_age_days is None:
        return
    epoch = to_unix(tle.epoch)
    age = max(abs(t_min - epoch), abs(t_max - epoch)) / 86400.0
    if age > max_age_days:
        raise StaleElementsError(
            f"element set for {tle.norad_id} is {age:.1f} days from its epoch "
            f"(limit {max_age_days:g})",
            satellite=tle.norad_id,
        )


def propagate_many(tle: TwoLineElements, times, max_age_days=DEFAULT_MAX_AGE_DAYS) -> StateArrays:
    """Propagate to an array of POSIX timestamps (seconds, UTC)."""
    t = np.atleast_1d(np.asarray(times, dtype=float))
    if t.size == 0:
        empty = np.empty((0, 3))
        return StateArrays(t, empty, empty, t.copy(), t.copy(), t.copy())
    _check_age(tle, float(t.min()), float(t.max()), max_age_days)
    days = t / 86400.0
    jd = np.floor(days) + UNIX_EPOCH_JD
    fr = days - np.floor(days)
    err, r, v = _satrec(tle.line1, tle.line2).sgp4_array(jd, fr)
    if np.any(err != 0):
        code = int(err[err != 0][0])
        if code in (1, 6):  # elements out of range after drag, or below the surface
            raise DecayedOrbitError(f"orbit of {tle.norad_id} has decayed", satellite=tle.norad_id)
        raise PropagationError(f"SGP4 error code {code} for {tle.norad_id}", satellite=tle.norad_id)
    r_ecef, v_ecef = teme_to_ecef(r, v, jd + fr)
    lat, lon, alt = ecef_to_spherical(r_ecef)
    if np.any(alt <= 0.0):
        raise DecayedOrbitError(f"orbit of {tle.norad_id} is below the surface", satellite=tle.norad_id)
    return StateArrays(t, r_ecef, v_ecef, lat, lon, alt)


def propagate(tle: TwoLineElements, t: datetime, max_age_days=DEFAULT_MAX_AGE_DAYS) -> SatelliteState:
    """State of the satellite at UTC instant ``t``.

    Raises:
        StaleElementsError: ``t`` is more than ``max_age_days`` from the epoch.
        DecayedOrbitError: the propagated orbit has re-entered.
    """
    return propagate_many(tle, [to_unix(t)], max_age_days).state(0)


def teme_state(tle: TwoLineElements, minutes_since_epoch: float):
    """Raw TEME position/velocity at an offset from epoch (reference-vector form)."""
    err, r, v = _satrec(tle.line1, tle.line2).sgp4_tsince(minutes_since_epoch)
    if err != 0:
        raise PropagationError(f"SGP4 error code {err}", satellite=tle.norad_id)
    return np.array(r), np.array(v)


@dataclass(frozen=True)
class PassInterval:
    satellite_id: str
    start: datetime
    end: datetime
    direction: str  # "ascending" | "descending"

    @property
    def duration_s(self) -> float:
        return (self.end - self.start).total_seconds()


def _inside(tle, times, lat0, lon0, radius_rad, max_age_days):
    s = propagate_many(tle, times, max_age_days)
    return central_angle(s.lat, s.lon, lat0, lon0) <= radius_rad


def _bisect_edge(tle, t_out, t_in, lat0, lon0, radius_rad, tol, max_age_days):
    while abs(t_in - t_out) > tol:
        mid = 0.5 * (t_in + t_out)
        if _inside(tle, [mid], lat0, lon0, radius_rad, max_age_days)[0]:
            t_in = mid
        else:
            t_out = mid
    return t_in


def find_passes(
    tle: TwoLineElements,
    center,
    radius_km: float,
    start: datetime,
    end: datetime,
    *,
    satellite_id=None,
    step_s: float = 1.0,
    edge_tol_s: float = 0.01,
    max_age_days=DEFAULT_MAX_AGE_DAYS,
) -> list[PassInterval]:
    """Intervals during which the sub-satellite point is within ``radius_km`` of ``center``.

    The track is sampled every ``step_s`` seconds and each edge is refined by
    bisection to ``edge_tol_s``. Intervals touching the range limits are
    clipped to them.
    """
    t0, t1 = to_unix(start), to_unix(end)
    if t1 < t0:
        raise ValueError("empty range: end precedes start")
    if t1 == t0:
        return []
    lat0, lon0 = center
    radius_rad = radius_km / EARTH_RADIUS_KM
    sid = str(satellite_id if satellite_id is not None else tle.norad_id)
    times = np.arange(t0, t1, step_s)
    if times[-1] < t1:
        times = np.append(times, t1)
    s = propagate_many(tle, times, max_age_days)
    inside = central_angle(s.lat, s.lon, lat0, lon0) <= radius_rad
    padded = np.concatenate(([False], inside, [False])).astype(np.int8)
    edges = np.diff(padded)
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1) - 1
    passes = []
    for i, j in zip(starts, ends):
        a = times[i] if i == 0 else _bisect_edge(tle, times[i - 1], times[i], lat0, lon0, radius_rad, edge_tol_s, max_age_days)
        b = times[j] if j == len(times) - 1 else _bisect_edge(tle, times[j + 1], times[j], lat0, lon0, radius_rad, edge_tol_s, max_age_days)
        if b <= a:
            # single-sample grazing pass; keep a minimal interval around it
            b = min(a + edge_tol_s, t1)
            if b <= a:
                continue
        mid = 0.5 * (a + b)
        lat_pair = propagate_many(tle, [mid - 0.5, mid + 0.5], max_age_days).lat
        direction = "ascending" if lat_pair[1] >= lat_pair[0] else "descending"
        passes.append(PassInterval(sid, from_unix(a), from_unix(b), direction))
    return passes
