"""Spherical-Earth geodesy shared by every geometry module.

All downstream geometry uses a sphere of radius 6371.0 km. Propagation itself
happens in the SGP4 TEME frame; only the sub-satellite conversion and the
ground geometry are spherical. Sphericity error (< 0.5%) is far below the
geofence guard band.
"""
import math
from datetime import datetime, timezone

import numpy as np

EARTH_RADIUS_KM = 6371.0
EARTH_ROTATION_RAD_S = 7.292115146706979e-5
SIDEREAL_DAY_S = 86164.0905
UNIX_EPOCH_JD = 2440587.5


def normalize_lon(lon_deg):
    """Wrap longitude into (-180, 180]."""
    lon = math.fmod(lon_deg, 360.0)
    if lon <= -180.0:
        lon += 360.0
    elif lon > 180.0:
        lon -= 360.0
    return lon


def to_unix(t: datetime) -> float:
    if t.tzinfo is None:
        raise ValueError("naive datetime; UTC timestamps must be timezone-aware")
    return t.timestamp()


def from_unix(seconds: float) -> datetime:
    return datetime.fromtimestamp(seconds, tz=timezone.utc)


def central_angle(lat1, lon1, lat2, lon2):
    """Haversine central angle in radians; inputs in degrees, broadcastable."""
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dphi = p2 - p1
    dlmb = np.radians(np.asarray(lon2) - np.asarray(lon1))
    h = np.sin(dphi / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlmb / 2) ** 2
    return 2.0 * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def great_circle_km(lat1, lon1, lat2, lon2):
    return EARTH_RADIUS_KM * central_angle(lat1, lon1, lat2, lon2)


def initial_bearing(lat1, lon1, lat2, lon2):
    """Bearing in degrees clockwise from north, from point 1 towards point 2."""
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dl = np.radians(np.asarray(lon2) - np.asarray(lon1))
    y = np.sin(dl) * np.cos(p2)
    x = np.cos(p1) * np.sin(p2) - np.sin(p1) * np.cos(p2) * np.cos(dl)
    return np.degrees(np.arctan2(y, x)) % 360.0


def destination(lat, lon, bearing_deg, distance_km):
    """Point reached travelling ``distance_km`` along a great circle."""
    p1 = np.radians(lat)
    d = np.asarray(distance_km) / EARTH_RADIUS_KM
    b = np.radians(bearing_deg)
    s = np.sin(p1) * np.cos(d) + np.cos(p1) * np.sin(d) * np.cos(b)
    p2 = np.arcsin(np.clip(s, -1.0, 1.0))
    l2 = np.radians(lon) + np.arctan2(np.sin(b) * np.sin(d) * np.cos(p1), np.cos(d) - np.sin(p1) * s)
    lon2 = (np.degrees(l2) + 180.0) % 360.0 - 180.0
    return np.degrees(p2), lon2


def gmst_rad(jd_ut1):
    """Greenwich mean sidereal time (IAU-82), radians in [0, 2pi)."""
    t = (np.asarray(jd_ut1) - 2451545.0) / 36525.0
    sec = (
        -6.2e-6 * t**3
        + 0.093104 * t**2
        + (876600.0 * 3600.0 + 8640184.812866) * t
        + 67310.54841
    )
    return np.radians(sec / 240.0) % (2.0 * np.pi)


def teme_to_ecef(r, v, jd):
    """Rotate TEME position/velocity (..., 3) into the Earth-fixed frame.

    Polar motion and UT1-UTC are ignored; both are metre-level effects.
    """
    theta = gmst_rad(jd)
    c, s = np.cos(theta), np.sin(theta)
    r = np.asarray(r, dtype=float)
    v = np.asarray(v, dtype=float)
    x = c * r[..., 0] + s * r[..., 1]
    y = -s * r[..., 0] + c * r[..., 1]
    z = r[..., 2]
    vx = c * v[..., 0] + s * v[..., 1] + EARTH_ROTATION_RAD_S * y
    vy = -s * v[..., 0] + c * v[..., 1] - EARTH_ROTATION_RAD_S * x
    vz = v[..., 2]
    return np.stack((x, y, z), axis=-1), np.stack((vx, vy, vz), axis=-1)


def ecef_to_spherical(r):
    """Geocentric latitude/longitude in degrees and height above the sphere."""
    r = np.asarray(r, dtype=float)
    norm = np.linalg.norm(r, axis=-1)
    lat = np.degrees(np.arcsin(r[..., 2] / norm))
    lon = np.degrees(np.arctan2(r[..., 1], r[..., 0]))
    return lat, lon, norm - EARTH_RADIUS_KM
