"""Pure numpy implementations of the spherical geometry kernels.

All angles are radians on the unit sphere. These mirror ``_ckernels.pyx``
exactly and are used whenever the compiled module is unavailable.
"""
import numpy as np


def _unit_vectors(lat, lon):
    clat = np.cos(lat)
    return np.stack((clat * np.cos(lon), clat * np.sin(lon), np.sin(lat)), axis=-1)


def _angle(u, v):
    cross = np.linalg.norm(np.cross(u, v), axis=-1)
    dot = np.sum(u * v, axis=-1)
    return np.arctan2(cross, dot)


def fan_points(lat0, lon0, bearing, dist):
    """Destination points along great circles.

    Args:
        lat0, lon0: origin per row, shape (n,).
        bearing: initial bearing clockwise from north, shape (n, m).
        dist: central angle travelled, shape (n, m).

    Returns:
        (lat, lon) arrays of shape (n, m), longitude wrapped to [-pi, pi).
    """
    lat0 = np.asarray(lat0, dtype=float)[:, None]
    lon0 = np.asarray(lon0, dtype=float)[:, None]
    bearing = np.asarray(bearing, dtype=float)
    dist = np.asarray(dist, dtype=float)
    sin_lat = np.sin(lat0) * np.cos(dist) + np.cos(lat0) * np.sin(dist) * np.cos(bearing)
    lat = np.arcsin(np.clip(sin_lat, -1.0, 1.0))
    lon = lon0 + np.arctan2(
        np.sin(bearing) * np.sin(dist) * np.cos(lat0),
        np.cos(dist) - np.sin(lat0) * sin_lat,
    )
    lon = (lon + np.pi) % (2.0 * np.pi) - np.pi
    return lat, lon


def _segment_distances(p, a, b):
    # p: (3,) or (..., 3); a, b: (s, 3). Returns central angle per segment.
    n = np.cross(a, b)
    n_norm = np.linalg.norm(n, axis=-1)
    end_a = _angle(p, a)
    end_b = _angle(p, b)
    endpoint = np.minimum(end_a, end_b)
    ok = n_norm > 1e-15
    n_hat = np.where(ok[..., None], n / np.where(ok, n_norm, 1.0)[..., None], 0.0)
    pn = np.sum(p * n_hat, axis=-1)
    c = p - pn[..., None] * n_hat
    inside = (np.sum(np.cross(a, c) * n_hat, axis=-1) >= 0.0) & (
        np.sum(np.cross(c, b) * n_hat, axis=-1) >= 0.0
    )
    perp = np.arctan2(np.abs(pn), np.linalg.norm(c, axis=-1))
    return np.where(ok & inside, np.minimum(perp, endpoint), endpoint)


def polyline_min_distance(lat, lon, plat, plon):
    """Minimum central angle from one point to each row's polyline.

    Args:
        lat, lon: polyline vertices, shape (n, m), m >= 1.
        plat, plon: the query point.

    Returns:
        array of shape (n,).
    """
    lat = np.atleast_2d(np.asarray(lat, dtype=float))
    lon = np.atleast_2d(np.asarray(lon, dtype=float))
    p = _unit_vectors(np.float64(plat), np.float64(plon))
    v = _unit_vectors(lat, lon)
    if v.shape[1] == 1:
        return _angle(p, v[:, 0, :])
    d = _segment_distances(p, v[:, :-1, :], v[:, 1:, :])
    return d.min(axis=1)


def points_segments_min_distance(plat, plon, alat, alon, blat, blon):
    """Minimum central angle from each point to a set of segments A-B."""
    plat = np.atleast_1d(np.asarray(plat, dtype=float))
    plon = np.atleast_1d(np.asarray(plon, dtype=float))
    a = _unit_vectors(np.asarray(alat, dtype=float), np.asarray(alon, dtype=float))
    b = _unit_vectors(np.asarray(blat, dtype=float), np.asarray(blon, dtype=float))
    p = _unit_vectors(plat, plon)
    out = np.empty(len(plat))
    for i in range(len(plat)):
        out[i] = _segment_distances(p[i], a, b).min()
    return out
