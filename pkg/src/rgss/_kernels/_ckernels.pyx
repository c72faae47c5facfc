# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled spherical geometry kernels (unit sphere, radians).

Same contract as ``_pykernels``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, asin, atan2, sqrt, fabs, M_PI, fmod

cnp.import_array()


cdef inline void _unit(double lat, double lon, double* out) noexcept nogil:
    cdef double clat = cos(lat)
    out[0] = clat * cos(lon)
    out[1] = clat * sin(lon)
    out[2] = sin(lat)


cdef inline void _cross(const double* u, const double* v, double* out) noexcept nogil:
    out[0] = u[1] * v[2] - u[2] * v[1]
    out[1] = u[2] * v[0] - u[0] * v[2]
    out[2] = u[0] * v[1] - u[1] * v[0]


cdef inline double _dot(const double* u, const double* v) noexcept nogil:
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


cdef inline double _norm(const double* u) noexcept nogil:
    return sqrt(_dot(u, u))


cdef inline double _angle(const double* u, const double* v) noexcept nogil:
    cdef double c[3]
    _cross(u, v, c)
    return atan2(_norm(c), _dot(u, v))


cdef double _segment_distance(const double* p, const double* a, const double* b) noexcept nogil:
    cdef double n[3]
    cdef double c[3]
    cdef double t[3]
    cdef double nn, pn, perp
    cdef double da = _angle(p, a)
    cdef double db = _angle(p, b)
    cdef double endpoint = da if da < db else db
    _cross(a, b, n)
    nn = _norm(n)
    if nn <= 1e-15:
        return endpoint
    n[0] /= nn
    n[1] /= nn
    n[2] /= nn
    pn = _dot(p, n)
    c[0] = p[0] - pn * n[0]
    c[1] = p[1] - pn * n[1]
    c[2] = p[2] - pn * n[2]
    _cross(a, c, t)
    if _dot(t, n) < 0.0:
        return endpoint
    _cross(c, b, t)
    if _dot(t, n) < 0.0:
        return endpoint
    perp = atan2(fabs(pn), _norm(c))
    return perp if perp < endpoint else endpoint


def fan_points(lat0, lon0, bearing, dist):
    cdef double[::1] la0 = np.ascontiguousarray(lat0, dtype=np.float64)
    cdef double[::1] lo0 = np.ascontiguousarray(lon0, dtype=np.float64)
    cdef double[:, ::1] brg = np.ascontiguousarray(bearing, dtype=np.float64)
    cdef double[:, ::1] dst = np.ascontiguousarray(dist, dtype=np.float64)
    cdef Py_ssize_t n = brg.shape[0], m = brg.shape[1], i, j
    out_lat = np.empty((n, m))
    out_lon = np.empty((n, m))
    cdef double[:, ::1] olat = out_lat
    cdef double[:, ::1] olon = out_lon
    cdef double slat0, clat0, sd, cd, s, lon, two_pi = 2.0 * M_PI
    with nogil:
        for i in range(n):
            slat0 = sin(la0[i])
            clat0 = cos(la0[i])
            for j in range(m):
                sd = sin(dst[i, j])
                cd = cos(dst[i, j])
                s = slat0 * cd + clat0 * sd * cos(brg[i, j])
                if s > 1.0:
                    s = 1.0
                elif s < -1.0:
                    s = -1.0
                olat[i, j] = asin(s)
                lon = lo0[i] + atan2(sin(brg[i, j]) * sd * clat0, cd - slat0 * s)
                lon = fmod(lon + M_PI, two_pi)
                if lon < 0.0:
                    lon += two_pi
                olon[i, j] = lon - M_PI
    return out_lat, out_lon


def polyline_min_distance(lat, lon, double plat, double plon):
    cdef double[:, ::1] la = np.ascontiguousarray(np.atleast_2d(lat), dtype=np.float64)
    cdef double[:, ::1] lo = np.ascontiguousarray(np.atleast_2d(lon), dtype=np.float64)
    cdef Py_ssize_t n = la.shape[0], m = la.shape[1], i, j
    out = np.empty(n)
    cdef double[::1] o = out
    cdef double p[3]
    cdef double a[3]
    cdef double b[3]
    cdef double best, d
    _unit(plat, plon, p)
    with nogil:
        for i in range(n):
            _unit(la[i, 0], lo[i, 0], a)
            if m == 1:
                o[i] = _angle(p, a)
                continue
            best = 1e300
            for j in range(1, m):
                _unit(la[i, j], lo[i, j], b)
                d = _segment_distance(p, a, b)
                if d < best:
                    best = d
                a[0] = b[0]
                a[1] = b[1]
                a[2] = b[2]
            o[i] = best
    return out


def points_segments_min_distance(plat, plon, alat, alon, blat, blon):
    cdef double[::1] pla = np.ascontiguousarray(np.atleast_1d(plat), dtype=np.float64)
    cdef double[::1] plo = np.ascontiguousarray(np.atleast_1d(plon), dtype=np.float64)
    cdef double[::1] ala = np.ascontiguousarray(alat, dtype=np.float64)
    cdef double[::1] alo = np.ascontiguousarray(alon, dtype=np.float64)
    cdef double[::1] bla = np.ascontiguousarray(blat, dtype=np.float64)
    cdef double[::1] blo = np.ascontiguousarray(blon, dtype=np.float64)
    cdef Py_ssize_t k = pla.shape[0], s = ala.shape[0], i, j
    out = np.empty(k)
    cdef double[::1] o = out
    cdef double[:, ::1] av = np.empty((s, 3))
    cdef double[:, ::1] bv = np.empty((s, 3))
    cdef double p[3]
    cdef double best, d
    with nogil:
        for j in range(s):
            _unit(ala[j], alo[j], &av[j, 0])
            _unit(bla[j], blo[j], &bv[j, 0])
        for i in range(k):
            _unit(pla[i], plo[i], p)
            best = 1e300
            for j in range(s):
                d = _segment_distance(p, &av[j, 0], &bv[j, 0])
                if d < best:
                    best = d
            o[i] = best
    return out
