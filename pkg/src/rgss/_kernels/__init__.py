"""Spherical geometry kernels with a compiled core and a numpy fallback.

The Cython module is used when it was built; set ``RGSS_PURE_PYTHON=1`` to
force the fallback. ``BACKEND`` names the active implementation.
"""
import os

from . import _pykernels

if os.environ.get("RGSS_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

fan_points = _impl.fan_points
polyline_min_distance = _impl.polyline_min_distance
points_segments_min_distance = _impl.points_segments_min_distance

__all__ = [
    "BACKEND",
    "fan_points",
    "polyline_min_distance",
    "points_segments_min_distance",
]
