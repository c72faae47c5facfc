"""Compare the compiled and numpy geometry kernels, then time a full query.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

The end-to-end figure runs the one-day dark-time query for (42N, 74W) with
whichever backend is active (set RGSS_PURE_PYTHON=1 to time the fallback).
"""
import argparse
import math
import timeit
from datetime import datetime, timezone

import numpy as np

from rgss._kernels import BACKEND, _pykernels

try:
    from rgss._kernels import _ckernels
except ImportError:
    _ckernels = None


def workloads(rng):
    n, m = 2000, 250
    lat0 = rng.uniform(-1.2, 1.2, n)
    lon0 = rng.uniform(-math.pi, math.pi, n)
    bearing = rng.uniform(0, 2 * math.pi, (n, m))
    dist = rng.uniform(0, 0.2, (n, m))
    lat, lon = _pykernels.fan_points(lat0, lon0, bearing, dist)
    k = 20000
    seg = [rng.uniform(-1.2, 1.2, 200), rng.uniform(-3, 3, 200), rng.uniform(-1.2, 1.2, 200), rng.uniform(-3, 3, 200)]
    pts = (rng.uniform(-1.2, 1.2, k), rng.uniform(-3, 3, k))
    return {
        "fan_points": lambda mod: mod.fan_points(lat0, lon0, bearing, dist),
        "polyline_min_distance": lambda mod: mod.polyline_min_distance(lat, lon, 0.7, -1.3),
        "points_segments_min_distance": lambda mod: mod.points_segments_min_distance(*pts, *seg),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(7)
    print(f"active backend: {BACKEND}")
    print(f"{'kernel':30s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in workloads(rng).items():
        py = min(timeit.repeat(lambda fn=fn: fn(_pykernels), number=1, repeat=args.repeat)) * 1e3
        if _ckernels is None:
            print(f"{name:30s} {py:10.1f} {'n/a':>10s}")
            continue
        cy = min(timeit.repeat(lambda fn=fn: fn(_ckernels), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:30s} {py:10.1f} {cy:10.1f} {py / cy:7.1f}x")

    from rgss.catalog import default_catalog
    from rgss.darktime import Transmitter, compute_dark_windows
    from rgss.scan_geometry import GeofenceSpec

    cat = default_catalog()
    entry = cat.satellite("amsr2")
    band = entry.radiometer.bands[[b.center_ghz for b in entry.radiometer.bands].index(7.3)]
    tx = Transmitter("bench", 42.0, -74.0, (7.125, 7.475))
    start, end = datetime(2024, 11, 26, tzinfo=timezone.utc), datetime(2024, 11, 27, tzinfo=timezone.utc)
    tle = cat.elements_for("amsr2", start)
    t = min(timeit.repeat(lambda: compute_dark_windows(tle, entry.radiometer, band, GeofenceSpec(), tx, start, end),
                          number=1, repeat=args.repeat))
    print(f"one-day dark-time query ({BACKEND}): {t * 1e3:.0f} ms")


if __name__ == "__main__":
    main()
