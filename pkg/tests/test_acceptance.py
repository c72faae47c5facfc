"""Acceptance gate: one test per exit criterion.

Each test attaches its measured values through ``report`` so the terminal
summary shows one PASS/FAIL line per criterion with the numbers behind it.
Derived quantities are checked against oracles written independently of the
package code (numerical quadrature, ray/sphere intersection, brute-force
grids, exhaustive search).
"""
import json
import math
import random
import time
from datetime import timedelta
from types import SimpleNamespace

import numpy as np
import pytest
from fastapi.testclient import TestClient
from scipy.integrate import quad
from shapely.geometry import shape
from shapely.validation import explain_validity

from rgss.catalog import CatalogStore, load_catalog, save_catalog
from rgss.cli import main
from rgss.darktime import Transmitter, availability, coastal_filter, compute_dark_windows, merge_windows
from rgss.errors import PropagationError
from rgss.geodesy import to_unix
from rgss.mitigation import (
    CellSite,
    MitigationPolicy,
    TrafficProfile,
    diurnal_load,
    impact_score,
    plan_mitigation,
    plan_site,
)
from rgss.orbit import propagate_many, teme_state
from rgss.scan_geometry import beam_containment, inland_extent

from .conftest import PSST, load_reference_vectors, utc

pytestmark = pytest.mark.acceptance

R_EARTH = 6371.0
HISTORY_FIRST_DAY = utc(2024, 11, 12, 12)  # element histories run 2024-11-12 .. 2024-12-10
HISTORY_DAYS = 27


def unit(lat, lon):
    la, lo = math.radians(lat), math.radians(lon)
    return np.array([math.cos(la) * math.cos(lo), math.cos(la) * math.sin(lo), math.sin(la)])


def local_hour(t, lon):
    return ((t.hour + t.minute / 60 + t.second / 3600) + lon / 15.0) % 24.0


def nearest_elements(entry, when):
    return min(entry.history, key=lambda t: abs((t.epoch - when).total_seconds()))


# ------------------------------------------------------- ray/sphere oracle

class ArcOracle:
    """Distance from a site to the fenced scan arc, by direct ray tracing.

    For each satellite state the boresight is swept across the active sector
    (plus the along-scan guard pixels) in 0.05 deg steps; every ray is
    intersected with the 6371 km sphere and the great-circle distance to the
    site taken on the sphere.
    """

    def __init__(self, spec, band, gf, step_deg=0.05):
        fp = spec.footprint(band)
        pixel = gf.pixel_scale * fp.cross_km
        self.halfwidth_km = pixel / 2 + gf.guard_pixels * pixel
        self.ext_km = gf.guard_pixels * gf.pixel_scale * fp.along_km
        self.theta = math.radians(spec.scan_type.off_nadir_deg)
        self.look = spec.scan_type.look_azimuth_deg
        self.active = spec.active_scan_deg
        self.step = step_deg

    def _hits(self, r, up, fwd, right, az_deg):
        az = np.radians(np.atleast_1d(az_deg))
        d = (-math.cos(self.theta) * up[None]
             + math.sin(self.theta) * (np.cos(az)[:, None] * fwd + np.sin(az)[:, None] * right))
        b = d @ r
        s = -b - np.sqrt(b * b - (r @ r - R_EARTH**2))
        p = r + s[:, None] * d
        return p / np.linalg.norm(p, axis=1, keepdims=True)

    def distance_km(self, r, v, site):
        up = r / np.linalg.norm(r)
        fwd = v - (v @ up) * up
        fwd /= np.linalg.norm(fwd)
        right = np.cross(fwd, up)
        centre = self._hits(r, up, fwd, right, self.look)[0]
        ring_km = R_EARTH * math.sin(math.acos(np.clip(centre @ up, -1, 1)))
        half = self.active / 2 + math.degrees(self.ext_km / ring_km)
        az = np.append(np.arange(-half, half, self.step), half) + self.look
        pts = self._hits(r, up, fwd, right, az)
        return R_EARTH * float(np.min(np.arccos(np.clip(pts @ site, -1, 1))))

    def is_dark(self, r, v, site):
        return self.distance_km(r, v, site) <= self.halfwidth_km


def random_scenario(rng, catalog):
    lat = float(rng.uniform(-70.0, 70.0))
    lon = float(rng.uniform(-180.0, 180.0))
    start = HISTORY_FIRST_DAY + timedelta(days=int(rng.integers(0, HISTORY_DAYS)), seconds=float(rng.uniform(0, 43200)))
    tx = Transmitter("rand", lat, lon, PSST)
    tle = catalog.elements_for("amsr2", start + timedelta(hours=12))
    return tx, tle, start


# --------------------------------------------------------------- criteria

def test_criterion_01_fig2_scenario(report, catalog, amsr2, band73, gf, fig2_tx):
    tle = nearest_elements(amsr2, utc(2024, 11, 26, 12))
    assert tle.norad_id == 38337
    day = utc(2024, 11, 26)
    t = time.perf_counter()
    ws = compute_dark_windows(tle, amsr2.radiometer, band73, gf, fig2_tx, day, day + timedelta(days=1))
    elapsed = time.perf_counter() - t
    lines = sum(w.scanline_count for w in ws)
    dark = sum(w.duration_s for w in ws)
    hours = [round(local_hour(w.start, fig2_tx.lon), 2) for w in ws]
    report(f"{len(ws)} windows, {lines} lines, {dark:.1f} s, local hours {hours}, {elapsed:.2f} s runtime")
    assert len(ws) == 2
    night, day_w = ws
    assert night.direction == "descending" and abs(local_hour(night.start, fig2_tx.lon) - 2.0) <= 2.0
    assert day_w.direction == "ascending" and 10.0 <= local_hour(day_w.start, fig2_tx.lon) <= 14.0
    assert lines == pytest.approx(14, abs=3)
    assert dark == pytest.approx(21.0, abs=4.5)
    assert elapsed < 10.0


def test_criterion_02_two_satellite_availability(report, catalog, band73, gf):
    first, second = catalog.satellite("amsr2"), catalog.satellite("amsr3-sim")
    assert second.radiometer == first.radiometer  # same instrument, shifted orbit
    tx = catalog.transmitters["310410-0000A1002"]  # New Jersey shore
    assert coastal_filter([tx], catalog.coastline, first.radiometer, band73, gf) == [tx]
    start, end = utc(2024, 11, 26), utc(2024, 12, 3)
    mid = start + (end - start) / 2
    per_sat = [
        compute_dark_windows(catalog.elements_for(e.id, mid), e.radiometer, band73, gf, tx, start, end,
                             satellite_id=e.id)
        for e in (first, second)
    ]
    rep = availability(per_sat[0] + per_sat[1], start, end)
    report(f"availability {rep.availability:.6f} ({rep.total_dark_s:.1f} s dark over 7 days, "
           f"{len(per_sat[0])}+{len(per_sat[1])} windows)")
    assert all(per_sat)
    assert 0.9994 <= rep.availability <= 0.9999


def two_pixel_width_oracle(along_km, cross_km, azimuth_deg, n=20000):
    """Across-track width of two touching ellipses laid end to end along the scan.

    Boundary points of both ellipses are rotated into the ground frame and the
    spread of their across-track coordinates is measured directly.
    """
    t = np.linspace(0, 2 * math.pi, n)
    u = np.concatenate([along_km / 2 * np.cos(t), along_km / 2 * np.cos(t) + along_km])  # along-scan
    w = np.concatenate([cross_km / 2 * np.sin(t)] * 2)  # across-scan
    phi = math.radians(azimuth_deg)
    across_track = u * math.cos(phi) - w * math.sin(phi)
    return float(across_track.max() - across_track.min())


def test_criterion_03_geofence_extent(report, amsr2, band73, gf):
    spec = amsr2.radiometer
    fp = spec.footprint(band73)
    az = np.linspace(-spec.active_scan_deg / 2, spec.active_scan_deg / 2, 245)
    got = inland_extent(spec, band73, gf, az, pixels=2)
    want = np.array([two_pixel_width_oracle(gf.pixel_scale * fp.along_km, gf.pixel_scale * fp.cross_km, a)
                     for a in az])
    report(f"extent {got.min():.1f}..{got.max():.1f} km (oracle {want.min():.1f}..{want.max():.1f} km)")
    assert np.allclose(got, want, atol=0.05)
    assert got.min() >= 85.0 and got.max() <= 190.0
    assert got.min() <= 90.0 and got.max() >= 180.0


def test_criterion_04_beam_containment(report):
    sigma = 1.0 / (2 * math.sqrt(2 * math.log(2)))  # unit FWHM

    def gauss(x):
        return math.exp(-x * x / (2 * sigma * sigma)) / (sigma * math.sqrt(2 * math.pi))

    two = quad(gauss, -1.0, 1.0)[0]
    one = quad(gauss, -0.5, 0.5)[0]
    report(f"within 2xFWHM {two:.4f} (claimed 98%), within 1xFWHM {one:.4f} (claimed 68%)")
    assert two == pytest.approx(0.981, abs=0.001)
    assert beam_containment(2.0) == pytest.approx(two, abs=1e-9)
    assert beam_containment(1.0) == pytest.approx(one, abs=1e-9)
    assert one == pytest.approx(0.761, abs=0.001)


def test_criterion_05_sgp4_reference_vectors(report):
    tles, rows = load_reference_vectors()
    worst, checked, skipped = 0.0, 0, []
    for sat, table in rows.items():
        if sat == 33334:  # built to fail initialisation; its one row is not a trajectory point
            with pytest.raises(PropagationError):
                teme_state(tles[sat], table[0][0])
            skipped.append(sat)
            continue
        for tsince, *ref in table:
            r, _ = teme_state(tles[sat], tsince)
            worst = max(worst, float(np.linalg.norm(r - np.array(ref[:3]))))
            checked += 1
    report(f"{checked} tabulated offsets over {len(rows) - len(skipped)} element sets, worst error {worst * 1000:.3f} m")
    assert checked > 500
    assert worst < 1.0


def test_criterion_06_open_loop_guard_lines(report, catalog, amsr2, band73, gf):
    rng = np.random.default_rng(20241126)
    oracle = ArcOracle(amsr2.radiometer, band73, gf)
    windows = clean = 0
    for _ in range(100):
        tx, tle, start = random_scenario(rng, catalog)
        site = unit(tx.lat, tx.lon)
        ws = compute_dark_windows(tle, amsr2.radiometer, band73, gf, tx, start, start + timedelta(days=1))
        for w in ws:
            assert w.scanline_count >= w.core_scanlines + 2
            half = w.scan_period_s / 2
            edge = propagate_many(tle, [to_unix(w.start) + half, to_unix(w.end) - half])
            windows += 1
            clean += not any(oracle.is_dark(edge.position[i], edge.velocity[i], site) for i in range(2))
    frac = clean / windows
    report(f"{windows} windows from 100 scenarios, edge lines clear in {frac:.1%}")
    assert windows >= 100
    assert frac >= 0.95


def test_criterion_07_coverage_soundness(report, catalog, amsr2, band73, gf):
    rng = np.random.default_rng(7)
    spec = amsr2.radiometer
    oracle = ArcOracle(spec, band73, gf)
    period = spec.scan_period_s
    reach_km = 1100.0  # well beyond the ring radius plus guard extension
    dark_lines = misses = 0
    for _ in range(20):
        tx, tle, start = random_scenario(rng, catalog)
        site = unit(tx.lat, tx.lon)
        ws = compute_dark_windows(tle, spec, band73, gf, tx, start, start + timedelta(days=1))
        spans = [(to_unix(w.start), to_unix(w.end)) for w in ws]
        # the sweep's own grid, anchored at the scenario start
        t = to_unix(start) + (np.arange(int(86400 / period)) + 0.5) * period
        st = propagate_many(tle, t)
        sub = st.position / np.linalg.norm(st.position, axis=1, keepdims=True)
        near = np.flatnonzero(R_EARTH * np.arccos(np.clip(sub @ site, -1, 1)) < reach_km)
        for i in near:
            if oracle.is_dark(st.position[i], st.velocity[i], site):
                dark_lines += 1
                misses += not any(a <= t[i] <= b for a, b in spans)
    report(f"{dark_lines} dark scan lines found by sweep, {misses} outside emitted windows")
    assert dark_lines > 0
    assert misses == 0


def brute_cover(intervals, lo, hi):
    grid = np.arange(lo, hi)
    cover = np.zeros(grid.size, dtype=bool)
    for s, e in intervals:
        cover |= (grid >= s) & (grid < e)
    return cover


def test_criterion_08_union_properties(report):
    rnd = random.Random(8)
    base = utc(2024, 11, 26)
    horizon = 3600
    for _ in range(1000):
        ivs = []
        for _ in range(rnd.randint(0, 15)):
            s = rnd.randint(0, horizon - 1)
            ivs.append((s, min(horizon, s + rnd.randint(0, 300))))
        merged = [(w.start, w.end) for w in merge_windows(ivs)]
        assert [(w.start, w.end) for w in merge_windows(merged)] == merged
        shuffled = ivs[:]
        rnd.shuffle(shuffled)
        assert [(w.start, w.end) for w in merge_windows(shuffled)] == merged
        assert np.array_equal(brute_cover(merged, 0, horizon), brute_cover(ivs, 0, horizon))
        as_dt = [(base + timedelta(seconds=s), base + timedelta(seconds=e)) for s, e in ivs]
        rep = availability(as_dt, base, base + timedelta(seconds=horizon))
        assert rep.total_dark_s == brute_cover(ivs, 0, horizon).sum()
    report("1000 random interval sets: idempotent, order-free, equal to 1 s brute force")


def _window_at_local(hour, minute=0, offset_h=-5.0):
    start = utc(2024, 11, 26) + timedelta(hours=hour - offset_h, minutes=minute) - timedelta(seconds=5)
    return SimpleNamespace(satellite_id="amsr2", start=start, end=start + timedelta(seconds=10.5))


def _sites(n, spare):
    return [CellSite(f"gnb-{i}", f"tx{i}", {"urllc": 20, "real_time": 60, "best_effort": 200}, spare, -5.0)
            for i in range(n)]


def test_criterion_09_mitigation(report):
    quiet = TrafficProfile(((2.0, 0.12), (14.0, 0.45), (21.0, 1.0)))
    night = plan_mitigation(_window_at_local(2), _sites(3, 1000), quiet)
    assert diurnal_load(2.0, quiet) == pytest.approx(0.12)
    assert {a.action for a in night.actions} == {"sleep"}
    assert impact_score(night) == 0.0

    midday = _window_at_local(13, 30)
    probe = plan_site(_sites(1, 0)[0], midday.start, TrafficProfile(), MitigationPolicy())
    spare = probe.active["urllc"] + probe.active["real_time"]  # no room for best effort
    plan = plan_mitigation(midday, _sites(3, spare))
    shed_be = 0
    for a in plan.actions:
        assert a.action == "handover"
        assert a.handed_over["urllc"] == a.active["urllc"] and a.shed["urllc"] == 0
        assert a.shed["real_time"] == 0
        assert a.shed["best_effort"] == a.active["best_effort"] > 0
        shed_be += a.shed["best_effort"]
    lo, hi = diurnal_load(4.0), diurnal_load(21.0)
    report(f"2 AM plan all sleep, impact 0; 13:30 plan sheds {shed_be} best-effort only; "
           f"load(4)={lo:.3f}, load(21)={hi:.3f}")
    assert 0.10 <= lo <= 0.15
    assert hi == 1.0


def validate_geojson(doc):
    """RFC 7946 structure plus shapely validity of every geometry."""
    assert doc["type"] == "FeatureCollection" and isinstance(doc["features"], list) and doc["features"]
    for f in doc["features"]:
        assert f["type"] == "Feature" and isinstance(f.get("properties"), dict)
        geom = f["geometry"]
        if geom["type"] == "LineString":
            rings = [geom["coordinates"]]
            assert len(rings[0]) >= 2
        else:
            assert geom["type"] == "Polygon"
            rings = geom["coordinates"]
            for ring in rings:
                assert len(ring) >= 4 and ring[0] == ring[-1]
        for ring in rings:
            for p in ring:
                assert len(p) in (2, 3) and -180 <= p[0] <= 180 and -90 <= p[1] <= 90
        shp = shape(geom)
        assert shp.is_valid, explain_validity(shp)
        assert not shp.is_empty
        if geom["type"] == "Polygon":
            assert shp.exterior.is_ccw


NIGHT_SITES = {
    "profile": [[2.0, 0.12], [14.0, 0.45], [21.0, 1.0]],
    "sites": [{"site_id": f"gnb-{i}", "transmitter": "310410-0000A1001",
               "sessions": {"urllc": 10, "real_time": 40, "best_effort": 120},
               "spare_capacity": 50, "utc_offset_h": -5} for i in range(3)],
}
WINDOW = {"satellite": "amsr2", "start": "2024-11-26T18:06:17.000Z", "end": "2024-11-26T18:06:27.500Z"}


def equivalence_fixtures(tmp_path):
    (tmp_path / "window.json").write_text(json.dumps(WINDOW))
    (tmp_path / "sites.json").write_text(json.dumps(NIGHT_SITES))
    fig2 = {"location": {"lat": 42.0, "lon": -74.0}, "date": "2024-11-26"}
    return [
        (["darktimes", "--lat", "42", "--lon", "-74", "--date", "2024-11-26"],
         "/v1/darktimes", fig2),
        (["darktimes", "--ngci", "310410-0000A1002", "--date", "2024-11-28", "--days", "2",
          "--satellites", "amsr2,amsr3-sim"],
         "/v1/darktimes", {"ngci": "310410-0000A1002", "date": "2024-11-28", "days": 2,
                           "satellites": ["amsr2", "amsr3-sim"]}),
        (["darktimes", "--lat", "35", "--lon", "-100", "--start", "2024-11-30T00:00:00Z",
          "--end", "2024-11-30T12:00:00Z", "--band", "10.6:10.7"],
         "/v1/darktimes", {"location": {"lat": 35.0, "lon": -100.0}, "start": "2024-11-30T00:00:00Z",
                           "end": "2024-11-30T12:00:00Z", "freq_ghz": [10.6, 10.7]}),
        (["darktimes", "--lat", "42", "--lon", "-74", "--date", "2024-11-26", "--adjacency-guard", "0.2",
          "--pixel-scale", "2.5", "--guard-scanlines", "2"],
         "/v1/darktimes", dict(fig2, adjacency_guard_ghz=0.2,
                               geofence={"pixel_scale": 2.5, "open_loop_guard_scanlines": 2})),
        (["availability", "--lat", "40.35", "--lon", "-74.3", "--date", "2024-12-01", "--days", "3"],
         "/v1/availability", {"location": {"lat": 40.35, "lon": -74.3}, "date": "2024-12-01", "days": 3}),
        (["availability", "--date", "2024-11-26", "--satellites", "amsr2"],
         "/v1/availability", {"date": "2024-11-26", "satellites": ["amsr2"]}),
        (["geofence", "--lat", "42", "--lon", "-74", "--date", "2024-11-26", "--satellite", "amsr2"],
         "/v1/geofence", dict(fig2, satellite="amsr2")),
        (["geofence", "--ngci", "310410-0000A1002", "--date", "2024-11-28", "--satellite", "amsr2",
          "--traversal", "1"],
         "/v1/geofence", {"ngci": "310410-0000A1002", "date": "2024-11-28", "satellite": "amsr2", "traversal": 1}),
        (["coastal-filter"], "/v1/coastal-filter", {}),
        (["plan-mitigation", "--window", str(tmp_path / "window.json"), "--sites", str(tmp_path / "sites.json")],
         "/v1/mitigation-plan", {"window": WINDOW, **NIGHT_SITES, "policy": {}}),
    ]


def test_criterion_10_api_cli_equivalence(report, tmp_path, capsys, catalog):
    config = save_catalog(catalog, tmp_path / "snapshot")
    client = TestClient(create_app_for(config))
    fixtures = equivalence_fixtures(tmp_path)
    same = geo = 0
    for argv, route, body in fixtures:
        code = main(["--config", str(config), *argv])
        out, err = capsys.readouterr()
        assert code == 0, err
        r = client.post(route, json=body)
        assert r.status_code == 200, r.text
        assert json.loads(out) == r.json(), argv
        same += 1
        if route == "/v1/geofence":
            validate_geojson(r.json())
            geo += 1
    report(f"{same}/{len(fixtures)} fixtures identical; {geo} geofence documents valid GeoJSON")
    assert same == 10 and geo >= 1


def create_app_for(config):
    from rgss.service import create_app

    return create_app(CatalogStore(load_catalog(config)))
