import math
from dataclasses import replace
from datetime import timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from rgss.errors import ValidationError
from rgss.geodesy import EARTH_RADIUS_KM, great_circle_km, to_unix
from rgss.orbit import SatelliteState, propagate, propagate_many
from rgss.scan_geometry import (
    Conical,
    CrossTrack,
    Footprint,
    GeofenceSpec,
    MeasurementBand,
    RadiometerSpec,
    beam_containment,
    boresight_ground_point,
    geofence_halfwidth,
    horizon_limit_deg,
    inland_extent,
    max_inland_extent,
    scanline_arc,
    scanline_traces,
)

from .conftest import utc


def synthetic_state(lat, lon, altitude, heading=0.0):
    """State above (lat, lon) moving along ``heading`` at orbital speed."""
    la, lo, hd = map(math.radians, (lat, lon, heading))
    up = np.array([math.cos(la) * math.cos(lo), math.cos(la) * math.sin(lo), math.sin(la)])
    east = np.array([-math.sin(lo), math.cos(lo), 0.0])
    north = np.cross(up, east)
    v = 7.5 * (math.cos(hd) * north + math.sin(hd) * east)
    r = (EARTH_RADIUS_KM + altitude) * up
    return SatelliteState(utc(2024, 11, 26), tuple(r), tuple(v), lat, lon, altitude)


def alpha_oracle_km(altitude, theta_deg):
    th = math.radians(theta_deg)
    return EARTH_RADIUS_KM * (math.asin((EARTH_RADIUS_KM + altitude) / EARTH_RADIUS_KM * math.sin(th)) - th)


def test_nadir_hits_subpoint():
    s = synthetic_state(10.0, 20.0, 710.0)
    for az in (0, 90, 213):
        lat, lon = boresight_ground_point(s, az, 0.0)
        assert lat == pytest.approx(10.0, abs=1e-9) and lon == pytest.approx(20.0, abs=1e-9)


def test_amsr2_cone_ground_distance():
    s = synthetic_state(40.0, -70.0, 710.0)
    lat, lon = boresight_ground_point(s, 0.0, 47.5)
    d = great_circle_km(40.0, -70.0, lat, lon)
    assert d == pytest.approx(840.0, abs=10.0)
    assert d == pytest.approx(alpha_oracle_km(710.0, 47.5), abs=0.01)


def test_beyond_horizon():
    assert horizon_limit_deg(710.0) == pytest.approx(64.1, abs=0.05)
    with pytest.raises(ValidationError, match="horizon"):
        boresight_ground_point(synthetic_state(0.0, 0.0, 710.0), 0.0, 65.0)


@settings(max_examples=60, deadline=None)
@given(
    lat=st.floats(-75, 75),
    lon=st.floats(-180, 180),
    heading=st.floats(0, 360),
    az=st.floats(-180, 180),
    theta=st.floats(0.5, 60.0),
)
def test_boresight_matches_spherical_triangle(lat, lon, heading, az, theta):
    s = synthetic_state(lat, lon, 710.0, heading)
    blat, blon = boresight_ground_point(s, az, theta)
    assert great_circle_km(lat, lon, blat, blon) == pytest.approx(alpha_oracle_km(710.0, theta), abs=0.05)


def test_amsr2_trace_constant_radius(amsr2, band73, gf, tle_nov26):
    s = propagate(tle_nov26, utc(2024, 11, 26, 7))
    arc = scanline_arc(s, amsr2.radiometer, band73, gf)
    d = great_circle_km(s.lat, s.lon, np.array(arc.lats), np.array(arc.lons))
    assert np.all(np.abs(d - alpha_oracle_km(s.altitude, 47.5)) < 1.0)


def test_trace_samples_agree_with_ray_intersection(amsr2, band73, tle_nov26):
    s = propagate(tle_nov26, utc(2024, 11, 26, 7))
    gf = GeofenceSpec(guard_pixels=0)
    arc = scanline_arc(s, amsr2.radiometer, band73, gf)
    # trace end points are the +/-61 deg boresight hits
    for az, i in ((-61.0, 0), (61.0, -1)):
        lat, lon = boresight_ground_point(s, az, 47.5)
        assert great_circle_km(lat, lon, arc.lats[i], arc.lons[i]) < 2.0


def test_arc_length_range(amsr2, band73, tle_nov26):
    s = propagate(tle_nov26, utc(2024, 11, 26, 7))
    arc = scanline_arc(s, amsr2.radiometer, band73, GeofenceSpec(guard_pixels=0))
    assert 1700.0 <= arc.length_km() <= 2800.0


def test_degenerate_scan(amsr2, band73, tle_nov26):
    spec = replace(amsr2.radiometer, active_scan_deg=1e-4)
    s = propagate(tle_nov26, utc(2024, 11, 26, 7))
    arc = scanline_arc(s, spec, band73, GeofenceSpec(guard_pixels=0))
    assert arc.length_km() < 0.1
    assert 2 * arc.halfwidth_km == pytest.approx(2.0 * 8.0)  # one geofenced pixel wide


def test_consecutive_scans_advance_by_ground_speed(amsr2, band73, gf, tle_nov26):
    t0 = to_unix(utc(2024, 11, 26, 7))
    states = propagate_many(tle_nov26, [t0, t0 + 1.5])
    lat, lon = scanline_traces(states, amsr2.radiometer, band73, gf)
    m = lat.shape[1] // 2
    sep = great_circle_km(lat[0, m], lon[0, m], lat[1, m], lon[1, m])
    ground_speed = 2 * math.pi * EARTH_RADIUS_KM / tle_nov26.period_s
    assert sep == pytest.approx(ground_speed * 1.5, rel=0.15)
    assert sep == pytest.approx(10.0, abs=1.5)


def test_cross_track_scan_reaches_edge(catalog):
    entry = catalog.satellite("noaa20-atms")
    spec = entry.radiometer
    band = spec.bands[0]
    tle = catalog.elements_for(entry.id, utc(2024, 11, 26))
    s = propagate(tle, utc(2024, 11, 26, 3))
    arc = scanline_arc(s, spec, band, GeofenceSpec(guard_pixels=0))
    d = great_circle_km(s.lat, s.lon, np.array(arc.lats), np.array(arc.lons))
    assert d.max() == pytest.approx(alpha_oracle_km(s.altitude, spec.active_scan_deg / 2), abs=1.0)
    assert d.min() < 1.0  # passes through the sub-satellite point


def _spec(cross, along=None, **kw):
    band = MeasurementBand(7.3, 0.35)
    fp = Footprint(along or cross, cross)
    defaults = dict(name="t", scan_type=Conical(47.5), scan_period_s=1.5, active_scan_deg=122.0,
                    open_loop=True, bands=(band,), fov=(fp,))
    defaults.update(kw)
    return RadiometerSpec(**defaults), band


def test_halfwidth_examples():
    spec, band = _spec(30.0)
    assert geofence_halfwidth(spec, band, GeofenceSpec(2.0, 1)) == pytest.approx(90.0)
    assert geofence_halfwidth(spec, band, GeofenceSpec(1.0, 0)) == pytest.approx(15.0)


def test_unknown_band():
    spec, _ = _spec(30.0)
    with pytest.raises(ValidationError, match="band"):
        spec.footprint(MeasurementBand(10.65, 0.1))


def test_spec_validation():
    with pytest.raises(ValidationError) as exc:
        _spec(30.0, scan_period_s=0.0)
    assert exc.value.path == "scan_period_s"
    with pytest.raises(ValidationError):
        GeofenceSpec(pixel_scale=0.5)
    with pytest.raises(ValidationError):
        MeasurementBand(7.3, 0.0)
    with pytest.raises(ValidationError):
        _spec(30.0, scan_type=CrossTrack(40.0), active_scan_deg=100.0)


def gaussian_power_within(k):
    sigma = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))  # FWHM = 1
    inside, _ = integrate.quad(lambda x: math.exp(-x * x / (2 * sigma**2)), -k / 2, k / 2)
    total = sigma * math.sqrt(2 * math.pi)
    return inside / total


@pytest.mark.parametrize("k", [0.5, 1.0, 1.5, 2.0, 3.0])
def test_beam_containment_matches_quadrature(k):
    assert beam_containment(k) == pytest.approx(gaussian_power_within(k), abs=1e-9)


def test_beam_containment_values():
    assert beam_containment(2.0) == pytest.approx(0.981, abs=0.001)
    assert beam_containment(1.0) == pytest.approx(0.761, abs=0.001)
    assert beam_containment(math.inf) == 1.0
    with pytest.raises(ValueError):
        beam_containment(0.0)


def test_inland_extent_spread(amsr2, band73, gf):
    az = np.linspace(-61.0, 61.0, 1221)
    ext = inland_extent(amsr2.radiometer, band73, gf, az)
    assert ext.min() >= 85.0 and ext.max() <= 190.0
    assert ext.min() <= 90.0 and ext.max() >= 180.0
    assert max_inland_extent(amsr2.radiometer, band73, gf) == pytest.approx(ext.max(), abs=0.01)


def test_inland_extent_limits():
    spec, band = _spec(8.0, 45.2)
    gf = GeofenceSpec()
    assert inland_extent(spec, band, gf, 0.0) == pytest.approx(2 * 2 * 45.2)
    assert inland_extent(spec, band, gf, 90.0, pixels=1) == pytest.approx(2 * 8.0)


def test_geojson_export(amsr2, band73, gf, tle_nov26):
    s = propagate(tle_nov26, utc(2024, 11, 26, 7))
    feat = scanline_arc(s, amsr2.radiometer, band73, gf).to_geojson(role="center")
    assert feat["geometry"]["type"] == "LineString"
    assert feat["properties"]["halfwidth_km"] == pytest.approx(24.0)
    assert feat["properties"]["role"] == "center"
    assert all(-180 <= x <= 180 and -90 <= y <= 90 for x, y in feat["geometry"]["coordinates"])


def test_scan_timing_does_not_depend_on_batching(amsr2, band73, gf, tle_nov26):
    t0 = to_unix(utc(2024, 11, 26, 7))
    batch = propagate_many(tle_nov26, t0 + np.arange(4) * 1.5)
    lat, lon = scanline_traces(batch, amsr2.radiometer, band73, gf)
    one = scanline_arc(propagate(tle_nov26, utc(2024, 11, 26, 7) + timedelta(seconds=3.0)), amsr2.radiometer, band73, gf)
    assert np.allclose(lat[2], one.lats, atol=1e-9) and np.allclose(lon[2], one.lons, atol=1e-9)
