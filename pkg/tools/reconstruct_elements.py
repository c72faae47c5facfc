"""Regenerate the bundled element-set histories.

The sandbox that produced the default catalog had no access to a public
element-set archive, so each history is rebuilt from the published orbit
class of the satellite (sun-synchronous, inclination, mean motion, local
time of ascending node) at a reference epoch and carried to daily epochs with
the SGP4 secular rates. Deployments replace these with real daily fetches
via ``rgss refresh-tles``.

Usage: python tools/reconstruct_elements.py [output_dir]
"""
import math
import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

from sgp4.api import WGS72, Satrec

from rgss.orbit import format_tle

REFERENCE = datetime(2024, 11, 26, tzinfo=timezone.utc)
FIRST, LAST = datetime(2024, 11, 12, 3, tzinfo=timezone.utc), datetime(2024, 12, 10, 3, tzinfo=timezone.utc)

# id: (norad, name, intl, inclination, mean motion rev/day, ascending-node local time h, phase deg, bstar)
ORBITS = {
    # mean anomaly phased so the descending traversal of (42N, 74W) falls near 07 UTC on 2024-11-26
    "amsr2": (38337, "GCOM-W1", "12025A", 98.2, 14.571, 13.5, 310.0, 3.0e-5),
    "amsr3-sim": (99337, "AMSR3-SIM", "", 98.2, 14.571, 13.5, 130.0, 3.0e-5),
    "noaa20-atms": (43013, "NOAA 20 (JPSS-1)", "17073A", 98.74, 14.195, 13.42, 40.0, 2.0e-5),
    "noaa21-atms": (54234, "NOAA 21 (JPSS-2)", "22150A", 98.74, 14.195, 13.42, 220.0, 2.0e-5),
    "snpp-atms": (37849, "SUOMI NPP", "11061A", 98.74, 14.195, 13.42, 130.0, 2.0e-5),
    "metop-b": (38771, "METOP-B", "12049A", 98.70, 14.215, 21.5, 75.0, 2.0e-5),
    "metop-c": (43689, "METOP-C", "18087A", 98.70, 14.215, 21.5, 255.0, 2.0e-5),
}


def mean_sun_ra_deg(t):
    n = t.timestamp() / 86400.0 + 2440587.5 - 2451545.0
    return (280.460 + 0.9856474 * n) % 360.0


def history(sat_id):
    norad, name, intl, inc, n, ltan, phase, bstar = ORBITS[sat_id]
    raan = (mean_sun_ra_deg(REFERENCE) + (ltan - 12.0) * 15.0) % 360.0
    base = format_tle(norad, REFERENCE, inc, raan, 0.0002, 90.0, phase, n, name=name, bstar=bstar, intl_designator=intl)
    rec = Satrec.twoline2rv(base.line1, base.line2, WGS72)
    out = []
    t = FIRST
    rev0 = 10000
    while t <= LAST:
        dt_min = (t - REFERENCE).total_seconds() / 60.0
        m = math.degrees(rec.mo + rec.mdot * dt_min)
        node = math.degrees(rec.nodeo + rec.nodedot * dt_min)
        argp = math.degrees(rec.argpo + rec.argpdot * dt_min)
        revs = rev0 + int((t - FIRST).total_seconds() / 86400.0 * n)
        out.append(
            format_tle(norad, t, inc, node, 0.0002, argp, m, n, name=name, bstar=bstar,
                       intl_designator=intl, element_set_no=len(out) + 1, rev_number=revs)
        )
        t += timedelta(days=1)
    return out


def main(out_dir="src/rgss/data/tles"):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for sat_id in ORBITS:
        (out / f"{sat_id}.tle").write_text("".join(t.text() for t in history(sat_id)))
        print(f"wrote {sat_id}")


if __name__ == "__main__":
    main(*sys.argv[1:])
