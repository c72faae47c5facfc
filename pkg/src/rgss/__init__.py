"""Radiometer dark-time scheduling for terrestrial transmitters.

Given satellite element sets and radiometer scan geometry, find when a
transmitter at a given site must go quiet so that a passive microwave
radiometer's scan line does not see it, and plan what its cell does
meanwhile.
"""
from .catalog import Catalog, CatalogStore, OrbitOverride, default_catalog, load_catalog, lookup_transmitter
from .darktime import (
    AvailabilityReport,
    CoastlineSet,
    DarkInterval,
    DarkTimeWindow,
    Transmitter,
    availability,
    band_overlap,
    coastal_filter,
    compute_dark_windows,
    merge_windows,
)
from .errors import RgssError
from .mitigation import CellSite, MitigationPlan, MitigationPolicy, TrafficProfile, plan_mitigation
from .orbit import PassInterval, TwoLineElements, find_passes, parse_tle, propagate
from .scan_geometry import (
    Conical,
    CrossTrack,
    Footprint,
    GeofenceSpec,
    MeasurementBand,
    RadiometerSpec,
    SwathArc,
    beam_containment,
    boresight_ground_point,
    inland_extent,
)

__version__ = "0.1.0"

__all__ = [
    "AvailabilityReport",
    "Catalog",
    "CatalogStore",
    "CellSite",
    "CoastlineSet",
    "Conical",
    "CrossTrack",
    "DarkInterval",
    "DarkTimeWindow",
    "Footprint",
    "GeofenceSpec",
    "MeasurementBand",
    "MitigationPlan",
    "MitigationPolicy",
    "OrbitOverride",
    "PassInterval",
    "RadiometerSpec",
    "RgssError",
    "SwathArc",
    "TrafficProfile",
    "Transmitter",
    "TwoLineElements",
    "availability",
    "band_overlap",
    "beam_containment",
    "boresight_ground_point",
    "coastal_filter",
    "compute_dark_windows",
    "default_catalog",
    "find_passes",
    "inland_extent",
    "load_catalog",
    "lookup_transmitter",
    "merge_windows",
    "parse_tle",
    "plan_mitigation",
    "propagate",
]
