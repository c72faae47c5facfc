"""Satellite, radiometer and transmitter registry.

A :class:`Catalog` is an immutable snapshot. Writers (element-set refresh,
manual overrides) build a new snapshot and swap it into a
:class:`CatalogStore` under a lock; readers always see a complete snapshot.

On disk a catalog is a JSON document plus one plain-text, append-only element
set history per satellite (``tles/<id>.tle``). The schema only has room for
transmitter id, location and band: traffic and equipment data never enter
the central registry.
"""
from __future__ import annotations

import json
import logging
import os
import threading
import urllib.request
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

from .darktime import CoastlineSet, Transmitter
from .errors import FetchError, NotFoundError, OrbitUnavailableError, ValidationError
from .orbit import TwoLineElements, parse_tle, parse_tle_history
from .scan_geometry import Conical, CrossTrack, Footprint, MeasurementBand, RadiometerSpec

log = logging.getLogger(__name__)

TLE_URL_ENV = "RGSS_TLE_URL"
CONFIG_ENV = "RGSS_CONFIG"


@dataclass(frozen=True)
class SatelliteEntry:
    id: str
    norad_id: int
    name: str
    radiometer: RadiometerSpec
    history: tuple  # TwoLineElements, epoch-ordered
    last_fetch: datetime | None = None
    simulated: bool = False  # excluded from "all" queries; must be named explicitly

    @property
    def latest(self) -> TwoLineElements:
        return self.history[-1]


@dataclass(frozen=True)
class OrbitOverride:
    satellite_id: str
    reason: str
    author: str
    replacement: TwoLineElements | None = None
    exclude_start: datetime | None = None
    exclude_end: datetime | None = None
    expires: datetime | None = None

    def __post_init__(self):
        has_window = self.exclude_start is not None or self.exclude_end is not None
        if (self.replacement is None) == (not has_window):
            raise ValidationError("give exactly one of a replacement element set or an exclusion interval", "override")
        if has_window and not (self.exclude_start and self.exclude_end and self.exclude_start < self.exclude_end):
            raise ValidationError("exclusion interval must have start < end", "override.exclude")

    def active(self, when: datetime) -> bool:
        return self.expires is None or when < self.expires


@dataclass(frozen=True)
class Catalog:
    satellites: dict = field(default_factory=dict)
    transmitters: dict = field(default_factory=dict)
    coastline: CoastlineSet | None = None
    overrides: tuple = ()

    def satellite(self, sat_id: str) -> SatelliteEntry:
        try:
            return self.satellites[sat_id]
        except KeyError:
            raise NotFoundError(f"unknown satellite {sat_id!r}") from None

    def elements_for(self, sat_id: str, when: datetime) -> TwoLineElements:
        """Element set governing propagation at ``when``.

        An active replacement override wins; an exclusion interval covering
        ``when`` raises :class:`OrbitUnavailableError`. Otherwise the newest set
        with epoch <= ``when`` (or the oldest set if all are later).
        """
        entry = self.satellite(sat_id)
        for ov in reversed(self.overrides):
            if ov.satellite_id != sat_id or not ov.active(when):
                continue
            if ov.replacement is not None:
                return ov.replacement
        candidates = [t for t in entry.history if t.epoch <= when]
        return candidates[-1] if candidates else entry.history[0]

    def check_exclusions(self, sat_id: str, start: datetime, end: datetime):
        for ov in self.overrides:
            if ov.satellite_id == sat_id and ov.exclude_start is not None and ov.active(start):
                if ov.exclude_start < end and start < ov.exclude_end:
                    raise OrbitUnavailableError(
                        f"orbital data for {sat_id} excluded {ov.exclude_start.isoformat()} to "
                        f"{ov.exclude_end.isoformat()}: {ov.reason}",
                        satellite=sat_id,
                    )


def lookup_transmitter(catalog: Catalog, ngci: str) -> Transmitter:
    """Registered transmitter by NGCI; ids are case-sensitive opaque strings."""
    try:
        return catalog.transmitters[ngci]
    except KeyError:
        raise NotFoundError(f"unknown NGCI {ngci!r}") from None


def _get(d, key, path, kind, required=True, default=None):
    if key not in d or d[key] is None:
        if required:
            raise ValidationError("required field missing", f"{path}.{key}" if path else key)
        return default
    value = d[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or (kind in (int, float) and isinstance(value, bool)):
        name = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise ValidationError(f"expected {name}", f"{path}.{key}" if path else key)
    return value


def _radiometer_from_config(s, path) -> RadiometerSpec:
    scan = _get(s, "scan_type", path, str)
    if scan == "conical":
        scan_type = Conical(
            _get(s, "off_nadir_deg", path, float),
            _get(s, "look_azimuth_deg", path, float, required=False, default=0.0),
        )
    elif scan == "cross_track":
        scan_type = CrossTrack(_get(s, "max_scan_deg", path, float))
    else:
        raise ValidationError(f"unknown scan type {scan!r}", f"{path}.scan_type")
    bands = _get(s, "bands", path, list)
    fov = _get(s, "fov", path, list)
    if len(bands) != len(fov):
        raise ValidationError("fov must list one footprint per band", f"{path}.fov")
    try:
        band_objs = tuple(
            MeasurementBand(_get(b, "center_ghz", f"{path}.bands[{i}]", float),
                            _get(b, "width_ghz", f"{path}.bands[{i}]", float))
            for i, b in enumerate(bands)
        )
    except ValidationError as exc:
        if exc.path == "width_ghz":
            raise ValidationError("band width must be positive", f"{path}.bands") from None
        raise
    fps = tuple(
        Footprint(_get(f, "along_km", f"{path}.fov[{i}]", float), _get(f, "cross_km", f"{path}.fov[{i}]", float))
        for i, f in enumerate(fov)
    )
    try:
        return RadiometerSpec(
            name=_get(s, "instrument", path, str, required=False, default=_get(s, "name", path, str)),
            scan_type=scan_type,
            scan_period_s=_get(s, "scan_period_s", path, float),
            active_scan_deg=_get(s, "active_scan_deg", path, float),
            open_loop=_get(s, "open_loop", path, bool),
            bands=band_objs,
            fov=fps,
            polarizations=tuple(s.get("polarizations", ())),
        )
    except ValidationError as exc:
        raise ValidationError(str(exc).split(": ", 1)[-1], f"{path}.{exc.path}") from None


def _parse_time(value, path):
    if value is None:
        return None
    try:
        t = datetime.fromisoformat(str(value).replace("Z", "+00:00"))
    except ValueError:
        raise ValidationError("not an ISO-8601 timestamp", path) from None
    return t if t.tzinfo else t.replace(tzinfo=timezone.utc)


def load_catalog(config, base_dir=None) -> Catalog:
    """Build a catalog from a configuration document (dict or JSON path).

    Element-set histories come from ``tles[]`` entries inside the document or
    from ``<tle_dir>/<id>.tle`` files; relative paths resolve against the
    document's directory.
    """
    if isinstance(config, (str, Path)):
        path = Path(config)
        try:
            config = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read configuration: {exc}", "config") from None
        base_dir = path.parent
    base = Path(base_dir) if base_dir is not None else Path.cwd()
    if not isinstance(config, dict):
        raise ValidationError("configuration must be a JSON object", "config")
    sats = {}
    tle_dir = base / config.get("tle_dir", "tles")
    for i, s in enumerate(_get(config, "satellites", "", list, required=False, default=[])):
        path = f"satellites[{i}]"
        if not isinstance(s, dict):
            raise ValidationError("expected object", path)
        norad = _get(s, "norad_id", path, int)
        sat_id = _get(s, "id", path, str, required=False, default=str(norad))
        if sat_id in sats:
            raise ValidationError(f"duplicate satellite id {sat_id!r}", f"{path}.id")
        spec = _radiometer_from_config(s, path)
        if "tles" in s:
            text = "\n".join(s["tles"]) if isinstance(s["tles"], list) else str(s["tles"])
        else:
            f = tle_dir / f"{sat_id}.tle"
            if not f.exists():
                raise ValidationError(f"no element-set history at {f}", f"{path}.tles")
            text = f.read_text()
        history = sorted(parse_tle_history(text), key=lambda t: t.epoch)
        if not history:
            raise ValidationError("at least one element set required", f"{path}.tles")
        if any(t.norad_id != norad for t in history):
            raise ValidationError("element sets carry a different catalog number", f"{path}.tles")
        sats[sat_id] = SatelliteEntry(
            sat_id, norad, _get(s, "name", path, str), spec, tuple(history),
            _parse_time(s.get("last_fetch"), f"{path}.last_fetch"),
            bool(_get(s, "simulated", path, bool, required=False, default=False)),
        )
    txs = {}
    for i, t in enumerate(_get(config, "transmitters", "", list, required=False, default=[])):
        path = f"transmitters[{i}]"
        band = _get(t, "band_ghz", path, list)
        if len(band) != 2:
            raise ValidationError("expected [low, high]", f"{path}.band_ghz")
        ngci = _get(t, "ngci", path, str)
        try:
            txs[ngci] = Transmitter(ngci, _get(t, "lat", path, float), _get(t, "lon", path, float), tuple(band))
        except ValidationError as exc:
            raise ValidationError(str(exc).split(": ", 1)[-1], f"{path}.{exc.path}") from None
    coastline = None
    if config.get("coastline"):
        cpath = base / config["coastline"]
        try:
            coastline = CoastlineSet.from_geojson(cpath)
        except OSError as exc:
            raise ValidationError(f"cannot read coastline: {exc}", "coastline") from None
    overrides = []
    for i, o in enumerate(_get(config, "overrides", "", list, required=False, default=[])):
        path = f"overrides[{i}]"
        repl = parse_tle(o["replacement"]) if o.get("replacement") else None
        exclude = o.get("exclude") or [None, None]
        overrides.append(
            OrbitOverride(
                satellite_id=_get(o, "satellite_id", path, str),
                reason=_get(o, "reason", path, str),
                author=_get(o, "author", path, str),
                replacement=repl,
                exclude_start=_parse_time(exclude[0], f"{path}.exclude[0]"),
                exclude_end=_parse_time(exclude[1], f"{path}.exclude[1]"),
                expires=_parse_time(o.get("expires"), f"{path}.expires"),
            )
        )
    for ov in overrides:
        if ov.satellite_id not in sats:
            raise ValidationError(f"override names unknown satellite {ov.satellite_id!r}", "overrides")
    return Catalog(sats, txs, coastline, tuple(overrides))


def default_config_path() -> Path:
    return Path(str(resources.files("rgss") / "data" / "catalog.json"))


def default_catalog() -> Catalog:
    """Catalog shipped with the package (AMSR2, ATMS and METOP entries)."""
    return load_catalog(os.environ.get(CONFIG_ENV) or default_config_path())


def _iso(t):
    return None if t is None else t.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def radiometer_config(spec: RadiometerSpec) -> dict:
    d = {"instrument": spec.name}
    if isinstance(spec.scan_type, Conical):
        d.update(scan_type="conical", off_nadir_deg=spec.scan_type.off_nadir_deg,
                 look_azimuth_deg=spec.scan_type.look_azimuth_deg)
    else:
        d.update(scan_type="cross_track", max_scan_deg=spec.scan_type.max_scan_deg)
    d.update(
        scan_period_s=spec.scan_period_s,
        active_scan_deg=spec.active_scan_deg,
        open_loop=spec.open_loop,
        bands=[{"center_ghz": b.center_ghz, "width_ghz": b.width_ghz} for b in spec.bands],
        fov=[{"along_km": f.along_km, "cross_km": f.cross_km} for f in spec.fov],
    )
    if spec.polarizations:
        d["polarizations"] = list(spec.polarizations)
    return d


def save_catalog(catalog: Catalog, directory) -> Path:
    """Write ``catalog.json``, ``tles/<id>.tle`` and the coastline into ``directory``."""
    out = Path(directory)
    (out / "tles").mkdir(parents=True, exist_ok=True)
    sats = []
    for s in catalog.satellites.values():
        d = {"id": s.id, "norad_id": s.norad_id, "name": s.name}
        d.update(radiometer_config(s.radiometer))
        if s.last_fetch is not None:
            d["last_fetch"] = _iso(s.last_fetch)
        if s.simulated:
            d["simulated"] = True
        sats.append(d)
        (out / "tles" / f"{s.id}.tle").write_text("".join(t.text() for t in s.history))
    doc = {
        "tle_dir": "tles",
        "satellites": sats,
        "transmitters": [
            {"ngci": t.id, "lat": t.lat, "lon": t.lon, "band_ghz": list(t.tx_band)}
            for t in catalog.transmitters.values()
        ],
        "overrides": [
            {
                "satellite_id": o.satellite_id,
                "reason": o.reason,
                "author": o.author,
                "replacement": o.replacement.text() if o.replacement else None,
                "exclude": [_iso(o.exclude_start), _iso(o.exclude_end)] if o.exclude_start else None,
                "expires": _iso(o.expires),
            }
            for o in catalog.overrides
        ],
    }
    if catalog.coastline is not None:
        c = catalog.coastline
        lines = [[[c.a_lon[i], c.a_lat[i]], [c.b_lon[i], c.b_lat[i]]] for i in range(len(c))]
        (out / "coastline.geojson").write_text(json.dumps({
            "type": "FeatureCollection",
            "features": [{"type": "Feature", "properties": {"name": ";".join(c.names)},
                          "geometry": {"type": "MultiLineString", "coordinates": lines}}],
        }))
        doc["coastline"] = "coastline.geojson"
    path = out / "catalog.json"
    path.write_text(json.dumps(doc, indent=2))
    return path


class HttpTleSource:
    """Element-set fetch over HTTP GET; ``url_template`` contains ``{norad_id}``."""

    def __init__(self, url_template: str | None = None, timeout: float = 20.0):
        self.url_template = url_template or os.environ.get(TLE_URL_ENV)
        if not self.url_template:
            raise ValidationError(f"no element-set URL (set {TLE_URL_ENV})", "tle_url")
        self.timeout = timeout

    def fetch(self, norad_id: int) -> str:
        url = self.url_template.format(norad_id=norad_id)
        try:
            with urllib.request.urlopen(url, timeout=self.timeout) as resp:
                return resp.read().decode("ascii", errors="replace")
        except OSError as exc:
            raise FetchError(f"fetch of {norad_id} failed: {exc}") from None


@dataclass(frozen=True)
class RefreshReport:
    updated: tuple = ()
    unchanged: tuple = ()
    failed: dict = field(default_factory=dict)  # satellite id -> message

    @property
    def stale(self) -> tuple:
        return tuple(sorted(self.failed))


class RefreshFailed(FetchError):
    def __init__(self, report: RefreshReport):
        super().__init__(f"element-set source unavailable; stale: {', '.join(report.stale)}")
        self.report = report

    def to_record(self):
        rec = super().to_record()
        rec["stale"] = list(self.report.stale)
        return rec


def refresh_tles(catalog: Catalog, source, now: datetime | None = None):
    """Fetch the newest element set per satellite.

    New epochs are appended to each history; already stored epochs are
    ignored. Per-satellite failures are recorded in the report. Overrides are
    untouched, so an active replacement keeps governing propagation.

    Returns:
        (catalog, RefreshReport)

    Raises:
        RefreshFailed: every fetch failed.
    """
    now = now or datetime.now(timezone.utc)
    sats = dict(catalog.satellites)
    updated, unchanged, failed = [], [], {}
    for sat_id, entry in catalog.satellites.items():
        try:
            tle = parse_tle(source.fetch(entry.norad_id))
            if tle.norad_id != entry.norad_id:
                raise ValidationError(f"source returned catalog number {tle.norad_id}", "tle")
        except Exception as exc:  # any per-satellite failure is tolerated
            log.warning("refresh of %s failed: %s", sat_id, exc)
            failed[sat_id] = str(exc)
            continue
        if any(t.epoch == tle.epoch for t in entry.history):
            unchanged.append(sat_id)
            sats[sat_id] = replace(entry, last_fetch=now)
            continue
        history = tuple(sorted(entry.history + (tle,), key=lambda t: t.epoch))
        sats[sat_id] = replace(entry, history=history, last_fetch=now)
        updated.append(sat_id)
    report = RefreshReport(tuple(updated), tuple(unchanged), failed)
    if catalog.satellites and len(failed) == len(catalog.satellites):
        raise RefreshFailed(report)
    return replace(catalog, satellites=sats), report


def append_history(directory, catalog: Catalog, previous: Catalog):
    """Append element sets new since ``previous`` to the per-satellite files."""
    tdir = Path(directory) / "tles"
    tdir.mkdir(parents=True, exist_ok=True)
    for sat_id, entry in catalog.satellites.items():
        old = previous.satellites.get(sat_id)
        known = {t.epoch for t in old.history} if old else set()
        new = [t for t in entry.history if t.epoch not in known]
        if new:
            with open(tdir / f"{sat_id}.tle", "a") as fh:
                fh.write("".join(t.text() for t in new))


class CatalogStore:
    """Single-writer, many-reader holder of the current catalog snapshot."""

    def __init__(self, catalog: Catalog, directory=None):
        self._catalog = catalog
        self._write_lock = threading.Lock()
        self.directory = Path(directory) if directory else None

    def snapshot(self) -> Catalog:
        return self._catalog

    def refresh(self, source, now=None) -> RefreshReport:
        with self._write_lock:
            before = self._catalog
            after, report = refresh_tles(before, source, now)
            if self.directory is not None:
                append_history(self.directory, after, before)
            self._catalog = after
            return report

    def add_override(self, override: OrbitOverride):
        with self._write_lock:
            cat = self._catalog
            cat.satellite(override.satellite_id)
            self._catalog = replace(cat, overrides=cat.overrides + (override,))
