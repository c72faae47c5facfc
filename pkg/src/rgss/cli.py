"""Command-line front end.

Every data subcommand builds the same request body the HTTP API accepts and
calls the same payload builder, so ``rgss darktimes ...`` and
``POST /v1/darktimes`` return identical content. Errors go to stderr as a
JSON record and the process exits nonzero.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import queries
from .catalog import CatalogStore, HttpTleSource, default_catalog, default_config_path, load_catalog
from .errors import FetchError, NotFoundError, RgssError, ValidationError

EXIT_INVALID = 2
EXIT_NOT_FOUND = 3
EXIT_UNAVAILABLE = 4
EXIT_INTERNAL = 1


def _band(text: str):
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected LOW:HIGH in GHz, e.g. 7.125:7.475") from None
    return [lo, hi]


def _satellites(text: str):
    if text == "all":
        return "all"
    return [s.strip() for s in text.split(",") if s.strip()]


def _site_args(p, required_date=True):
    p.add_argument("--lat", type=float, help="transmitter latitude, degrees")
    p.add_argument("--lon", type=float, help="transmitter longitude, degrees")
    p.add_argument("--ngci", help="registered transmitter id")
    p.add_argument("--date", help="first UTC day (YYYY-MM-DD)")
    p.add_argument("--days", type=int, default=1, help="number of days (default 1)")
    p.add_argument("--start", help="range start, ISO-8601 with offset (instead of --date)")
    p.add_argument("--end", help="range end, ISO-8601 with offset")
    p.add_argument("--band", type=_band, default=list(queries.PSST_BAND_GHZ), help="LOW:HIGH GHz")
    p.add_argument("--satellites", type=_satellites, default="all", help="comma list or 'all'")
    p.add_argument("--adjacency-guard", type=float, default=0.0, help="GHz added to each band edge")
    p.add_argument("--pixel-scale", type=float, default=2.0)
    p.add_argument("--guard-pixels", type=int, default=1)
    p.add_argument("--guard-scanlines", type=int, default=1)


def _site_body(args, default_date=None) -> dict:
    body = {
        "freq_ghz": args.band,
        "satellites": args.satellites,
        "adjacency_guard_ghz": args.adjacency_guard,
        "geofence": {
            "pixel_scale": args.pixel_scale,
            "guard_pixels": args.guard_pixels,
            "open_loop_guard_scanlines": args.guard_scanlines,
        },
    }
    if args.lat is not None or args.lon is not None:
        if args.lat is None or args.lon is None:
            raise ValidationError("--lat and --lon go together", "location")
        body["location"] = {"lat": args.lat, "lon": args.lon}
    if args.ngci is not None:
        body["ngci"] = args.ngci
    if args.start or args.end:
        body.update(start=args.start, end=args.end)
    else:
        date = args.date or default_date
        if date is not None:
            body.update(date=date, days=args.days)
    return body


def _read_json(path, what):
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
        return json.loads(text)
    except (OSError, ValueError) as exc:
        raise ValidationError(f"cannot read {what}: {exc}", what) from None


def _catalog(args):
    return load_catalog(args.config) if args.config else default_catalog()


def cmd_darktimes(args):
    return queries.darktimes(_catalog(args), _site_body(args))


def cmd_availability(args):
    cat = _catalog(args)
    default_date = None
    if not (args.date or args.start):
        # no range given: the latest day fully covered by every element history
        latest = min(e.latest.epoch for e in cat.satellites.values())
        default_date = latest.date().isoformat()
    return queries.availability_query(cat, _site_body(args, default_date))


def cmd_geofence(args):
    body = _site_body(args)
    body.update(satellite=args.satellite, traversal=args.traversal)
    body.pop("satellites")
    return queries.geofence(_catalog(args), body)


def cmd_coastal(args):
    body = {"satellite": args.satellite, "band_ghz": args.band_ghz}
    if args.transmitters:
        doc = _read_json(args.transmitters, "transmitters")
        body["transmitters"] = doc.get("transmitters", doc) if isinstance(doc, dict) else doc
    return queries.coastal(_catalog(args), body)


def cmd_mitigation(args):
    window = _read_json(args.window, "window")
    if isinstance(window, dict) and "windows" in window:
        # a darktimes response: pick one merged window
        merged = window.get("merged", [])
        if args.traversal >= len(merged):
            raise NotFoundError(f"traversal {args.traversal} not in the darktimes document")
        window = merged[args.traversal]
    window = {k: window[k] for k in ("start", "end") if k in window} | (
        {"satellite": window["satellite"]} if "satellite" in window else {}
    )
    sites = _read_json(args.sites, "sites")
    body = {"window": window}
    if isinstance(sites, list):
        body["sites"] = sites
    else:
        body.update(sites)
    policy = dict(body.get("policy", {}))
    if args.failure_probability is not None:
        policy["handover_failure_probability"] = args.failure_probability
    if args.mechanism:
        policy["mechanism"] = args.mechanism
    body["policy"] = policy
    return queries.mitigation(body)


def cmd_refresh(args):
    cat = _catalog(args)
    directory = Path(args.config).parent if args.config else None
    store = CatalogStore(cat, directory)
    report = store.refresh(HttpTleSource(args.url))
    return {
        "updated": list(report.updated),
        "unchanged": list(report.unchanged),
        "failed": dict(report.failed),
        "stale": list(report.stale),
        "persisted": directory is not None,
    }


def cmd_serve(args):
    import uvicorn

    from .service import create_app

    store = CatalogStore(_catalog(args), Path(args.config).parent if args.config else None)
    uvicorn.run(create_app(store, args.workers), host=args.host, port=args.port, log_level="info")
    return None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rgss", description="Radiometer dark-time scheduling")
    p.add_argument("--config", help=f"catalog.json (default: RGSS_CONFIG or {default_config_path().name} bundled)")
    p.add_argument("--output", "-o", help="write JSON here instead of stdout")
    p.add_argument("--log-level", default="WARNING")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("darktimes", help="dark-time windows for one site")
    _site_args(s)
    s.set_defaults(func=cmd_darktimes)

    s = sub.add_parser("availability", help="spectrum availability (all registered sites if none given)")
    _site_args(s)
    s.set_defaults(func=cmd_availability)

    s = sub.add_parser("geofence", help="GeoJSON of one traversal")
    _site_args(s)
    s.add_argument("--satellite", required=True)
    s.add_argument("--traversal", type=int, default=0, help="index of the window within the range")
    s.set_defaults(func=cmd_geofence)

    s = sub.add_parser("coastal-filter", help="transmitters inside the coastal protection zone")
    s.add_argument("--satellite", default="amsr2")
    s.add_argument("--band-ghz", type=float, default=7.3, help="measurement band centre")
    s.add_argument("--transmitters", help="JSON list of {id, lat, lon} (default: registered sites)")
    s.set_defaults(func=cmd_coastal)

    s = sub.add_parser("plan-mitigation", help="per-site mitigation plan for a window")
    s.add_argument("--window", required=True, help="window record or darktimes response JSON ('-' = stdin)")
    s.add_argument("--traversal", type=int, default=0, help="merged window index when --window is a darktimes response")
    s.add_argument("--sites", required=True, help="JSON list of sites, or {sites, profile, policy}")
    s.add_argument("--failure-probability", type=float)
    s.add_argument("--mechanism", choices=("DAPS", "L1L2"))
    s.set_defaults(func=cmd_mitigation)

    s = sub.add_parser("refresh-tles", help="fetch new element sets")
    s.add_argument("--url", help="URL template containing {norad_id} (default: RGSS_TLE_URL)")
    s.set_defaults(func=cmd_refresh)

    s = sub.add_parser("serve", help="run the HTTP API")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    s.add_argument("--workers", type=int, default=4, help="concurrent compute slots")
    s.set_defaults(func=cmd_serve)
    return p


def _exit_code(exc) -> int:
    if isinstance(exc, ValidationError):
        return EXIT_INVALID
    if isinstance(exc, NotFoundError):
        return EXIT_NOT_FOUND
    if isinstance(exc, RgssError) and (exc.status in (502, 503) or isinstance(exc, FetchError)):
        return EXIT_UNAVAILABLE
    return EXIT_INTERNAL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), stream=sys.stderr)
    try:
        payload = args.func(args)
    except RgssError as exc:
        rec = exc.to_record()
        rec.setdefault("path", None)
        print(json.dumps({"error": rec}), file=sys.stderr)
        return _exit_code(exc)
    except Exception as exc:  # noqa: BLE001 - never leak a traceback to callers
        logging.getLogger(__name__).debug("unhandled", exc_info=True)
        print(json.dumps({"error": {"code": "internal_error", "message": str(exc), "path": None}}), file=sys.stderr)
        return EXIT_INTERNAL
    if payload is None:
        return 0
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
