"""Batch/scripting interface mirroring the HTTP API.

Operates directly on the store file so CI and desk work need no running
service; it refuses to run while a service instance holds the write lock.
Every subcommand is a thin adapter over the library calls, with ``--json``
for machine-readable output.

Exit codes: 0 success, 1 user/domain error, 2 internal error.
"""
from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone

from .astro.epoch import Epoch
from .cmdlang import lint_template, parse_template
from .errors import SatopsError
from .planning import CONTEXT_SCHEMA, cmd_filename, generate_for_satellite
from .service.config import bootstrap_store, ingest_tle_text, load_config
from .service.forecast import NoForecast, build_forecast
from .service.api import session_to_json
from .station import StationAgent, volume_report
from .store import (
    SessionStore,
    auto_register_comm_sessions,
    confirm_request,
    create_request,
    session_rows_to_csv,
)
from .store.db import assert_store_unlocked
from .store.lifecycle import PlanningPolicy
from .passes import find_capture_opportunities, find_comm_passes, ConstraintSet


def _epoch(text: str) -> Epoch:
    return Epoch.from_iso(text)


def _now(args) -> Epoch:
    if args.now:
        return Epoch.from_iso(args.now)
    return Epoch.from_datetime(datetime.now(timezone.utc))


def _emit(args, data, human):
    if args.json:
        print(json.dumps(data, indent=2, default=str))
    else:
        human()


def _pass_dict(p) -> dict:
    return {
        "satellite_id": p.satellite_id, "location_id": p.location_id,
        "t_aos": p.t_aos.isoformat(), "t_mel": p.t_mel.isoformat(),
        "t_los": p.t_los.isoformat(),
        "t_los5": p.t_los5.isoformat() if p.t_los5 else None,
        "max_elevation": p.max_elevation, "sunlit_at_mel": p.sunlit_at_mel,
        "duration_s": p.duration_s,
    }


def _opportunity_dict(o) -> dict:
    return {
        "satellite_id": o.satellite_id, "sensor_id": o.sensor_id,
        "location_id": o.location_id, "t_mel": o.t_mel.isoformat(),
        "elevation_at_target": o.elevation_at_target, "roll_deg": o.roll_deg,
        "resolution_factor": o.resolution_factor, "sat_sunlit": o.sat_sunlit,
        "sun_el_deg": o.sun_el_deg, "orb_sun_deg": o.orb_sun_deg,
        "local_solar_time": o.local_solar_time,
        "local_clock_time": o.local_clock_time.isoformat(),
        "cloud_pct": o.cloud_pct, "excluded_from_auto": o.excluded_from_auto,
    }


def cmd_init(store, args, policy, forecast):
    config = load_config(args.config)
    bootstrap_store(store, config)
    report = {"satellites": len(config.satellites), "stations": len(config.stations),
              "targets": len(config.targets),
              "request_templates": len(config.request_templates)}
    _emit(args, report, lambda: print(
        f"seeded {report['satellites']} satellites, {report['stations']} stations, "
        f"{report['targets']} targets, {report['request_templates']} templates"))
    return 0


def cmd_tle_import(store, args, policy, forecast):
    with open(args.file, encoding="utf-8") as f:
        results = ingest_tle_text(store, f.read(), _now(args))
    def human():
        for r in results:
            if r["accepted"]:
                print(f"accepted {r['satellite']} (epoch {r['epoch']})")
            else:
                print(f"rejected: {r['error']}: {r['message']}")
    _emit(args, {"results": results}, human)
    return 0 if any(r["accepted"] for r in results) else 1


def cmd_passes(store, args, policy, forecast):
    satellite = store.satellite(args.satellite)
    station = store.station(args.station)
    passes = find_comm_passes(
        satellite.tle, station.point, (_epoch(args.t_from), _epoch(args.t_to)),
        min_elevation=args.min_el if args.min_el is not None
        else station.min_elevation_mask,
        location_id=station.name)
    data = [_pass_dict(p) for p in passes]
    def human():
        for p in data:
            print(f"{p['t_aos']}  mel {p['t_mel']}  los {p['t_los']}  "
                  f"max_el {p['max_elevation']:5.1f}  "
                  f"{'sunlit' if p['sunlit_at_mel'] else 'eclipse'}")
        print(f"{len(data)} passes")
    _emit(args, {"passes": data}, human)
    return 0


def cmd_opportunities(store, args, policy, forecast):
    satellite = store.satellite(args.satellite)
    target = store.target(args.target)
    sensor = satellite.sensor(args.sensor)
    if sensor is None:
        raise SatopsError(f"satellite {args.satellite} has no sensor {args.sensor}")
    opps = find_capture_opportunities(
        satellite.tle, target.point, sensor,
        (_epoch(args.t_from), _epoch(args.t_to)), ConstraintSet(),
        forecast, utc_offset_hours=target.utc_offset_hours, location_id=target.name)
    data = [_opportunity_dict(o) for o in opps]
    def human():
        for o in data:
            cloud = "?" if o["cloud_pct"] is None else f"{o['cloud_pct']:.0f}%"
            print(f"{o['t_mel']}  el {o['elevation_at_target']:5.1f}  "
                  f"rf {o['resolution_factor']:.2f}  sun {o['sun_el_deg']:5.1f}  "
                  f"cloud {cloud}")
        print(f"{len(data)} opportunities")
    _emit(args, {"opportunities": data}, human)
    return 0


def cmd_sessions_register(store, args, policy, forecast):
    if args.horizon:
        policy = PlanningPolicy(horizon_days=float(args.horizon.rstrip("d")))
    report = auto_register_comm_sessions(store, _now(args), policy)
    data = {"created": report.created, "updated": report.updated,
            "unchanged": report.unchanged, "errors": report.errors}
    _emit(args, data, lambda: print(
        f"created {report.created}, updated {report.updated}, "
        f"unchanged {report.unchanged}, errors {len(report.errors)}"))
    return 0


def cmd_sessions_list(store, args, policy, forecast):
    rows = store.list_sessions(
        t_from=_epoch(args.t_from) if args.t_from else None,
        t_to=_epoch(args.t_to) if args.t_to else None,
        sat=args.sat, ses_type=args.type,
        enabled=None if args.enabled is None else bool(args.enabled))
    if args.csv:
        print(session_rows_to_csv(rows), end="")
        return 0
    data = [session_to_json(r) for r in rows]
    def human():
        for s in data:
            stamp = s["t_aos"] if s["ses_type"] == "Comm" else s["t_mel"]
            flags = "".join([
                "E" if s["enabled"] else "-",
                "I" if s["interference"] else "-",
                s["state"][0].upper()])
            print(f"{s['id']:>5} {s['ses_type']:<7} {s['sat_name']:<8} "
                  f"{s['loc_name']:<10} {stamp} {flags} "
                  f"{s['link_name'] or s['sensor_name'] or ''}")
        print(f"{len(data)} sessions")
    _emit(args, {"sessions": data}, human)
    return 0


def _toggle(store, args, enabled):
    row = store.set_enabled(args.session_id, enabled, args.actor, _now(args))
    data = session_to_json(row)
    _emit(args, {"session": data},
          lambda: print(f"session {args.session_id} enabled={bool(row['enabled'])}"))
    return 0


def cmd_request_create(store, args, policy, forecast):
    if "," in args.target:
        lat, lon = (float(x) for x in args.target.split(","))
        target = {"lat": lat, "lon": lon}
    else:
        target = args.target
    request, candidates = create_request(
        store, args.user, args.template, target,
        (_epoch(args.t_from), _epoch(args.t_to)), _now(args),
        forecast=forecast, policy=policy)
    data = {"request": dict(request),
            "candidates": [session_to_json(c) for c in candidates]}
    def human():
        print(f"request {request['id']} -> {len(candidates)} candidates")
        for c in candidates:
            print(f"  candidate {c['id']}: {c['t_mel']} el {c['max_el']:.1f} "
                  f"rf {c['res_factor']:.2f}")
    _emit(args, data, human)
    return 0


def cmd_request_confirm(store, args, policy, forecast):
    session = confirm_request(store, args.request_id, args.candidate_id,
                              _now(args), policy)
    _emit(args, {"session": session_to_json(session)},
          lambda: print(f"confirmed session {session['id']} at {session['t_mel']}"))
    return 0


def cmd_generate(store, args, policy, forecast):
    now = _now(args)
    until = _epoch(args.until) if args.until else now + policy.horizon_days * 86400.0
    cmd, report = generate_for_satellite(store, args.satellite, now, until)
    out_path = args.output or cmd_filename(args.satellite, now)
    with open(out_path, "w", encoding="utf-8", newline="") as f:
        f.write(cmd.text)
    data = {"file": out_path, "report": report.as_dict()}
    _emit(args, data, lambda: print(
        f"wrote {out_path}: {len(report.sessions)} sessions, "
        f"{len(cmd.lines)} lines"))
    return 0


def cmd_lint(store, args, policy, forecast):
    with open(args.template, encoding="utf-8") as f:
        program = parse_template(f.read())
    diags = lint_template(program, CONTEXT_SCHEMA)
    data = [{"severity": d.severity, "line": d.line, "message": d.message}
            for d in diags]
    def human():
        for d in data:
            print(f"{args.template}:{d['line']}: {d['severity']}: {d['message']}")
        print(f"{len(data)} diagnostics")
    _emit(args, {"diagnostics": data}, human)
    return 0


def cmd_report_volumes(store, args, policy, forecast):
    report = volume_report(
        store,
        _epoch(args.t_from) if args.t_from else None,
        _epoch(args.t_to) if args.t_to else None)
    print(report.to_csv(), end="")
    return 0


def cmd_agent_run(store, args, policy, forecast):
    start_text, _, end_text = args.sim_clock.partition("..")
    start, end = _epoch(start_text), _epoch(end_text)
    agent = StationAgent(store, args.station)
    results = agent.run_until(start, end)
    data = [{"session_id": r["session_id"], "record_id": r["record_id"]}
            for r in results]
    _emit(args, {"tracks": data},
          lambda: print(f"executed {len(results)} sessions at {args.station}"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="satops", description="satellite operations planning and automation")
    parser.add_argument("--store", default="satops.db", help="session store path")
    parser.add_argument("--config", help="service configuration file")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    parser.add_argument("--now", help="override the clock (ISO-8601 UTC)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="seed the store from a configuration file")
    p.set_defaults(handler=cmd_init)

    tle = sub.add_parser("tle", help="element set management").add_subparsers(
        dest="sub", required=True)
    p = tle.add_parser("import", help="ingest a TLE file")
    p.add_argument("file")
    p.set_defaults(handler=cmd_tle_import)

    p = sub.add_parser("passes", help="communication passes for a satellite/station")
    p.add_argument("satellite")
    p.add_argument("station")
    p.add_argument("--from", dest="t_from", required=True)
    p.add_argument("--to", dest="t_to", required=True)
    p.add_argument("--min-el", type=float, default=None)
    p.set_defaults(handler=cmd_passes)

    p = sub.add_parser("opportunities", help="imaging opportunities over a target")
    p.add_argument("satellite")
    p.add_argument("target")
    p.add_argument("sensor")
    p.add_argument("--from", dest="t_from", required=True)
    p.add_argument("--to", dest="t_to", required=True)
    p.set_defaults(handler=cmd_opportunities)

    sessions = sub.add_parser("sessions", help="session table operations").add_subparsers(
        dest="sub", required=True)
    p = sessions.add_parser("register", help="auto-register comm sessions")
    p.add_argument("--horizon", default=None, help="e.g. 7d")
    p.set_defaults(handler=cmd_sessions_register)
    p = sessions.add_parser("list")
    p.add_argument("--from", dest="t_from")
    p.add_argument("--to", dest="t_to")
    p.add_argument("--sat")
    p.add_argument("--type", choices=["Comm", "Capture"])
    p.add_argument("--enabled", type=int, choices=[0, 1], default=None)
    p.add_argument("--csv", action="store_true")
    p.set_defaults(handler=cmd_sessions_list)
    p = sessions.add_parser("enable")
    p.add_argument("session_id", type=int)
    p.add_argument("--actor", default="cli")
    p.set_defaults(handler=lambda s, a, po, f: _toggle(s, a, True))
    p = sessions.add_parser("disable")
    p.add_argument("session_id", type=int)
    p.add_argument("--actor", default="cli")
    p.set_defaults(handler=lambda s, a, po, f: _toggle(s, a, False))

    request = sub.add_parser("request", help="imaging request flow").add_subparsers(
        dest="sub", required=True)
    p = request.add_parser("create")
    p.add_argument("--user", required=True)
    p.add_argument("--template", required=True)
    p.add_argument("--target", required=True, help="target name or lat,lon")
    p.add_argument("--from", dest="t_from", required=True)
    p.add_argument("--to", dest="t_to", required=True)
    p.set_defaults(handler=cmd_request_create)
    p = request.add_parser("confirm")
    p.add_argument("request_id", type=int)
    p.add_argument("candidate_id", type=int)
    p.set_defaults(handler=cmd_request_confirm)

    cmdp = sub.add_parser("cmd", help="command file generation").add_subparsers(
        dest="sub", required=True)
    p = cmdp.add_parser("generate")
    p.add_argument("satellite")
    p.add_argument("--until")
    p.add_argument("-o", "--output")
    p.set_defaults(handler=cmd_generate)
    p = cmdp.add_parser("lint")
    p.add_argument("template")
    p.set_defaults(handler=cmd_lint)

    report = sub.add_parser("report", help="accounting reports").add_subparsers(
        dest="sub", required=True)
    p = report.add_parser("volumes")
    p.add_argument("--from", dest="t_from")
    p.add_argument("--to", dest="t_to")
    p.set_defaults(handler=cmd_report_volumes)

    agent = sub.add_parser("agent", help="ground-station automation").add_subparsers(
        dest="sub", required=True)
    p = agent.add_parser("run")
    p.add_argument("station")
    p.add_argument("--sim-clock", required=True, help="FROM..TO (ISO-8601 UTC)")
    p.set_defaults(handler=cmd_agent_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        assert_store_unlocked(args.store)
        store = SessionStore(args.store)
        policy = PlanningPolicy()
        forecast = NoForecast()
        if args.config:
            config = load_config(args.config)
            policy = config.policy
            forecast = build_forecast(config.forecast)
        return args.handler(store, args, policy, forecast)
    except SatopsError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:   # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
