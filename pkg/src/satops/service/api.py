"""The HTTP face of the platform.

JSON API under ``/api/v1`` with static bearer-token auth and two roles:
operators plan and command, data users submit and confirm imaging
requests.  All state lives in the session store; every 2xx mutation is
committed before the response goes out.
"""
from __future__ import annotations

import json
from datetime import datetime, timezone

from fastapi import Depends, FastAPI, Header, HTTPException, Query, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from pydantic import BaseModel, Field

from .. import errors as err
from ..astro.epoch import Epoch
from ..planning import cmd_filename, generate_for_satellite
from ..station import antenna_schedule, volume_report
from ..store.db import SessionStore
from ..store.lifecycle import confirm_request, create_request
from .config import ServiceConfig, bootstrap_store, ingest_tle_text
from .forecast import build_forecast
from .jobs import JobScheduler

_STATUS_BY_ERROR = [
    ((err.WindowOutOfRange, err.WindowTooLong, err.EmptyWindow, err.LineCountError,
      err.ChecksumMismatch, err.MalformedField), 400),
    ((err.NotFound, err.UnknownTemplate), 404),
    ((err.AlreadyConfirmed, err.CandidateExpired, err.SessionInPast, err.SessionLocked,
      err.InvalidRequestState, err.NoFreeAddressSlots, err.SlotNotAllocated,
      err.StoreLockHeld), 409),
    ((err.TemplateError, err.StaleElements, err.DecayedOrbit, err.UnsupportedOrbit,
      err.NeverAboveFive), 422),
]

_BOOL_FIELDS = ("sunlit", "interference", "enabled", "locked", "auto_ok")


def session_to_json(row) -> dict:
    out = dict(row)
    for key in _BOOL_FIELDS:
        if key in out and out[key] is not None:
            out[key] = bool(out[key])
    return out


def request_to_json(row) -> dict:
    return dict(row)


class TargetSpec(BaseModel):
    id: str | None = None
    lat: float | None = None
    lon: float | None = None
    alt_m: float = 0.0
    name: str | None = None
    utc_offset_hours: float = 0.0


class WindowSpec(BaseModel):
    start: str = Field(alias="from")
    end: str = Field(alias="to")

    model_config = {"populate_by_name": True}


class RequestBody(BaseModel):
    template_id: str
    target: TargetSpec
    window: WindowSpec


class ConfirmBody(BaseModel):
    candidate_id: int


class PatchSessionBody(BaseModel):
    enabled: bool | None = None
    priority: int | None = None


class TleBody(BaseModel):
    text: str


def create_app(config: ServiceConfig, store: SessionStore | None = None,
               now_fn=None, forecast=None) -> FastAPI:
    from ..store.db import acquire_write_lock, release_write_lock

    app = FastAPI(title="satops", version="1.0",
                  on_startup=[lambda: acquire_write_lock(config.store_path)],
                  on_shutdown=[lambda: release_write_lock(config.store_path)])
    store = store or SessionStore(config.store_path)
    bootstrap_store(store, config)
    forecast = forecast if forecast is not None else build_forecast(config.forecast)
    now_fn = now_fn or (lambda: Epoch.from_datetime(datetime.now(timezone.utc)))

    app.state.store = store
    app.state.config = config
    app.state.forecast = forecast
    app.state.now_fn = now_fn
    app.state.scheduler = JobScheduler(store, config.policy)

    tokens = {t.token: t for t in config.tokens}

    def principal(authorization: str | None = Header(default=None)):
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(401, detail={"error": "Unauthorized",
                                             "message": "bearer token required"})
        entry = tokens.get(authorization.removeprefix("Bearer ").strip())
        if entry is None:
            raise HTTPException(401, detail={"error": "Unauthorized",
                                             "message": "unknown token"})
        return entry

    def operator_only(entry=Depends(principal)):
        if entry.role != "operator":
            raise HTTPException(403, detail={"error": "Forbidden",
                                             "message": "operator role required"})
        return entry

    def now() -> Epoch:
        return app.state.now_fn()

    @app.exception_handler(err.SatopsError)
    async def handle_domain_error(_req: Request, exc: err.SatopsError):
        status = 422
        for classes, code in _STATUS_BY_ERROR:
            if isinstance(exc, classes):
                status = code
                break
        detail = {"error": exc.code, "message": str(exc)}
        if isinstance(exc, (err.CmdGenerationError, err.OverlappingSessions)):
            detail["session_id"] = exc.session_id
        return JSONResponse(status_code=status, content=detail)

    @app.get("/api/v1/health")
    def health():
        return {"ok": True, "now": now().round_to_second().isoformat()}

    # --- TLE ingestion -------------------------------------------------

    @app.post("/api/v1/tle")
    def ingest_tle(body: TleBody, _=Depends(operator_only)):
        return {"results": ingest_tle_text(store, body.text, now())}

    # --- imaging requests ------------------------------------------------

    @app.post("/api/v1/requests", status_code=201)
    def post_request(body: RequestBody, entry=Depends(principal)):
        window = (Epoch.from_iso(body.window.start), Epoch.from_iso(body.window.end))
        target = body.target.id if body.target.id else {
            "lat": body.target.lat, "lon": body.target.lon, "alt_m": body.target.alt_m,
            "name": body.target.name, "utc_offset_hours": body.target.utc_offset_hours}
        if not body.target.id and (body.target.lat is None or body.target.lon is None):
            raise HTTPException(400, detail={"error": "ValidationError",
                                             "message": "target needs id or lat/lon"})
        try:
            request, candidates = create_request(
                store, entry.principal, body.template_id, target, window, now(),
                forecast=app.state.forecast, policy=config.policy)
        except err.NoCandidates as exc:
            return {"request": request_to_json(store.get_request(exc.request_id)),
                    "candidates": []}
        return {"request": request_to_json(request),
                "candidates": [session_to_json(c) for c in candidates]}

    @app.post("/api/v1/requests/{request_id}/confirm")
    def post_confirm(request_id: int, body: ConfirmBody, entry=Depends(principal)):
        session = confirm_request(store, request_id, body.candidate_id, now(),
                                  config.policy)
        return {"session": session_to_json(session)}

    @app.get("/api/v1/requests")
    def get_requests(status: str | None = None, _=Depends(principal)):
        out = []
        for row in store.list_requests(status):
            candidates = [session_to_json(s) for s in store.list_sessions()
                          if s["request_id"] == row["id"]]
            out.append({"request": request_to_json(row), "candidates": candidates})
        return {"requests": out}

    @app.get("/api/v1/templates")
    def get_templates(_=Depends(principal)):
        return {"templates": [vars(t) for t in store.request_templates()]}

    # --- sessions ---------------------------------------------------------

    @app.get("/api/v1/sessions")
    def get_sessions(_=Depends(principal),
                     from_: str | None = Query(default=None, alias="from"),
                     to: str | None = None, sat: str | None = None,
                     type: str | None = None, enabled: bool | None = None,
                     limit: int = Query(default=500, le=5000), offset: int = 0):
        kwargs = dict(
            t_from=Epoch.from_iso(from_) if from_ else None,
            t_to=Epoch.from_iso(to) if to else None,
            sat=sat, ses_type=type, enabled=enabled)
        total = len(store.list_sessions(**kwargs))
        rows = store.list_sessions(**kwargs, limit=limit, offset=offset)
        return {"sessions": [session_to_json(r) for r in rows], "total": total}

    @app.get("/api/v1/sessions/{session_id}")
    def get_session(session_id: int, _=Depends(principal)):
        return {"session": session_to_json(store.get_session(session_id))}

    @app.patch("/api/v1/sessions/{session_id}")
    def patch_session(session_id: int, body: PatchSessionBody,
                      entry=Depends(operator_only)):
        if body.enabled is None and body.priority is None:
            raise HTTPException(400, detail={"error": "ValidationError",
                                             "message": "nothing to update"})
        if body.enabled is not None:
            store.set_enabled(session_id, body.enabled, entry.principal, now())
        if body.priority is not None:
            store.set_priority(session_id, body.priority, entry.principal, now())
        return {"session": session_to_json(store.get_session(session_id))}

    # --- CMD generation ------------------------------------------------------

    @app.post("/api/v1/satellites/{sat_name}/cmdfile")
    def post_cmdfile(sat_name: str, until: str | None = None,
                     format: str = "json", _=Depends(operator_only)):
        t_now = now()
        t_until = Epoch.from_iso(until) if until \
            else t_now + config.policy.horizon_days * 86400.0
        cmd, report = generate_for_satellite(store, sat_name, t_now, t_until)
        filename = cmd_filename(sat_name, t_now)
        if format == "text":
            return PlainTextResponse(
                cmd.text,
                headers={"Content-Disposition": f'attachment; filename="{filename}"',
                         "X-Cmd-Sessions": str(len(report.sessions))})
        return {"filename": filename, "content": cmd.text, "report": report.as_dict()}

    # --- station products -------------------------------------------------------

    @app.get("/api/v1/stations/{station_name}/schedule")
    def get_schedule(station_name: str, session: int, step_s: float | None = None,
                     _=Depends(principal)):
        row = store.get_session(session)
        if row["loc_name"] != station_name or row["ses_type"] != "Comm":
            raise HTTPException(404, detail={
                "error": "NotFound",
                "message": f"session {session} is not a comm session at {station_name}"})
        satellite = store.satellite(row["sat_name"])
        if satellite.tle is None:
            raise HTTPException(422, detail={"error": "StaleElements",
                                             "message": "no elements on file"})
        schedule = antenna_schedule(row, satellite.tle, store.station(station_name),
                                    step_s or config.schedule_step_s)
        return PlainTextResponse(schedule.to_csv(), media_type="text/csv")

    @app.get("/api/v1/reports/volumes")
    def get_volumes(_=Depends(principal),
                    from_: str | None = Query(default=None, alias="from"),
                    to: str | None = None):
        report = volume_report(store,
                               Epoch.from_iso(from_) if from_ else None,
                               Epoch.from_iso(to) if to else None)
        return PlainTextResponse(report.to_csv(), media_type="text/csv")

    # --- jobs --------------------------------------------------------------------

    @app.post("/api/v1/jobs/run")
    def run_jobs(_=Depends(operator_only)):
        return {"runs": app.state.scheduler.run_due(now())}

    return app
