import json

import pytest
from fastapi.testclient import TestClient

from conftest import T0, make_sso_elements, pick_visible_target
from satops.astro import Epoch, GeodeticPoint
from satops.models import CapLocation, CommLink, CommLocation, RequestTemplate, Satellite, Sensor
from satops.service import ServiceConfig, StaticForecast, TokenEntry, create_app
from satops.store.lifecycle import PlanningPolicy

OP = {"Authorization": "Bearer op-token"}
USER = {"Authorization": "Bearer user-token"}


def make_config(store_path=":memory:") -> ServiceConfig:
    return ServiceConfig(
        store_path=store_path,
        tokens=[TokenEntry("op-token", "operator-1", "operator"),
                TokenEntry("user-token", "user-1", "data_user")],
        policy=PlanningPolicy(),
        satellites=[Satellite(
            name="RS-A", norad_id="90001", tle=make_sso_elements(),
            links=[CommLink("SCMD", "up", 1_000, "S"),
                   CommLink("STLM", "down", 100_000, "S"),
                   CommLink("XTLM", "down", 20_000_000, "X")],
            sensors=[Sensor("HPT", 2.2, (3.6, 2.7), 5.0, "RGBN"),
                     Sensor("SMI", 47.0, (77.0, 58.0), 25.0)],
            priority_class=1)],
        stations=[CommLocation("SENDAI", GeodeticPoint(38.3, 140.8, 100.0), 9.0, 0.0,
                               ["SCMD", "STLM", "XTLM"]),
                  CommLocation("KIRUNA", GeodeticPoint(67.8, 20.2, 400.0), 1.0, 0.0,
                               ["STLM"])],
        targets=[CapLocation("AOBAYAMA", GeodeticPoint(38.25, 140.84, 150.0), 9.0)],
        request_templates=[
            RequestTemplate("hpt-standard", "High-res", "HPT", "hpt_mfc"),
            RequestTemplate("smi-standard", "Multispectral", "SMI", "smi_mfc")],
    )


class Clock:
    def __init__(self, t: Epoch):
        self.t = t

    def __call__(self) -> Epoch:
        return self.t


@pytest.fixture()
def client():
    clock = Clock(T0)
    app = create_app(make_config(), now_fn=clock, forecast=StaticForecast(10.0))
    c = TestClient(app)
    c.clock = clock
    c.app_ref = app
    return c


@pytest.fixture(scope="module")
def request_payload():
    point, t_over = pick_visible_target(make_sso_elements(), T0 + 2 * 3600.0,
                                        T0 + 6 * 3600.0)
    return {
        "template_id": "hpt-standard",
        "target": {"lat": point.latitude, "lon": point.longitude,
                   "name": "REQ-TGT", "utc_offset_hours": 9.0},
        "window": {"from": (t_over + (-1800.0)).isoformat(),
                   "to": (t_over + 1800.0).isoformat()},
    }


# --- auth ---------------------------------------------------------------

def test_missing_token_is_401(client):
    assert client.get("/api/v1/sessions").status_code == 401


def test_unknown_token_is_401(client):
    r = client.get("/api/v1/sessions", headers={"Authorization": "Bearer nope"})
    assert r.status_code == 401


ROLE_MATRIX = [
    # (method, path, body, operator_allowed, data_user_allowed)
    ("GET", "/api/v1/sessions", None, True, True),
    ("GET", "/api/v1/requests", None, True, True),
    ("GET", "/api/v1/templates", None, True, True),
    ("GET", "/api/v1/reports/volumes", None, True, True),
    ("POST", "/api/v1/tle", {"text": "x"}, True, False),
    ("POST", "/api/v1/requests", "REQUEST", True, True),
    ("PATCH", "/api/v1/sessions/1", {"enabled": True}, True, False),
    ("POST", "/api/v1/satellites/RS-A/cmdfile", {}, True, False),
    ("POST", "/api/v1/jobs/run", {}, True, False),
]


@pytest.mark.parametrize("method,path,body,op_ok,user_ok", ROLE_MATRIX)
def test_role_matrix(client, request_payload, method, path, body, op_ok, user_ok):
    payload = request_payload if body == "REQUEST" else body
    for headers, allowed in ((OP, op_ok), (USER, user_ok)):
        r = client.request(method, path, headers=headers, json=payload)
        if allowed:
            assert r.status_code != 403, (path, headers)
        else:
            assert r.status_code == 403, (path, headers)
    # and unauthenticated is always 401
    r = client.request(method, path, json=payload)
    assert r.status_code == 401


# --- request flow over HTTP ---------------------------------------------------

def test_request_flow(client, request_payload):
    r = client.post("/api/v1/requests", headers=USER, json=request_payload)
    assert r.status_code == 201, r.text
    body = r.json()
    assert body["request"]["status"] == "candidates_issued"
    candidates = body["candidates"]
    assert len(candidates) >= 1
    assert all(c["state"] == "tentative" for c in candidates)

    request_id = body["request"]["id"]
    chosen = candidates[0]["id"]
    r = client.post(f"/api/v1/requests/{request_id}/confirm", headers=USER,
                    json={"candidate_id": chosen})
    assert r.status_code == 200, r.text
    assert r.json()["session"]["state"] == "confirmed"

    # siblings are gone server-side
    r = client.get("/api/v1/requests", headers=USER)
    entry = next(e for e in r.json()["requests"]
                 if e["request"]["id"] == request_id)
    assert [c["id"] for c in entry["candidates"]] == [chosen]

    # second confirm conflicts
    r = client.post(f"/api/v1/requests/{request_id}/confirm", headers=USER,
                    json={"candidate_id": chosen})
    assert r.status_code == 409
    assert r.json()["error"] == "AlreadyConfirmed"


def test_request_window_out_of_range(client, request_payload):
    bad = dict(request_payload)
    bad["window"] = {"from": (T0 + 13 * 3600.0).isoformat(),
                     "to": (T0 + 14 * 3600.0).isoformat()}
    r = client.post("/api/v1/requests", headers=USER, json=bad)
    assert r.status_code == 400
    assert r.json()["error"] == "WindowOutOfRange"
    assert "12" in r.json()["message"]


def test_request_without_candidates_stays_open(client, request_payload):
    nowhere = dict(request_payload)
    nowhere["target"] = {"lat": -45.0, "lon": -30.0}
    r = client.post("/api/v1/requests", headers=USER, json=nowhere)
    assert r.status_code == 201
    assert r.json()["candidates"] == []
    assert r.json()["request"]["status"] == "open"


# --- sessions -----------------------------------------------------------------

def _register(client):
    r = client.post("/api/v1/jobs/run", headers=OP)
    assert r.status_code == 200
    return r.json()


def test_sessions_listing_and_patch(client):
    _register(client)
    r = client.get("/api/v1/sessions", headers=USER)
    sessions = r.json()["sessions"]
    assert sessions and r.json()["total"] == len(sessions)
    target = next(s for s in sessions if not s["interference"])
    assert target["enabled"] is False

    r = client.patch(f"/api/v1/sessions/{target['id']}", headers=OP,
                     json={"enabled": True, "priority": 2})
    assert r.status_code == 200
    updated = r.json()["session"]
    assert updated["enabled"] is True and updated["priority"] == 2
    assert updated["update_counter"] > target["update_counter"]

    r = client.get(f"/api/v1/sessions/{target['id']}", headers=USER)
    assert r.json()["session"]["enabled"] is True


def test_patch_past_session_conflicts(client):
    _register(client)
    store = client.app_ref.state.store
    row = store.list_sessions(ses_type="Comm")[0]
    client.clock.t = Epoch.from_iso(row["t_end"]) + 3600.0
    r = client.patch(f"/api/v1/sessions/{row['id']}", headers=OP,
                     json={"enabled": True})
    assert r.status_code == 409
    assert r.json()["error"] == "SessionInPast"


def test_sessions_pagination_deterministic(client):
    _register(client)
    full = client.get("/api/v1/sessions", headers=USER).json()["sessions"]
    paged = []
    offset = 0
    while True:
        chunk = client.get(f"/api/v1/sessions?limit=7&offset={offset}",
                           headers=USER).json()["sessions"]
        if not chunk:
            break
        paged.extend(chunk)
        offset += 7
    assert [s["id"] for s in paged] == [s["id"] for s in full]


def test_session_filters(client):
    _register(client)
    r = client.get("/api/v1/sessions?type=Comm&sat=RS-A", headers=USER)
    assert all(s["ses_type"] == "Comm" for s in r.json()["sessions"])
    window_from = (T0 + 86400.0).isoformat()
    r = client.get(f"/api/v1/sessions?from={window_from}", headers=USER)
    assert all(s["t_mel"] >= window_from or s["t_aos"] >= window_from
               for s in r.json()["sessions"])


# --- TLE ingestion ---------------------------------------------------------------

def test_tle_ingest(client):
    from satops.astro import format_tle
    from dataclasses import replace
    fresh = replace(make_sso_elements(), epoch=T0 + 3600.0)
    good = format_tle(fresh)
    unknown = format_tle(replace(fresh, satellite_id="77777"))
    corrupted_lines = good.splitlines()
    corrupted = corrupted_lines[0][:-1] + ("0" if corrupted_lines[0][-1] != "0" else "1") \
        + "\n" + corrupted_lines[1]
    r = client.post("/api/v1/tle", headers=OP,
                    json={"text": good + unknown + corrupted + "\n"})
    assert r.status_code == 200
    results = r.json()["results"]
    assert results[0]["accepted"] is True and results[0]["satellite"] == "RS-A"
    assert results[1]["accepted"] is False and results[1]["error"] == "UnknownSatellite"
    assert results[2]["accepted"] is False and results[2]["error"] == "ChecksumMismatch"


# --- CMD endpoint -----------------------------------------------------------------

def _confirmed_flow(client, request_payload):
    r = client.post("/api/v1/requests", headers=USER, json=request_payload)
    body = r.json()
    rid = body["request"]["id"]
    cid = body["candidates"][0]["id"]
    client.post(f"/api/v1/requests/{rid}/confirm", headers=USER,
                json={"candidate_id": cid})
    return cid


def test_cmdfile_generation(client, request_payload):
    _register(client)
    cid = _confirmed_flow(client, request_payload)
    r = client.post("/api/v1/satellites/RS-A/cmdfile", headers=OP)
    assert r.status_code == 200, r.text
    body = r.json()
    assert body["filename"].startswith("CMD_RS-A_")
    assert any(s["id"] == cid for s in body["report"]["sessions"])
    session = client.get(f"/api/v1/sessions/{cid}", headers=OP).json()["session"]
    assert f"WAITABS {session['t_start']}" in body["content"]

    # text format downloads the same bytes
    r2 = client.post("/api/v1/satellites/RS-A/cmdfile?format=text", headers=OP)
    assert r2.status_code == 200
    assert r2.headers["content-disposition"].startswith("attachment")
    assert r2.text == body["content"]

    # generation twice is identical and mutates nothing
    r3 = client.post("/api/v1/satellites/RS-A/cmdfile", headers=OP)
    assert r3.json()["content"] == body["content"]


def test_cmdfile_unknown_satellite(client):
    r = client.post("/api/v1/satellites/NOPE/cmdfile", headers=OP)
    assert r.status_code == 404


# --- station products ----------------------------------------------------------

def test_schedule_csv(client):
    _register(client)
    store = client.app_ref.state.store
    row = store.list_sessions(ses_type="Comm", loc="SENDAI")[0]
    r = client.get(f"/api/v1/stations/SENDAI/schedule?session={row['id']}&step_s=10",
                   headers=USER)
    assert r.status_code == 200
    lines = r.text.strip().split("\n")
    assert lines[0] == "t_utc,az_deg,el_deg"
    assert len(lines) > 10


def test_schedule_wrong_station_404(client):
    _register(client)
    store = client.app_ref.state.store
    row = store.list_sessions(ses_type="Comm", loc="SENDAI")[0]
    r = client.get(f"/api/v1/stations/KIRUNA/schedule?session={row['id']}",
                   headers=USER)
    assert r.status_code == 404


def test_volumes_csv(client):
    r = client.get("/api/v1/reports/volumes", headers=USER)
    assert r.status_code == 200
    assert r.text.startswith("satname,")


# --- durability -------------------------------------------------------------------

def test_mutations_survive_restart(tmp_path, request_payload):
    path = str(tmp_path / "ops.db")
    clock = Clock(T0)
    app1 = create_app(make_config(path), now_fn=clock, forecast=StaticForecast(10.0))
    c1 = TestClient(app1)
    c1.post("/api/v1/jobs/run", headers=OP)
    sessions = c1.get("/api/v1/sessions", headers=OP).json()["sessions"]
    target = next(s for s in sessions if not s["interference"])
    c1.patch(f"/api/v1/sessions/{target['id']}", headers=OP, json={"enabled": True})
    r = c1.post("/api/v1/requests", headers=USER, json=request_payload)
    rid = r.json()["request"]["id"]
    app1.state.store.close()

    app2 = create_app(make_config(path), now_fn=clock, forecast=StaticForecast(10.0))
    c2 = TestClient(app2)
    assert c2.get(f"/api/v1/sessions/{target['id']}",
                  headers=OP).json()["session"]["enabled"] is True
    statuses = [e["request"]["id"] for e in c2.get("/api/v1/requests",
                                                   headers=OP).json()["requests"]]
    assert rid in statuses
    total1 = len(sessions)
    total2 = c2.get("/api/v1/sessions", headers=OP).json()["total"]
    assert total2 >= total1


# --- scheduled jobs ----------------------------------------------------------------

def test_jobs_daily_idempotent_and_advancing(client):
    runs = _register(client)["runs"]
    assert any(r["job"] == "auto_register" for r in runs)
    # same day again: no second registration
    runs = _register(client)["runs"]
    assert not any(r["job"] == "auto_register" for r in runs)
    # advance three days: three more registration runs
    count = 0
    for day in range(1, 4):
        client.clock.t = T0 + day * 86400.0
        runs = _register(client)["runs"]
        count += sum(1 for r in runs if r["job"] == "auto_register")
    assert count == 3
    store = client.app_ref.state.store
    assert len(store.job_runs("auto_register")) == 4


def test_planning_reminder_every_two_days(client):
    store = client.app_ref.state.store
    seen = 0
    for day in range(6):
        client.clock.t = T0 + day * 86400.0
        _register(client)
    reminders = store.notifications("planning_due")
    days = {Epoch.from_iso(n["created_at"]).to_datetime().toordinal()
            for n in reminders}
    assert len(days) == 3     # every other day over six days
