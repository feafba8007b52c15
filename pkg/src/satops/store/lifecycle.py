"""Session lifecycle over the store.

Daily auto-registration of communication sessions for the coming week,
antenna-conflict (interference) resolution, the imaging request flow
(tentative Ses-A candidates through confirmed Ses-B), and expiry of stale
tentative state.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..astro.epoch import Epoch
from ..astro.tle import OrbitalElements
from ..errors import (
    CandidateExpired,
    AlreadyConfirmed,
    InvalidRequestState,
    NoCandidates,
    NotFound,
    SatopsError,
    WindowOutOfRange,
)
from ..geometry import beta_angle, local_clock_time, local_solar_time, solar_elevation
from ..models import CapLocation, CommLocation, Satellite
from ..passes import ConstraintSet, find_capture_opportunities, find_comm_passes
from .db import RegistrationReport, SessionStore


@dataclass(frozen=True)
class PlanningPolicy:
    """The knobs that turn pass geometry into session records."""
    horizon_days: float = 7.0
    setup_s: int = 60              # antenna slew pad before AOS
    teardown_s: int = 60           # pad after LOS
    comm_lead_s: int = 120         # session start before AOS (power-up, attitude)
    comm_lag_s: int = 60           # session end after LOS (power-down)
    capture_lead_s: int = 300      # session start before MEL (power-up, pointing)
    capture_lag_s: int = 300       # session end after MEL (store, power-down)
    upsert_match_s: float = 60.0   # MEL tolerance identifying "the same" pass
    slots_per_capture: int = 4
    request_min_lead_h: float = 1.0
    request_max_lead_h: float = 12.0
    lock_before_aos_s: int = 120


DEFAULT_POLICY = PlanningPolicy()


# --- interference ---------------------------------------------------------

def resolve_interference(sessions, setup_s: int = 60, teardown_s: int = 60) -> dict[int, bool]:
    """Per-session interference verdicts for one station's comm sessions.

    Two sessions conflict when their padded [AOS-setup, LOS+teardown]
    intervals intersect.  Winners are chosen greedily in (priority desc,
    max elevation desc, earlier AOS, id) order: a session loses only if it
    overlaps an already-accepted stronger one, so a pass that conflicts
    solely with losers still runs.  Deterministic for any input order.
    """
    rows = []
    for s in sessions:
        t_aos = Epoch.from_iso(s["t_aos"]) if isinstance(s["t_aos"], str) else s["t_aos"]
        t_los = Epoch.from_iso(s["t_los"]) if isinstance(s["t_los"], str) else s["t_los"]
        rows.append((s["id"], s["priority"], s["max_el"],
                     t_aos.ms - setup_s * 1000, t_los.ms + teardown_s * 1000))
    order = sorted(rows, key=lambda r: (-r[1], -r[2], r[3], r[0]))
    accepted: list[tuple[int, int]] = []
    verdict: dict[int, bool] = {}
    for sid, _, _, lo, hi in order:
        clash = any(lo <= ahi and alo <= hi for alo, ahi in accepted)
        verdict[sid] = clash
        if not clash:
            accepted.append((lo, hi))
    return verdict


# --- auto-registration ----------------------------------------------------

def auto_register_comm_sessions(store: SessionStore, now: Epoch,
                                policy: PlanningPolicy = DEFAULT_POLICY) -> RegistrationReport:
    """Upsert comm sessions for every satellite/station/link over the horizon.

    New sessions arrive disabled; operator-set enabled/priority flags on
    existing sessions survive TLE refreshes that move a pass by less than
    the match tolerance.  Idempotent at fixed clock and element sets.
    """
    report = RegistrationReport()
    window = (now, now + policy.horizon_days * 86400.0)
    stations = store.stations()
    for sat in store.satellites():
        if sat.tle is None:
            report.errors[sat.name] = "no elements on file"
            continue
        try:
            _register_for_satellite(store, sat, stations, window, now, policy, report)
        except SatopsError as exc:
            report.errors[sat.name] = f"{exc.code}: {exc}"
    for station in stations:
        _apply_interference(store, station.name, now, policy)
    return report


def _assign_beams(sat: Satellite, station, passes) -> list[str]:
    """One link per pass: the day's first pass at an uplink-capable station
    carries the command link, every other pass the fastest shared downlink."""
    shared = [l for l in sat.links if l.name in station.links_supported]
    downs = sorted((l for l in shared if l.direction == "down"),
                   key=lambda l: -l.rate_bps)
    ups = sorted((l for l in shared if l.direction == "up"),
                 key=lambda l: -l.rate_bps)
    beams = []
    upload_days: set = set()
    for p in passes:
        day = p.t_mel.to_datetime().date()
        if ups and day not in upload_days:
            beams.append(ups[0].name)
            upload_days.add(day)
        elif downs:
            beams.append(downs[0].name)
        else:
            beams.append(ups[0].name)
    return beams


def _register_for_satellite(store, sat: Satellite, stations, window, now, policy, report):
    sat_links = {l.name for l in sat.links}
    for station in stations:
        if not sat_links & set(station.links_supported):
            continue
        passes = find_comm_passes(sat.tle, station.point, window,
                                  min_elevation=station.min_elevation_mask,
                                  location_id=station.name)
        beams = _assign_beams(sat, station, passes)
        existing = [dict(r) for r in store.list_sessions(
            ses_type="Comm", sat=sat.name, loc=station.name)]
        for p, link in zip(passes, beams):
            match = _closest_match(existing, p.t_mel, policy.upsert_match_s)
            fields = dict(
                t_start=p.t_aos + (-policy.comm_lead_s),
                t_end=p.t_los + policy.comm_lag_s,
                t_aos=p.t_aos, t_mel=p.t_mel,
                t_los=p.t_los, t_los5=p.t_los5, max_el=p.max_elevation,
                sunlit=int(p.sunlit_at_mel), link_name=link,
                sun_el_deg=solar_elevation(station.point, p.t_mel),
                orb_sun_deg=beta_angle(sat.tle, p.t_mel),
                lst_hours=local_solar_time(station.point.longitude, p.t_mel),
                local_clock=local_clock_time(p.t_mel, station.utc_offset_hours),
            )
            if match is None:
                store.insert_session(
                    ses_type="Comm", state="confirmed", sat_name=sat.name,
                    loc_name=station.name, enabled=0,
                    priority=sat.priority_class, loc_lat=station.point.latitude,
                    loc_lon=station.point.longitude,
                    utc_offset_h=station.utc_offset_hours,
                    now=now, **fields)
                report.created += 1
            else:
                if _materially_changed(match, fields):
                    store.update_session(match["id"], now=now, **fields)
                    report.updated += 1
                else:
                    report.unchanged += 1


def _closest_match(rows, t_mel: Epoch, tolerance_s: float):
    key = t_mel.round_to_second().isoformat()
    best, best_dt = None, tolerance_s
    for row in rows:
        dt = abs(Epoch.from_iso(row["t_mel"]) - Epoch.from_iso(key))
        if dt <= best_dt:
            best, best_dt = row, dt
    return best


def _materially_changed(row, fields) -> bool:
    for key in ("t_aos", "t_mel", "t_los", "t_los5"):
        new = fields[key]
        new_iso = new.round_to_second().isoformat() if new is not None else None
        if row[key] != new_iso:
            return True
    if row["link_name"] != fields["link_name"]:
        return True
    return abs((row["max_el"] or 0.0) - fields["max_el"]) > 0.01


def _apply_interference(store, station_name: str, now: Epoch, policy: PlanningPolicy):
    rows = store.list_sessions(ses_type="Comm", loc=station_name)
    future = [r for r in rows if Epoch.from_iso(r["t_los"]) > now]
    verdict = resolve_interference(future, policy.setup_s, policy.teardown_s)
    for row in future:
        flag = int(verdict[row["id"]])
        if row["interference"] != flag:
            store.update_session(row["id"], now=now, interference=flag)


# --- request flow -----------------------------------------------------------

def create_request(store: SessionStore, user_id: str, template_id: str, target,
                   window: tuple[Epoch, Epoch], now: Epoch,
                   forecast=None, policy: PlanningPolicy = DEFAULT_POLICY):
    """Open a request and compute its tentative (Ses-A) capture sessions.

    ``target`` is either a stored target name or a dict with lat/lon (an
    ad-hoc point, persisted under a generated name).  Raises
    :class:`NoCandidates` when nothing passes the constraints; the request
    itself stays open in that case.
    """
    win_start, win_end = window
    earliest = now + policy.request_min_lead_h * 3600.0
    latest = now + policy.request_max_lead_h * 3600.0
    if not (earliest <= win_start < win_end <= latest):
        raise WindowOutOfRange(
            f"window must lie between {policy.request_min_lead_h:.0f} and "
            f"{policy.request_max_lead_h:.0f} hours ahead")
    template = store.request_template(template_id)

    if isinstance(target, str):
        cap = store.target(target)
    else:
        from ..astro.geodesy import GeodeticPoint
        point = GeodeticPoint(float(target["lat"]), float(target["lon"]),
                              float(target.get("alt_m", 0.0)))
        name = target.get("name") or f"ADHOC-{point.latitude:.3f}-{point.longitude:.3f}"
        cap = CapLocation(name, point, float(target.get("utc_offset_hours", 0.0)))
        store.upsert_target(cap, adhoc=True)

    request_id = store.insert_request(user_id, template_id, cap.name,
                                      win_start, win_end, now)
    constraints = ConstraintSet(
        max_resolution_factor=template.max_resolution_factor,
        max_cloud_pct=template.max_cloud_pct,
        require_sat_sunlit=template.require_sat_sunlit)

    candidates = []
    for sat in store.satellites():
        sensor = sat.sensor(template.sensor_name)
        if sensor is None or sat.tle is None:
            continue
        opportunities = find_capture_opportunities(
            sat.tle, cap.point, sensor, window, constraints, forecast,
            utc_offset_hours=cap.utc_offset_hours, location_id=cap.name)
        for opp in opportunities:
            sid = store.insert_session(
                ses_type="Capture", state="tentative", sat_name=sat.name,
                loc_name=cap.name, sensor_name=sensor.name,
                t_start=opp.t_mel + (-policy.capture_lead_s),
                t_end=opp.t_mel + policy.capture_lag_s,
                t_mel=opp.t_mel, max_el=opp.elevation_at_target,
                sunlit=int(opp.sat_sunlit), enabled=0, priority=sat.priority_class,
                roll_deg=opp.roll_deg, sun_el_deg=opp.sun_el_deg,
                orb_sun_deg=opp.orb_sun_deg, lst_hours=opp.local_solar_time,
                local_clock=opp.local_clock_time, res_factor=opp.resolution_factor,
                cloud_pct=opp.cloud_pct, auto_ok=int(not opp.excluded_from_auto),
                loc_lat=cap.point.latitude, loc_lon=cap.point.longitude,
                utc_offset_h=cap.utc_offset_hours, request_id=request_id, now=now)
            candidates.append(store.get_session(sid))

    if not candidates:
        raise NoCandidates(f"request {request_id}: no opportunity satisfies the "
                           f"constraints in the window", request_id)
    store.update_request(request_id, status="candidates_issued")
    candidates.sort(key=lambda r: (r["t_mel"], r["id"]))
    return store.get_request(request_id), candidates


def confirm_request(store: SessionStore, request_id: int, candidate_id: int,
                    now: Epoch, policy: PlanningPolicy = DEFAULT_POLICY):
    """Turn one Ses-A candidate into the confirmed Ses-B session.

    Allocates onboard memory slots for the capture; siblings are removed.
    Rolls back entirely when the registry is full, leaving the request
    still awaiting confirmation.
    """
    request = store.get_request(request_id)
    if request["status"] == "confirmed":
        raise AlreadyConfirmed(f"request {request_id} is already confirmed")
    if request["status"] != "candidates_issued":
        raise InvalidRequestState(
            f"request {request_id} is {request['status']}, not awaiting confirmation")
    candidate = store.get_session(candidate_id)
    if candidate["request_id"] != request_id or candidate["ses_type"] != "Capture":
        raise NotFound(f"candidate {candidate_id} does not belong to request {request_id}")
    if candidate["state"] != "tentative":
        raise AlreadyConfirmed(f"candidate {candidate_id} is not tentative")
    if Epoch.from_iso(candidate["t_mel"]) < now + policy.request_min_lead_h * 3600.0:
        raise CandidateExpired(
            f"candidate {candidate_id} closest approach is less than "
            f"{policy.request_min_lead_h:.0f} h ahead")

    with store.transaction() as tx:
        store._allocate_slots(tx, candidate["sat_name"], candidate_id,
                              policy.slots_per_capture)
        store._update_session(tx, candidate_id, now=now, state="confirmed", enabled=1)
        tx.execute(
            "DELETE FROM sessions WHERE request_id=? AND id<>? AND state='tentative'",
            (request_id, candidate_id))
        tx.execute("UPDATE requests SET status='confirmed' WHERE id=?", (request_id,))
    return store.get_session(candidate_id)


def expire_stale(store: SessionStore, now: Epoch) -> dict[str, int]:
    """Expire requests whose window passed and drop their tentative sessions."""
    expired_requests = 0
    dropped_sessions = 0
    for req in store.list_requests():
        if req["status"] in ("open", "candidates_issued") and \
                Epoch.from_iso(req["win_end"]) < now:
            with store.transaction() as tx:
                cur = tx.execute(
                    "DELETE FROM sessions WHERE request_id=? AND state='tentative'",
                    (req["id"],))
                dropped_sessions += cur.rowcount
                tx.execute("UPDATE requests SET status='expired' WHERE id=?", (req["id"],))
            expired_requests += 1
    return {"expired_requests": expired_requests, "dropped_sessions": dropped_sessions}
