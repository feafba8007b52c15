"""SQLite-backed session store.

One relational store holds the model tables (satellites, sensors, comm and
capture locations, requests, sessions) plus the operational bookkeeping:
onboard-memory address slots, downlink records, synced files, operator
notifications, and job-run markers.  Comm and capture sessions share one
chronological ``sessions`` table.

All mutations run in transactions; the store is the serialization point
for concurrent agents.  Changes to operator-owned fields are audited to an
append-only NDJSON file next to the database.
"""
from __future__ import annotations

import json
import os
import sqlite3
import threading
from dataclasses import dataclass

from ..astro.epoch import Epoch
from ..astro.geodesy import GeodeticPoint
from ..astro.tle import OrbitalElements, format_tle, parse_tle
from ..errors import (
    NoFreeAddressSlots,
    NotFound,
    SessionInPast,
    SessionLocked,
    SlotNotAllocated,
)
from ..models import CapLocation, CommLink, CommLocation, RequestTemplate, Satellite, Sensor

_SCHEMA = """
CREATE TABLE IF NOT EXISTS satellites (
    name TEXT PRIMARY KEY,
    norad_id TEXT NOT NULL DEFAULT '',
    priority_class INTEGER NOT NULL DEFAULT 1,
    tle_line1 TEXT, tle_line2 TEXT, tle_updated_at TEXT
);
CREATE TABLE IF NOT EXISTS links (
    sat_name TEXT NOT NULL, name TEXT NOT NULL,
    direction TEXT NOT NULL, rate_bps REAL NOT NULL, band TEXT NOT NULL DEFAULT '',
    PRIMARY KEY (sat_name, name)
);
CREATE TABLE IF NOT EXISTS sensors (
    sat_name TEXT NOT NULL, name TEXT NOT NULL,
    gsd_m REAL NOT NULL, swath_along_km REAL NOT NULL, swath_cross_km REAL NOT NULL,
    min_sun_el_deg REAL NOT NULL, spectral TEXT NOT NULL DEFAULT '',
    PRIMARY KEY (sat_name, name)
);
CREATE TABLE IF NOT EXISTS comm_locations (
    name TEXT PRIMARY KEY,
    lat REAL NOT NULL, lon REAL NOT NULL, alt_m REAL NOT NULL DEFAULT 0,
    utc_offset_h REAL NOT NULL DEFAULT 0,
    min_el_mask REAL NOT NULL DEFAULT 0,
    links_supported TEXT NOT NULL DEFAULT '[]'
);
CREATE TABLE IF NOT EXISTS cap_locations (
    name TEXT PRIMARY KEY,
    lat REAL NOT NULL, lon REAL NOT NULL, alt_m REAL NOT NULL DEFAULT 0,
    utc_offset_h REAL NOT NULL DEFAULT 0,
    adhoc INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS request_templates (
    id TEXT PRIMARY KEY,
    name TEXT NOT NULL,
    sensor_name TEXT NOT NULL,
    cmd_template_type TEXT NOT NULL,
    max_res_factor REAL NOT NULL DEFAULT 1.3,
    max_cloud_pct REAL NOT NULL DEFAULT 25.0,
    require_sunlit INTEGER NOT NULL DEFAULT 1
);
CREATE TABLE IF NOT EXISTS requests (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    user_id TEXT NOT NULL,
    template_id TEXT NOT NULL,
    target_name TEXT NOT NULL,
    win_start TEXT NOT NULL, win_end TEXT NOT NULL,
    status TEXT NOT NULL DEFAULT 'open',
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS sessions (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    ses_type TEXT NOT NULL CHECK (ses_type IN ('Comm', 'Capture')),
    state TEXT NOT NULL DEFAULT 'confirmed',
    sat_name TEXT NOT NULL,
    loc_name TEXT NOT NULL,
    link_name TEXT,
    sensor_name TEXT,
    t_start TEXT NOT NULL,
    t_end TEXT NOT NULL,
    t_aos TEXT, t_mel TEXT NOT NULL, t_los TEXT, t_los5 TEXT,
    max_el REAL NOT NULL,
    sunlit INTEGER NOT NULL DEFAULT 0,
    interference INTEGER NOT NULL DEFAULT 0,
    enabled INTEGER NOT NULL DEFAULT 0,
    priority INTEGER NOT NULL DEFAULT 1,
    roll_deg REAL, sun_el_deg REAL, orb_sun_deg REAL,
    lst_hours REAL, local_clock TEXT, res_factor REAL, cloud_pct REAL,
    auto_ok INTEGER NOT NULL DEFAULT 1,
    loc_lat REAL, loc_lon REAL, utc_offset_h REAL NOT NULL DEFAULT 0,
    request_id INTEGER,
    locked INTEGER NOT NULL DEFAULT 0,
    update_counter INTEGER NOT NULL DEFAULT 0,
    created_at TEXT NOT NULL,
    updated_at TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_sessions_time ON sessions (t_mel);
CREATE INDEX IF NOT EXISTS idx_sessions_loc ON sessions (loc_name, ses_type);
CREATE TABLE IF NOT EXISTS address_slots (
    sat_name TEXT NOT NULL,
    slot_index INTEGER NOT NULL,
    address TEXT NOT NULL,
    state TEXT NOT NULL DEFAULT 'free',
    session_id INTEGER,
    alloc_seq INTEGER,
    PRIMARY KEY (sat_name, slot_index)
);
CREATE TABLE IF NOT EXISTS registry_state (
    sat_name TEXT PRIMARY KEY,
    next_slot INTEGER NOT NULL DEFAULT 0,
    alloc_counter INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS downlink_records (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    session_id INTEGER NOT NULL,
    sat_name TEXT NOT NULL,
    station_name TEXT NOT NULL,
    link_name TEXT NOT NULL,
    rate_bps REAL NOT NULL,
    t_start TEXT NOT NULL, t_end TEXT NOT NULL,
    bytes INTEGER NOT NULL,
    synced INTEGER NOT NULL DEFAULT 0,
    manifest TEXT NOT NULL DEFAULT '[]',
    played_addresses TEXT NOT NULL DEFAULT '[]'
);
CREATE TABLE IF NOT EXISTS files (
    name TEXT PRIMARY KEY,
    bytes INTEGER NOT NULL,
    session_id INTEGER NOT NULL,
    registered_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS notifications (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    kind TEXT NOT NULL,
    sat_name TEXT NOT NULL DEFAULT '',
    message TEXT NOT NULL,
    created_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS job_runs (
    job_name TEXT NOT NULL,
    run_key TEXT NOT NULL,
    ran_at TEXT NOT NULL,
    report TEXT NOT NULL DEFAULT '{}',
    PRIMARY KEY (job_name, run_key)
);
"""

DEFAULT_REGISTRY_SLOTS = 64
_ADDRESS_BASE = 0x0800_0000
_ADDRESS_STRIDE = 0x0010_0000


def _lock_path(store_path: str) -> str | None:
    return None if store_path == ":memory:" else store_path + ".lock"


def _lock_holder(store_path: str) -> int | None:
    """PID of a live process holding the write lock, if any."""
    path = _lock_path(store_path)
    if path is None or not os.path.exists(path):
        return None
    try:
        pid = int(open(path, encoding="utf-8").read().strip())
    except (ValueError, OSError):
        return None
    try:
        os.kill(pid, 0)
    except (ProcessLookupError, PermissionError):
        return None
    except OSError:
        return None
    return pid


def acquire_write_lock(store_path: str):
    """Take the single-writer lock for a file-backed store."""
    from ..errors import StoreLockHeld

    path = _lock_path(store_path)
    if path is None:
        return
    holder = _lock_holder(store_path)
    if holder is not None and holder != os.getpid():
        raise StoreLockHeld(f"store {store_path} is locked by pid {holder}")
    with open(path, "w", encoding="utf-8") as f:
        f.write(str(os.getpid()))


def release_write_lock(store_path: str):
    path = _lock_path(store_path)
    if path and os.path.exists(path):
        os.remove(path)


def assert_store_unlocked(store_path: str):
    from ..errors import StoreLockHeld

    holder = _lock_holder(store_path)
    if holder is not None and holder != os.getpid():
        raise StoreLockHeld(f"store {store_path} is locked by pid {holder}; "
                            "stop the service before running batch commands")


def _iso(t: Epoch | None) -> str | None:
    return None if t is None else t.round_to_second().isoformat()


def _epoch(text: str | None) -> Epoch | None:
    return None if text is None else Epoch.from_iso(text)


@dataclass
class RegistrationReport:
    created: int = 0
    updated: int = 0
    unchanged: int = 0
    errors: dict[str, str] | None = None

    def __post_init__(self):
        if self.errors is None:
            self.errors = {}


class SessionStore:
    def __init__(self, path: str = ":memory:"):
        self.path = path
        self._conn = sqlite3.connect(path, check_same_thread=False,
                                     isolation_level=None)
        self._conn.row_factory = sqlite3.Row
        self._conn.execute("PRAGMA foreign_keys = ON")
        self._conn.executescript(_SCHEMA)
        self._lock = threading.RLock()
        self.audit_path = None if path == ":memory:" else path + ".audit.ndjson"
        self._audit_mem: list[dict] = []

    def close(self):
        self._conn.close()

    # --- transactions ---------------------------------------------------

    def transaction(self):
        return _Transaction(self)

    # --- model seeding ----------------------------------------------------

    def upsert_satellite(self, sat: Satellite):
        with self.transaction() as tx:
            l1 = l2 = None
            updated = None
            if sat.tle is not None:
                text = format_tle(sat.tle).splitlines()
                l1, l2 = text[-2], text[-1]
                updated = _iso(sat.tle.epoch)
            tx.execute(
                "INSERT INTO satellites (name, norad_id, priority_class, tle_line1, tle_line2, tle_updated_at)"
                " VALUES (?,?,?,?,?,?) ON CONFLICT(name) DO UPDATE SET norad_id=excluded.norad_id,"
                " priority_class=excluded.priority_class",
                (sat.name, sat.norad_id, sat.priority_class, l1, l2, updated))
            for link in sat.links:
                tx.execute(
                    "INSERT OR REPLACE INTO links (sat_name, name, direction, rate_bps, band)"
                    " VALUES (?,?,?,?,?)",
                    (sat.name, link.name, link.direction, link.rate_bps, link.band))
            for s in sat.sensors:
                tx.execute(
                    "INSERT OR REPLACE INTO sensors (sat_name, name, gsd_m, swath_along_km,"
                    " swath_cross_km, min_sun_el_deg, spectral) VALUES (?,?,?,?,?,?,?)",
                    (sat.name, s.name, s.gsd_m, s.swath_km[0], s.swath_km[1],
                     s.min_sun_el_deg, s.spectral))
            self._ensure_registry(tx, sat.name)

    def set_tle(self, sat_name: str, elements: OrbitalElements, now: Epoch):
        lines = format_tle(elements).splitlines()
        with self.transaction() as tx:
            cur = tx.execute(
                "UPDATE satellites SET tle_line1=?, tle_line2=?, tle_updated_at=? WHERE name=?",
                (lines[-2], lines[-1], _iso(now), sat_name))
            if cur.rowcount == 0:
                raise NotFound(f"unknown satellite {sat_name!r}")

    def upsert_station(self, st: CommLocation):
        with self.transaction() as tx:
            tx.execute(
                "INSERT OR REPLACE INTO comm_locations (name, lat, lon, alt_m, utc_offset_h,"
                " min_el_mask, links_supported) VALUES (?,?,?,?,?,?,?)",
                (st.name, st.point.latitude, st.point.longitude, st.point.altitude,
                 st.utc_offset_hours, st.min_elevation_mask, json.dumps(st.links_supported)))

    def upsert_target(self, loc: CapLocation, adhoc: bool = False):
        with self.transaction() as tx:
            tx.execute(
                "INSERT OR REPLACE INTO cap_locations (name, lat, lon, alt_m, utc_offset_h, adhoc)"
                " VALUES (?,?,?,?,?,?)",
                (loc.name, loc.point.latitude, loc.point.longitude, loc.point.altitude,
                 loc.utc_offset_hours, int(adhoc)))

    def upsert_request_template(self, t: RequestTemplate):
        with self.transaction() as tx:
            tx.execute(
                "INSERT OR REPLACE INTO request_templates (id, name, sensor_name,"
                " cmd_template_type, max_res_factor, max_cloud_pct, require_sunlit)"
                " VALUES (?,?,?,?,?,?,?)",
                (t.id, t.name, t.sensor_name, t.cmd_template_type,
                 t.max_resolution_factor, t.max_cloud_pct, int(t.require_sat_sunlit)))

    # --- model lookups -------------------------------------------------------

    def satellites(self) -> list[Satellite]:
        return [self._satellite_from_row(r)
                for r in self._conn.execute("SELECT * FROM satellites ORDER BY name")]

    def satellite(self, name: str) -> Satellite:
        row = self._conn.execute("SELECT * FROM satellites WHERE name=?", (name,)).fetchone()
        if row is None:
            raise NotFound(f"unknown satellite {name!r}")
        return self._satellite_from_row(row)

    def _satellite_from_row(self, row) -> Satellite:
        links = [CommLink(r["name"], r["direction"], r["rate_bps"], r["band"])
                 for r in self._conn.execute(
                     "SELECT * FROM links WHERE sat_name=? ORDER BY name", (row["name"],))]
        sensors = [Sensor(r["name"], r["gsd_m"], (r["swath_along_km"], r["swath_cross_km"]),
                          r["min_sun_el_deg"], r["spectral"])
                   for r in self._conn.execute(
                       "SELECT * FROM sensors WHERE sat_name=? ORDER BY name", (row["name"],))]
        tle = None
        if row["tle_line1"]:
            tle = parse_tle(row["tle_line1"] + "\n" + row["tle_line2"])
        return Satellite(name=row["name"], norad_id=row["norad_id"], tle=tle,
                         links=links, sensors=sensors, priority_class=row["priority_class"])

    def stations(self) -> list[CommLocation]:
        return [self._station_from_row(r) for r in
                self._conn.execute("SELECT * FROM comm_locations ORDER BY name")]

    def station(self, name: str) -> CommLocation:
        row = self._conn.execute("SELECT * FROM comm_locations WHERE name=?", (name,)).fetchone()
        if row is None:
            raise NotFound(f"unknown station {name!r}")
        return self._station_from_row(row)

    @staticmethod
    def _station_from_row(r) -> CommLocation:
        return CommLocation(
            name=r["name"], point=GeodeticPoint(r["lat"], r["lon"], r["alt_m"]),
            utc_offset_hours=r["utc_offset_h"], min_elevation_mask=r["min_el_mask"],
            links_supported=json.loads(r["links_supported"]))

    def targets(self) -> list[CapLocation]:
        return [CapLocation(r["name"], GeodeticPoint(r["lat"], r["lon"], r["alt_m"]),
                            r["utc_offset_h"])
                for r in self._conn.execute("SELECT * FROM cap_locations ORDER BY name")]

    def target(self, name: str) -> CapLocation:
        r = self._conn.execute("SELECT * FROM cap_locations WHERE name=?", (name,)).fetchone()
        if r is None:
            raise NotFound(f"unknown target {name!r}")
        return CapLocation(r["name"], GeodeticPoint(r["lat"], r["lon"], r["alt_m"]),
                           r["utc_offset_h"])

    def request_template(self, template_id: str) -> RequestTemplate:
        r = self._conn.execute("SELECT * FROM request_templates WHERE id=?",
                               (template_id,)).fetchone()
        if r is None:
            from ..errors import UnknownTemplate
            raise UnknownTemplate(f"unknown request template {template_id!r}")
        return RequestTemplate(
            id=r["id"], name=r["name"], sensor_name=r["sensor_name"],
            cmd_template_type=r["cmd_template_type"],
            max_resolution_factor=r["max_res_factor"], max_cloud_pct=r["max_cloud_pct"],
            require_sat_sunlit=bool(r["require_sunlit"]))

    def request_templates(self) -> list[RequestTemplate]:
        return [self.request_template(r["id"]) for r in
                self._conn.execute("SELECT id FROM request_templates ORDER BY id")]

    # --- sessions -----------------------------------------------------------

    def insert_session(self, **fields) -> int:
        with self.transaction() as tx:
            return self._insert_session(tx, **fields)

    def _insert_session(self, tx, **fields) -> int:
        now = fields.pop("now", None)
        for key in ("t_start", "t_end", "t_aos", "t_mel", "t_los", "t_los5", "local_clock"):
            if isinstance(fields.get(key), Epoch):
                fields[key] = _iso(fields[key])
        stamp = _iso(now) if isinstance(now, Epoch) else (now or fields.get("t_start"))
        fields.setdefault("created_at", stamp)
        fields.setdefault("updated_at", stamp)
        cols = ", ".join(fields)
        marks = ", ".join("?" for _ in fields)
        cur = tx.execute(f"INSERT INTO sessions ({cols}) VALUES ({marks})",
                         tuple(fields.values()))
        return cur.lastrowid

    def get_session(self, session_id: int) -> sqlite3.Row:
        row = self._conn.execute("SELECT * FROM sessions WHERE id=?", (session_id,)).fetchone()
        if row is None:
            raise NotFound(f"unknown session {session_id}")
        return row

    def update_session(self, session_id: int, now: Epoch | str | None = None, **fields):
        self.get_session(session_id)
        with self.transaction() as tx:
            self._update_session(tx, session_id, now=now, **fields)

    def _update_session(self, tx, session_id: int, now=None, **fields):
        for key in ("t_start", "t_end", "t_aos", "t_mel", "t_los", "t_los5", "local_clock"):
            if isinstance(fields.get(key), Epoch):
                fields[key] = _iso(fields[key])
        sets = ", ".join(f"{k}=?" for k in fields)
        args = list(fields.values())
        stamp = _iso(now) if isinstance(now, Epoch) else now
        if stamp:
            sets += ", updated_at=?"
            args.append(stamp)
        sets += ", update_counter = update_counter + 1"
        tx.execute(f"UPDATE sessions SET {sets} WHERE id=?", (*args, session_id))

    def delete_session(self, session_id: int):
        with self.transaction() as tx:
            tx.execute("DELETE FROM sessions WHERE id=?", (session_id,))

    def list_sessions(self, t_from: Epoch | None = None, t_to: Epoch | None = None,
                      sat: str | None = None, ses_type: str | None = None,
                      enabled: bool | None = None, loc: str | None = None,
                      state: str | None = None,
                      limit: int | None = None, offset: int = 0) -> list[sqlite3.Row]:
        """Unified chronological list; comm rows order by AOS, capture by MEL."""
        where, args = ["1=1"], []
        sort = "CASE ses_type WHEN 'Comm' THEN t_aos ELSE t_mel END"
        if t_from is not None:
            where.append(f"{sort} >= ?")
            args.append(_iso(t_from))
        if t_to is not None:
            where.append(f"{sort} < ?")
            args.append(_iso(t_to))
        if sat is not None:
            where.append("sat_name = ?")
            args.append(sat)
        if ses_type is not None:
            where.append("ses_type = ?")
            args.append(ses_type)
        if enabled is not None:
            where.append("enabled = ?")
            args.append(int(enabled))
        if loc is not None:
            where.append("loc_name = ?")
            args.append(loc)
        if state is not None:
            where.append("state = ?")
            args.append(state)
        sql = (f"SELECT * FROM sessions WHERE {' AND '.join(where)} "
               f"ORDER BY {sort}, id")
        if limit is not None:
            sql += f" LIMIT {int(limit)} OFFSET {int(offset)}"
        return list(self._conn.execute(sql, args))

    def set_enabled(self, session_id: int, enabled: bool, actor: str, now: Epoch):
        row = self.get_session(session_id)
        end = _epoch(row["t_end"])
        if end is not None and end <= now:
            raise SessionInPast(f"session {session_id} ended at {end}")
        if row["locked"]:
            raise SessionLocked(f"session {session_id} is locked for execution")
        with self.transaction() as tx:
            self._update_session(tx, session_id, now=now, enabled=int(enabled))
        self.append_audit(now, actor, session_id, "enabled",
                          bool(row["enabled"]), bool(enabled))
        return self.get_session(session_id)

    def set_priority(self, session_id: int, priority: int, actor: str, now: Epoch):
        row = self.get_session(session_id)
        end = _epoch(row["t_end"])
        if end is not None and end <= now:
            raise SessionInPast(f"session {session_id} ended at {end}")
        if row["locked"]:
            raise SessionLocked(f"session {session_id} is locked for execution")
        with self.transaction() as tx:
            self._update_session(tx, session_id, now=now, priority=priority)
        self.append_audit(now, actor, session_id, "priority", row["priority"], priority)
        return self.get_session(session_id)

    def lock_session(self, session_id: int, now: Epoch):
        with self.transaction() as tx:
            self._update_session(tx, session_id, now=now, locked=1)

    # --- address registry ------------------------------------------------

    def _ensure_registry(self, tx, sat_name: str, slots: int = DEFAULT_REGISTRY_SLOTS):
        have = tx.execute("SELECT COUNT(*) FROM address_slots WHERE sat_name=?",
                          (sat_name,)).fetchone()[0]
        if have:
            return
        for i in range(slots):
            tx.execute(
                "INSERT INTO address_slots (sat_name, slot_index, address) VALUES (?,?,?)",
                (sat_name, i, f"{_ADDRESS_BASE + i * _ADDRESS_STRIDE:08X}"))
        tx.execute("INSERT OR IGNORE INTO registry_state (sat_name) VALUES (?)", (sat_name,))

    def allocate_slots(self, sat_name: str, session_id: int, count: int) -> list[str]:
        """Take ``count`` free slots in ring order; allocation order is kept."""
        with self.transaction() as tx:
            return self._allocate_slots(tx, sat_name, session_id, count)

    def _allocate_slots(self, tx, sat_name: str, session_id: int, count: int) -> list[str]:
        state = tx.execute("SELECT * FROM registry_state WHERE sat_name=?",
                           (sat_name,)).fetchone()
        if state is None:
            self._ensure_registry(tx, sat_name)
            state = tx.execute("SELECT * FROM registry_state WHERE sat_name=?",
                               (sat_name,)).fetchone()
        total = tx.execute("SELECT COUNT(*) FROM address_slots WHERE sat_name=?",
                           (sat_name,)).fetchone()[0]
        free = tx.execute(
            "SELECT COUNT(*) FROM address_slots WHERE sat_name=? AND state='free'",
            (sat_name,)).fetchone()[0]
        if free < count:
            raise NoFreeAddressSlots(
                f"{sat_name}: need {count} slots, only {free} free of {total}")
        next_slot = state["next_slot"]
        counter = state["alloc_counter"]
        taken = []
        probes = 0
        while len(taken) < count and probes < 2 * total:
            row = tx.execute(
                "SELECT * FROM address_slots WHERE sat_name=? AND slot_index=?",
                (sat_name, next_slot)).fetchone()
            if row["state"] == "free":
                counter += 1
                tx.execute(
                    "UPDATE address_slots SET state='allocated', session_id=?, alloc_seq=?"
                    " WHERE sat_name=? AND slot_index=?",
                    (session_id, counter, sat_name, next_slot))
                taken.append(row["address"])
            next_slot = (next_slot + 1) % total
            probes += 1
        tx.execute("UPDATE registry_state SET next_slot=?, alloc_counter=? WHERE sat_name=?",
                   (next_slot, counter, sat_name))
        return taken

    def playback_queue(self, sat_name: str) -> list[str]:
        """Allocated addresses in allocation order (the order playback uses)."""
        return [r["address"] for r in self._conn.execute(
            "SELECT address FROM address_slots WHERE sat_name=? AND state='allocated'"
            " ORDER BY alloc_seq", (sat_name,))]

    def slots_for_session(self, session_id: int) -> list[str]:
        return [r["address"] for r in self._conn.execute(
            "SELECT address FROM address_slots WHERE session_id=? AND state IN"
            " ('allocated','downlinked') ORDER BY alloc_seq", (session_id,))]

    def mark_downlinked(self, sat_name: str, addresses: list[str]):
        with self.transaction() as tx:
            for addr in addresses:
                cur = tx.execute(
                    "UPDATE address_slots SET state='downlinked' WHERE sat_name=?"
                    " AND address=? AND state='allocated'", (sat_name, addr))
                if cur.rowcount == 0:
                    raise SlotNotAllocated(f"{sat_name}: slot {addr} is not allocated")

    def release_slots(self, sat_name: str, addresses: list[str]):
        """Return slots to the free pool; remaining playback order is untouched."""
        with self.transaction() as tx:
            for addr in addresses:
                cur = tx.execute(
                    "UPDATE address_slots SET state='free', session_id=NULL, alloc_seq=NULL"
                    " WHERE sat_name=? AND address=? AND state IN ('allocated','downlinked')",
                    (sat_name, addr))
                if cur.rowcount == 0:
                    raise SlotNotAllocated(f"{sat_name}: slot {addr} is not allocated")

    # --- requests -------------------------------------------------------------

    def insert_request(self, user_id: str, template_id: str, target_name: str,
                       win_start: Epoch, win_end: Epoch, now: Epoch) -> int:
        with self.transaction() as tx:
            cur = tx.execute(
                "INSERT INTO requests (user_id, template_id, target_name, win_start,"
                " win_end, status, created_at) VALUES (?,?,?,?,?,'open',?)",
                (user_id, template_id, target_name, _iso(win_start), _iso(win_end), _iso(now)))
            return cur.lastrowid

    def get_request(self, request_id: int) -> sqlite3.Row:
        row = self._conn.execute("SELECT * FROM requests WHERE id=?", (request_id,)).fetchone()
        if row is None:
            raise NotFound(f"unknown request {request_id}")
        return row

    def update_request(self, request_id: int, **fields):
        with self.transaction() as tx:
            sets = ", ".join(f"{k}=?" for k in fields)
            tx.execute(f"UPDATE requests SET {sets} WHERE id=?",
                       (*fields.values(), request_id))

    def list_requests(self, status: str | None = None) -> list[sqlite3.Row]:
        if status is None:
            return list(self._conn.execute("SELECT * FROM requests ORDER BY id"))
        return list(self._conn.execute("SELECT * FROM requests WHERE status=? ORDER BY id",
                                       (status,)))

    # --- downlink records / files ---------------------------------------------

    def add_downlink_record(self, session_id: int, sat_name: str, station_name: str,
                            link_name: str, rate_bps: float, t_start: Epoch, t_end: Epoch,
                            bytes_count: int, played_addresses: list[str]) -> int:
        with self.transaction() as tx:
            cur = tx.execute(
                "INSERT INTO downlink_records (session_id, sat_name, station_name, link_name,"
                " rate_bps, t_start, t_end, bytes, played_addresses)"
                " VALUES (?,?,?,?,?,?,?,?,?)",
                (session_id, sat_name, station_name, link_name, rate_bps,
                 _iso(t_start), _iso(t_end), bytes_count, json.dumps(played_addresses)))
            return cur.lastrowid

    def get_downlink_record(self, record_id: int) -> sqlite3.Row:
        row = self._conn.execute("SELECT * FROM downlink_records WHERE id=?",
                                 (record_id,)).fetchone()
        if row is None:
            raise NotFound(f"unknown downlink record {record_id}")
        return row

    def downlink_records(self, t_from: Epoch | None = None,
                         t_to: Epoch | None = None) -> list[sqlite3.Row]:
        where, args = ["1=1"], []
        if t_from is not None:
            where.append("t_start >= ?")
            args.append(_iso(t_from))
        if t_to is not None:
            where.append("t_start < ?")
            args.append(_iso(t_to))
        return list(self._conn.execute(
            f"SELECT * FROM downlink_records WHERE {' AND '.join(where)} ORDER BY id", args))

    def update_downlink_record(self, record_id: int, **fields):
        with self.transaction() as tx:
            sets = ", ".join(f"{k}=?" for k in fields)
            tx.execute(f"UPDATE downlink_records SET {sets} WHERE id=?",
                       (*fields.values(), record_id))

    def register_file(self, name: str, bytes_count: int, session_id: int, now: Epoch) -> str:
        """Register a synced file; duplicate names get a content-hash suffix."""
        import hashlib
        with self.transaction() as tx:
            exists = tx.execute("SELECT 1 FROM files WHERE name=?", (name,)).fetchone()
            final = name
            if exists:
                digest = hashlib.sha256(
                    f"{name}:{session_id}:{bytes_count}".encode()).hexdigest()[:8]
                stem, dot, ext = name.rpartition(".")
                final = f"{stem}-{digest}{dot}{ext}" if dot else f"{name}-{digest}"
            tx.execute("INSERT INTO files (name, bytes, session_id, registered_at)"
                       " VALUES (?,?,?,?)", (final, bytes_count, session_id, _iso(now)))
            return final

    def files(self) -> list[sqlite3.Row]:
        return list(self._conn.execute("SELECT * FROM files ORDER BY registered_at, name"))

    # --- notifications / job runs ------------------------------------------

    def add_notification(self, kind: str, sat_name: str, message: str, now: Epoch):
        with self.transaction() as tx:
            tx.execute("INSERT INTO notifications (kind, sat_name, message, created_at)"
                       " VALUES (?,?,?,?)", (kind, sat_name, message, _iso(now)))

    def notifications(self, kind: str | None = None) -> list[sqlite3.Row]:
        if kind is None:
            return list(self._conn.execute("SELECT * FROM notifications ORDER BY id"))
        return list(self._conn.execute("SELECT * FROM notifications WHERE kind=? ORDER BY id",
                                       (kind,)))

    def job_already_ran(self, job_name: str, run_key: str) -> bool:
        return self._conn.execute(
            "SELECT 1 FROM job_runs WHERE job_name=? AND run_key=?",
            (job_name, run_key)).fetchone() is not None

    def record_job_run(self, job_name: str, run_key: str, now: Epoch, report: dict):
        with self.transaction() as tx:
            tx.execute(
                "INSERT OR REPLACE INTO job_runs (job_name, run_key, ran_at, report)"
                " VALUES (?,?,?,?)", (job_name, run_key, _iso(now), json.dumps(report)))

    def job_runs(self, job_name: str) -> list[sqlite3.Row]:
        return list(self._conn.execute(
            "SELECT * FROM job_runs WHERE job_name=? ORDER BY run_key", (job_name,)))

    # --- audit log --------------------------------------------------------------

    def append_audit(self, when: Epoch, actor: str, session_id: int,
                     field: str, old, new):
        entry = {"when": _iso(when), "actor": actor, "session_id": session_id,
                 "field": field, "old": old, "new": new}
        if self.audit_path is None:
            self._audit_mem.append(entry)
        else:
            with open(self.audit_path, "a", encoding="utf-8") as f:
                f.write(json.dumps(entry) + "\n")

    def audit_entries(self) -> list[dict]:
        if self.audit_path is None:
            return list(self._audit_mem)
        if not os.path.exists(self.audit_path):
            return []
        with open(self.audit_path, encoding="utf-8") as f:
            return [json.loads(line) for line in f if line.strip()]


class _Transaction:
    """Serialized write scope: BEGIN IMMEDIATE .. COMMIT/ROLLBACK."""

    def __init__(self, store: SessionStore):
        self._store = store

    def __enter__(self):
        self._store._lock.acquire()
        self._depth_owned = not self._store._conn.in_transaction
        if self._depth_owned:
            self._store._conn.execute("BEGIN IMMEDIATE")
        return self._store._conn

    def __exit__(self, exc_type, exc, tb):
        try:
            if self._depth_owned:
                if exc_type is None:
                    self._store._conn.commit()
                else:
                    self._store._conn.rollback()
        finally:
            self._store._lock.release()
        return False
