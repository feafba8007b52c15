"""Bridge between the session store and the command-template language.

Builds the variable bindings each session exposes to its template, picks
the template type for a session (routine vs X-band download for comm,
sensor-matched for captures), and drives whole-file CMD generation for one
satellite.  Generation never mutates the store: playback pops happen on an
in-memory copy of the address queue.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .astro.epoch import Epoch
from .cmdlang import (
    SessionContext,
    TEMPLATE_TYPES,
    CmdFile,
    generate_cmd_file,
    lint_template,
    load_builtin_templates,
)
from .errors import NotFound
from .store.db import SessionStore

CONTEXT_SCHEMA = {
    "ses_t_start_utc", "ses_t_end_utc", "loc_t_aos_utc", "loc_t_mel_utc",
    "loc_t_los_utc", "loc_t_los5_utc", "loc_t_mel_local", "loc_name",
    "loc_lat_deg", "loc_lon_deg", "m_el_deg", "sat_sunlit", "sun_el_deg",
    "orb_sun_deg", "sat_t_mel_lst", "res_factor", "roll_deg", "cloud_pct",
    "sat_name", "sensor_name", "link_name",
}

_SENSOR_TEMPLATE = {"SMI": "smi_mfc", "HPT": "hpt_mfc"}


def template_type_for_session(store: SessionStore, row) -> str:
    if row["ses_type"] == "Comm":
        return "xband_download" if row["link_name"] == "XTLM" else "routine"
    if row["request_id"] is not None:
        request = store.get_request(row["request_id"])
        return store.request_template(request["template_id"]).cmd_template_type
    try:
        return _SENSOR_TEMPLATE[row["sensor_name"]]
    except KeyError:
        raise NotFound(
            f"session {row['id']}: no template for sensor {row['sensor_name']!r}"
        ) from None


def build_session_context(store: SessionStore, row) -> SessionContext:
    """All template bindings for one session row, plus its playback queue."""
    t_start = Epoch.from_iso(row["t_start"])
    t_end = Epoch.from_iso(row["t_end"])
    t_mel = Epoch.from_iso(row["t_mel"])
    t_aos = Epoch.from_iso(row["t_aos"]) if row["t_aos"] else t_start
    t_los = Epoch.from_iso(row["t_los"]) if row["t_los"] else t_end
    t_los5 = Epoch.from_iso(row["t_los5"]) if row["t_los5"] else t_los

    bindings = {
        "ses_t_start_utc": t_start,
        "ses_t_end_utc": t_end,
        "loc_t_aos_utc": t_aos,
        "loc_t_mel_utc": t_mel,
        "loc_t_los_utc": t_los,
        "loc_t_los5_utc": t_los5,
        "loc_t_mel_local": Epoch.from_iso(row["local_clock"]) if row["local_clock"] else t_mel,
        "loc_name": row["loc_name"],
        "loc_lat_deg": row["loc_lat"] if row["loc_lat"] is not None else 0.0,
        "loc_lon_deg": row["loc_lon"] if row["loc_lon"] is not None else 0.0,
        "m_el_deg": row["max_el"],
        "sat_sunlit": int(row["sunlit"]),
        "sun_el_deg": row["sun_el_deg"] if row["sun_el_deg"] is not None else -90.0,
        "orb_sun_deg": row["orb_sun_deg"] if row["orb_sun_deg"] is not None else 0.0,
        "sat_t_mel_lst": row["lst_hours"] if row["lst_hours"] is not None else 0.0,
        "res_factor": row["res_factor"] if row["res_factor"] is not None else 1.0,
        "roll_deg": row["roll_deg"] if row["roll_deg"] is not None else 0.0,
        "cloud_pct": row["cloud_pct"] if row["cloud_pct"] is not None else -1.0,
        "sat_name": row["sat_name"],
        "sensor_name": row["sensor_name"] or "",
        "link_name": row["link_name"] or "",
    }
    if row["ses_type"] == "Capture":
        queue = store.slots_for_session(row["id"])
    elif row["link_name"] == "XTLM":
        queue = store.playback_queue(row["sat_name"])
    else:
        queue = []
    return SessionContext(bindings=bindings, playback_queue=queue)


@dataclass
class GenerationReport:
    satellite: str
    generated_at: str
    until: str
    sessions: list = field(default_factory=list)      # [{id, type, template, start}]
    diagnostics: list = field(default_factory=list)   # [{template, line, severity, message}]

    def as_dict(self) -> dict:
        return {
            "satellite": self.satellite,
            "generated_at": self.generated_at,
            "until": self.until,
            "sessions": self.sessions,
            "diagnostics": self.diagnostics,
        }


def sessions_for_upload(store: SessionStore, sat_name: str, now: Epoch,
                        until: Epoch) -> list:
    """Confirmed, enabled, non-interfering sessions to put in the next upload."""
    rows = store.list_sessions(t_from=now, t_to=until, sat=sat_name, state="confirmed")
    picked = [r for r in rows if r["enabled"] and not r["interference"]]
    picked.sort(key=lambda r: (r["t_start"], r["id"]))
    return picked


def generate_for_satellite(store: SessionStore, sat_name: str, now: Epoch,
                           until: Epoch, templates=None) -> tuple[CmdFile, GenerationReport]:
    """Render the upload file for one satellite over [now, until].

    Returns the merged CMD file and a report of what went in.  Raises
    :class:`satops.errors.CmdGenerationError` / ``OverlappingSessions`` on
    template failures, with the offending session id attached.
    """
    store.satellite(sat_name)   # NotFound for unknown ids
    templates = templates or load_builtin_templates()
    report = GenerationReport(satellite=sat_name,
                              generated_at=now.round_to_second().isoformat(),
                              until=until.round_to_second().isoformat())
    for name in TEMPLATE_TYPES:
        if name in templates:
            for diag in lint_template(templates[name], CONTEXT_SCHEMA):
                report.diagnostics.append(
                    {"template": name, "line": diag.line,
                     "severity": diag.severity, "message": diag.message})

    rows = sessions_for_upload(store, sat_name, now, until)
    ordered = []
    contexts = {}
    for row in rows:
        ttype = template_type_for_session(store, row)
        ordered.append((row["id"], ttype, Epoch.from_iso(row["t_start"])))
        contexts[row["id"]] = build_session_context(store, row)
        report.sessions.append({
            "id": row["id"], "ses_type": row["ses_type"], "template": ttype,
            "t_start": row["t_start"],
        })
    cmd = generate_cmd_file(ordered, templates, contexts)
    return cmd, report


def cmd_filename(sat_name: str, now: Epoch) -> str:
    stamp = now.round_to_second().to_datetime().strftime("%Y%m%d_%H%M%S")
    return f"CMD_{sat_name}_{stamp}.txt"
