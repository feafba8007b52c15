"""Session-list CSV export.

Fixed external schema: comm rows populate beam/t_start_utc/enabled/priority,
capture rows populate loc_t_mel_utc/loc_t_mel_local/m_el_deg, and each kind
leaves the other's columns empty.  Timestamps are YYYY/MM/DD hh:mm:ss.
"""
from __future__ import annotations

import csv
import io

from ..astro.epoch import Epoch

SESSION_CSV_HEADER = ("ses_type_ope,sat_name,loc_name,beam,t_start_utc,"
                      "loc_t_mel_utc,loc_t_mel_local,m_el_deg,enabled,priority")


def _csv_time(iso_text: str | None) -> str:
    return "" if not iso_text else Epoch.from_iso(iso_text).csvformat()


def beam_label(row) -> str:
    """Link name, suffixed '-dis' while the session is disabled."""
    base = row["link_name"] or ""
    if base and not row["enabled"]:
        return base + "-dis"
    return base


def session_rows_to_csv(rows) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SESSION_CSV_HEADER.split(","))
    for row in rows:
        if row["ses_type"] == "Comm":
            writer.writerow([
                "Comm", row["sat_name"], row["loc_name"], beam_label(row),
                _csv_time(row["t_start"]), "", "", "",
                str(int(row["enabled"])), str(row["priority"]),
            ])
        else:
            writer.writerow([
                "Capture", row["sat_name"], row["loc_name"], "", "",
                _csv_time(row["t_mel"]), _csv_time(row["local_clock"]),
                f"{row['max_el']:.3f}", "", "",
            ])
    return out.getvalue()
