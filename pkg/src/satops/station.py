"""Per-station automation: agendas, antenna schedules, tracking, accounting.

Each ground station pulls its own enabled, non-interfering sessions from
the store, computes an antenna angle table for the pass, simulates the
AOS-to-LOS track (no RF or rotor hardware here; the schedule CSV is the
hardware boundary), records the downlink volume, and after LOS registers
the synced files and frees the played-back memory slots.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .astro.epoch import Epoch
from .astro.propagator import Propagator, Sgp4Propagator
from .astro.tle import OrbitalElements
from .errors import NotFound, StaleElements, SyncBeforeTrackEnd
from .geometry import azel_array
from .models import CommLink, CommLocation
from .passes import ElevationSampler
from .astro.frames import eci_to_ecef_array
from .store.db import SessionStore

DEFAULT_LINK_EFFICIENCY = 0.8


@dataclass(frozen=True)
class AntennaSchedule:
    session_id: int
    step_s: float
    samples: list            # [(Epoch, az_deg_unwrapped, el_deg)]

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["t_utc", "az_deg", "el_deg"])
        for t, az, el in self.samples:
            writer.writerow([t.isoformat(), f"{az:.4f}", f"{el:.4f}"])
        return out.getvalue()


def station_agenda(store: SessionStore, station_name: str, now: Epoch):
    """Upcoming executable sessions for one station, ordered by AOS."""
    store.station(station_name)
    rows = store.list_sessions(ses_type="Comm", loc=station_name, state="confirmed",
                               enabled=True)
    rows = [r for r in rows
            if not r["interference"] and Epoch.from_iso(r["t_los"]) > now]
    rows.sort(key=lambda r: (r["t_aos"], r["id"]))
    return rows


def antenna_schedule(session, elements: OrbitalElements, station: CommLocation,
                     step_s: float = 1.0,
                     propagator_cls: type[Propagator] = Sgp4Propagator) -> AntennaSchedule:
    """Azimuth/elevation samples from AOS to LOS at a fixed step.

    Azimuth is unwrapped (continuous through north crossings) so a rotor
    controller never sees a 360-degree jump mid-pass.
    """
    t_aos = Epoch.from_iso(session["t_aos"]) if isinstance(session["t_aos"], str) \
        else session["t_aos"]
    t_los = Epoch.from_iso(session["t_los"]) if isinstance(session["t_los"], str) \
        else session["t_los"]
    age_days = abs(t_aos.ms - elements.epoch.ms) / 86_400_000.0
    if age_days > 30.0:
        raise StaleElements(f"elements are {age_days:.1f} days old at AOS")

    times_ms = np.arange(float(t_aos.ms), float(t_los.ms) + 1.0, step_s * 1000.0)
    if times_ms[-1] != float(t_los.ms):
        times_ms = np.append(times_ms, float(t_los.ms))
    sampler = ElevationSampler(elements, station.point, propagator_cls)
    r_eci = sampler.positions_eci(times_ms)
    ecef = eci_to_ecef_array(r_eci, 2440587.5 + times_ms / 86400000.0)
    az, el, _ = azel_array(station.point, ecef)

    unwrapped = np.degrees(np.unwrap(np.radians(az)))
    samples = [(Epoch(round(t)), float(a), float(e))
               for t, a, e in zip(times_ms, unwrapped, el)]
    try:
        session_id = session["id"]
    except (KeyError, IndexError):
        session_id = 0
    return AntennaSchedule(session_id=session_id, step_s=step_s, samples=samples)


def tracked_seconds(schedule: AntennaSchedule, min_elevation: float) -> float:
    """Seconds of the pass with the antenna above its elevation mask."""
    total = 0.0
    for (t0, _, el0), (t1, _, el1) in zip(schedule.samples, schedule.samples[1:]):
        if el0 >= min_elevation and el1 >= min_elevation:
            total += t1 - t0
    return total


def run_track(store: SessionStore, session, schedule: AntennaSchedule, link: CommLink,
              station: CommLocation, efficiency: float = DEFAULT_LINK_EFFICIENCY,
              commands_sent: int = 0, playback_addresses: list[str] | None = None) -> int:
    """Simulate one AOS-to-LOS track and persist its downlink record.

    Downlink volume is rate * tracked-seconds * efficiency / 8 bytes; for
    uplink sessions the byte counter holds the number of commands sent.
    Returns the new record id (record starts unsynced).
    """
    seconds = tracked_seconds(schedule, station.min_elevation_mask)
    if link.direction == "down":
        byte_count = int(round(link.rate_bps * seconds * efficiency / 8.0))
    else:
        byte_count = commands_sent
    return store.add_downlink_record(
        session_id=session["id"], sat_name=session["sat_name"],
        station_name=station.name, link_name=link.name, rate_bps=link.rate_bps,
        t_start=Epoch.from_iso(session["t_aos"]), t_end=Epoch.from_iso(session["t_los"]),
        bytes_count=byte_count,
        played_addresses=list(playback_addresses or []))


def sync_after_los(store: SessionStore, record_id: int, now: Epoch) -> dict:
    """Post-LOS file synchronization and address-slot release.

    Builds the file manifest (one file per played-back slot, or a single
    telemetry log), registers it centrally (duplicate names get a content
    hash suffix), marks the record synced, and frees the played slots.
    """
    import json

    record = store.get_downlink_record(record_id)
    t_end = Epoch.from_iso(record["t_end"])
    if t_end > now:
        raise SyncBeforeTrackEnd(f"track ends at {t_end}, now is {now}")
    played = json.loads(record["played_addresses"])
    manifest = []
    if played:
        per_file = record["bytes"] // len(played)
        remainder = record["bytes"] - per_file * (len(played) - 1)
        for k, addr in enumerate(played):
            size = remainder if k == len(played) - 1 else per_file
            manifest.append((f"{record['sat_name']}_{addr}.img", size))
    elif record["bytes"]:
        stamp = Epoch.from_iso(record["t_start"]).to_datetime().strftime("%Y%m%d_%H%M%S")
        manifest.append((f"{record['sat_name']}_{record['link_name']}_{stamp}.tlm",
                         record["bytes"]))
    registered = [(store.register_file(name, size, record["session_id"], now), size)
                  for name, size in manifest]
    if played:
        store.mark_downlinked(record["sat_name"], played)
        store.release_slots(record["sat_name"], played)
    store.update_downlink_record(record_id, synced=1, manifest=json.dumps(registered))
    return {"record_id": record_id, "files": registered, "released": played}


@dataclass
class VolumeReport:
    satellites: list[str]
    stations: list[str]
    cells: dict            # (sat, station) -> bytes

    def total_for_satellite(self, sat: str) -> int:
        return sum(self.cells.get((sat, st), 0) for st in self.stations)

    def total_for_station(self, station: str) -> int:
        return sum(self.cells.get((s, station), 0) for s in self.satellites)

    @property
    def grand_total(self) -> int:
        return sum(self.cells.values())

    def to_csv(self) -> str:
        """Satellites x stations matrix with margin totals, volumes in GB."""
        def gb(n: int) -> str:
            return f"{n / 1e9:.1f}"

        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["satname", *self.stations, "total(/sat)"])
        for sat in self.satellites:
            writer.writerow([sat, *(gb(self.cells.get((sat, st), 0))
                                    for st in self.stations),
                             gb(self.total_for_satellite(sat))])
        writer.writerow(["total(/GRS)", *(gb(self.total_for_station(st))
                                          for st in self.stations), ""])
        return out.getvalue()


def volume_report(store: SessionStore, t_from: Epoch | None = None,
                  t_to: Epoch | None = None) -> VolumeReport:
    """Downlink volume grouped by satellite and station over a period."""
    cells: dict = {}
    sats, stations = set(), set()
    for record in store.downlink_records(t_from, t_to):
        if record["bytes"] <= 0:
            continue
        key = (record["sat_name"], record["station_name"])
        cells[key] = cells.get(key, 0) + record["bytes"]
        sats.add(record["sat_name"])
        stations.add(record["station_name"])
    return VolumeReport(sorted(sats), sorted(stations), cells)


class StationAgent:
    """Single-antenna automation for one station against a simulated clock.

    Polls the store for its agenda, locks each session shortly before AOS
    (operator edits after the lock are rejected), tracks it, and syncs
    after LOS.  Sessions overlapping a track already executed are skipped:
    one antenna, one pass at a time.
    """

    def __init__(self, store: SessionStore, station_name: str,
                 efficiency: float = DEFAULT_LINK_EFFICIENCY,
                 lock_before_aos_s: int = 120, schedule_step_s: float = 1.0):
        self.store = store
        self.station = store.station(station_name)
        self.efficiency = efficiency
        self.lock_before_aos_s = lock_before_aos_s
        self.schedule_step_s = schedule_step_s
        self.executed: list[int] = []

    def run_until(self, start: Epoch, end: Epoch) -> list[dict]:
        """Execute every agenda session with AOS inside [start, end]."""
        results = []
        last_los: Epoch | None = None
        for row in station_agenda(self.store, self.station.name, start):
            t_aos = Epoch.from_iso(row["t_aos"])
            t_los = Epoch.from_iso(row["t_los"])
            if t_aos < start or t_aos >= end:
                continue
            if row["id"] in self.executed:
                continue
            if last_los is not None and t_aos < last_los:
                continue   # single antenna: never two overlapping tracks
            satellite = self.store.satellite(row["sat_name"])
            link = satellite.link(row["link_name"])
            if satellite.tle is None or link is None:
                continue
            self.store.lock_session(row["id"], t_aos + (-self.lock_before_aos_s))
            schedule = antenna_schedule(row, satellite.tle, self.station,
                                        self.schedule_step_s)
            playback = []
            if link.name == "XTLM":
                playback = self.store.playback_queue(row["sat_name"])
            record_id = run_track(self.store, row, schedule, link, self.station,
                                  self.efficiency, playback_addresses=playback)
            sync = sync_after_los(self.store, record_id, t_los + 1.0)
            self.executed.append(row["id"])
            last_los = t_los
            results.append({"session_id": row["id"], "record_id": record_id,
                            "synced": sync})
        return results
