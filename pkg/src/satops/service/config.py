"""Service configuration: bootstrap data, tokens, tunables.

A single YAML file declares the fleet (satellites, links, sensors), the
ground segment (stations, targets), request templates, auth tokens, and
numeric defaults.  Environment variables override the port, tokens, and
forecast endpoint so deployments never edit the file for secrets.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import yaml

from ..astro.epoch import Epoch
from ..astro.tle import parse_tle, read_tle_file
from ..errors import NotFound
from ..astro.geodesy import GeodeticPoint
from ..models import CapLocation, CommLink, CommLocation, RequestTemplate, Satellite, Sensor
from ..store.db import SessionStore
from ..store.lifecycle import PlanningPolicy


@dataclass(frozen=True)
class TokenEntry:
    token: str
    principal: str
    role: str                  # operator | data_user

    def __post_init__(self):
        if self.role not in ("operator", "data_user"):
            raise ValueError(f"unknown role {self.role!r}")


@dataclass(frozen=True)
class ForecastConfig:
    provider: str = "none"     # none | static | file | http
    value: float = 0.0         # static provider
    path: str = ""             # file provider
    url: str = ""              # http provider
    timeout_s: float = 2.0


@dataclass
class ServiceConfig:
    store_path: str = ":memory:"
    port: int = 8000
    tokens: list[TokenEntry] = field(default_factory=list)
    policy: PlanningPolicy = field(default_factory=PlanningPolicy)
    link_efficiency: float = 0.8
    schedule_step_s: float = 1.0
    forecast: ForecastConfig = field(default_factory=ForecastConfig)
    satellites: list[Satellite] = field(default_factory=list)
    stations: list[CommLocation] = field(default_factory=list)
    targets: list[CapLocation] = field(default_factory=list)
    request_templates: list[RequestTemplate] = field(default_factory=list)

    def __post_init__(self):
        if self.policy.horizon_days * 24.0 < self.policy.request_max_lead_h:
            raise ValueError("registration horizon must cover the request window")


def _load_satellite(entry: dict, base_dir: str) -> Satellite:
    tle = None
    if "tle" in entry:
        tle = parse_tle("\n".join(entry["tle"]))
    elif "tle_file" in entry:
        path = os.path.join(base_dir, entry["tle_file"])
        with open(path, encoding="utf-8") as f:
            sets = read_tle_file(f.read())
        tle = sets[0]
    links = [CommLink(l["name"], l["direction"], float(l["rate_bps"]), l.get("band", ""))
             for l in entry.get("links", [])]
    sensors = [Sensor(s["name"], float(s["gsd_m"]),
                      (float(s["swath_km"][0]), float(s["swath_km"][1])),
                      float(s["min_sun_el_deg"]), s.get("spectral", ""))
               for s in entry.get("sensors", [])]
    return Satellite(name=entry["name"], norad_id=str(entry.get("norad_id", "")),
                     tle=tle, links=links, sensors=sensors,
                     priority_class=int(entry.get("priority", 1)))


def load_config(path: str) -> ServiceConfig:
    with open(path, encoding="utf-8") as f:
        raw = yaml.safe_load(f) or {}
    base_dir = os.path.dirname(os.path.abspath(path))
    defaults = raw.get("defaults", {})
    policy = PlanningPolicy(
        horizon_days=float(defaults.get("horizon_days", 7)),
        setup_s=int(defaults.get("setup_s", 60)),
        teardown_s=int(defaults.get("teardown_s", 60)),
        comm_lead_s=int(defaults.get("comm_lead_s", 120)),
        comm_lag_s=int(defaults.get("comm_lag_s", 60)),
        capture_lead_s=int(defaults.get("capture_lead_s", 300)),
        capture_lag_s=int(defaults.get("capture_lag_s", 300)),
        slots_per_capture=int(defaults.get("slots_per_capture", 4)),
        request_min_lead_h=float(defaults.get("request_min_lead_h", 1)),
        request_max_lead_h=float(defaults.get("request_max_lead_h", 12)),
    )
    forecast_raw = raw.get("forecast", {})
    forecast = ForecastConfig(
        provider=forecast_raw.get("provider", "none"),
        value=float(forecast_raw.get("value", 0.0)),
        path=(os.path.join(base_dir, forecast_raw["path"])
              if forecast_raw.get("path") else ""),
        url=forecast_raw.get("url", ""),
        timeout_s=float(forecast_raw.get("timeout_s", 2.0)),
    )

    config = ServiceConfig(
        store_path=(os.path.join(base_dir, raw["store"]) if raw.get("store")
                    and raw["store"] != ":memory:" else raw.get("store", ":memory:")),
        port=int(raw.get("port", 8000)),
        tokens=[TokenEntry(t["token"], t["principal"], t["role"])
                for t in raw.get("tokens", [])],
        policy=policy,
        link_efficiency=float(defaults.get("link_efficiency", 0.8)),
        schedule_step_s=float(defaults.get("schedule_step_s", 1.0)),
        forecast=forecast,
        satellites=[_load_satellite(s, base_dir) for s in raw.get("satellites", [])],
        stations=[CommLocation(
            s["name"], GeodeticPoint(float(s["lat"]), float(s["lon"]),
                                     float(s.get("alt_m", 0.0))),
            float(s.get("utc_offset_hours", 0.0)),
            float(s.get("min_elevation_mask", 0.0)),
            list(s.get("links", []))) for s in raw.get("stations", [])],
        targets=[CapLocation(
            t["name"], GeodeticPoint(float(t["lat"]), float(t["lon"]),
                                     float(t.get("alt_m", 0.0))),
            float(t.get("utc_offset_hours", 0.0))) for t in raw.get("targets", [])],
        request_templates=[RequestTemplate(
            id=t["id"], name=t.get("name", t["id"]), sensor_name=t["sensor"],
            cmd_template_type=t["cmd_template"],
            max_resolution_factor=float(t.get("max_resolution_factor", 1.3)),
            max_cloud_pct=float(t.get("max_cloud_pct", 25.0)),
            require_sat_sunlit=bool(t.get("require_sunlit", True)))
            for t in raw.get("request_templates", [])],
    )
    return apply_env_overrides(config)


def apply_env_overrides(config: ServiceConfig, env=None) -> ServiceConfig:
    env = os.environ if env is None else env
    if env.get("SATOPS_PORT"):
        config.port = int(env["SATOPS_PORT"])
    if env.get("SATOPS_FORECAST_URL"):
        config.forecast = ForecastConfig(provider="http", url=env["SATOPS_FORECAST_URL"],
                                         timeout_s=config.forecast.timeout_s)
    if env.get("SATOPS_TOKENS"):
        entries = []
        for chunk in env["SATOPS_TOKENS"].split(","):
            token, principal, role = chunk.strip().split(":")
            entries.append(TokenEntry(token, principal, role))
        config.tokens = entries
    return config


def bootstrap_store(store: SessionStore, config: ServiceConfig):
    """Seed the model tables from configuration (idempotent upserts)."""
    for sat in config.satellites:
        store.upsert_satellite(sat)
    for station in config.stations:
        store.upsert_station(station)
    for target in config.targets:
        store.upsert_target(target)
    for template in config.request_templates:
        store.upsert_request_template(template)


def ingest_tle_text(store: SessionStore, text: str, now: Epoch) -> list[dict]:
    """Per-set TLE ingestion: match by catalog number, then by name line."""
    lines = [ln.rstrip("\r") for ln in text.splitlines() if ln.strip()]
    known = {s.norad_id: s.name for s in store.satellites() if s.norad_id}
    names = {s.name for s in store.satellites()}
    results = []
    i = 0
    pending_name = ""
    while i < len(lines):
        line = lines[i]
        if line.startswith("1 ") and i + 1 < len(lines) and lines[i + 1].startswith("2 "):
            try:
                elements = parse_tle(line + "\n" + lines[i + 1])
            except Exception as exc:
                results.append({"accepted": False, "line1": line,
                                "error": getattr(exc, "code", type(exc).__name__),
                                "message": str(exc)})
                pending_name = ""
                i += 2
                continue
            sat_name = known.get(elements.satellite_id.lstrip("0") or "0",
                                 known.get(elements.satellite_id))
            if sat_name is None and pending_name in names:
                sat_name = pending_name
            if sat_name is None:
                results.append({"accepted": False, "line1": line,
                                "error": "UnknownSatellite",
                                "message": f"no satellite with catalog id "
                                           f"{elements.satellite_id!r}"})
            else:
                store.set_tle(sat_name, elements, now)
                results.append({"accepted": True, "satellite": sat_name,
                                "epoch": elements.epoch.round_to_second().isoformat()})
            pending_name = ""
            i += 2
        else:
            pending_name = line.strip().removeprefix("0 ").strip()
            i += 1
    if not results:
        raise NotFound("no element sets found in the submitted text")
    return results
