"""Domain records shared by the search layer and the session store.

These are the configuration-level abstractions: satellites with their radio
links and imaging sensors, ground stations, and imaging target locations.
Session rows and requests live in the store module; these records are what
the store is seeded with.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .astro.geodesy import GeodeticPoint
from .astro.tle import OrbitalElements


@dataclass(frozen=True)
class Sensor:
    name: str                      # e.g. HPT, SMI, MFC, WFC
    gsd_m: float
    swath_km: tuple[float, float]  # (along-track, cross-track)
    min_sun_el_deg: float
    spectral: str = ""

    def __post_init__(self):
        if self.gsd_m <= 0:
            raise ValueError("gsd_m must be positive")
        if not 0.0 <= self.min_sun_el_deg <= 90.0:
            raise ValueError("min_sun_el_deg must be within [0, 90]")


@dataclass(frozen=True)
class CommLink:
    name: str                      # UCMD / SCMD / STLM / XTLM
    direction: str                 # "up" | "down"
    rate_bps: float
    band: str = ""

    def __post_init__(self):
        if self.direction not in ("up", "down"):
            raise ValueError("direction must be 'up' or 'down'")
        if self.rate_bps <= 0:
            raise ValueError("rate_bps must be positive")


@dataclass(frozen=True)
class Satellite:
    name: str
    norad_id: str
    tle: OrbitalElements | None
    links: list[CommLink]
    sensors: list[Sensor] = field(default_factory=list)
    priority_class: int = 1

    def __post_init__(self):
        if not self.links:
            raise ValueError("a satellite needs at least one link")

    def sensor(self, name: str) -> Sensor | None:
        return next((s for s in self.sensors if s.name == name), None)

    def link(self, name: str) -> CommLink | None:
        return next((l for l in self.links if l.name == name), None)


@dataclass(frozen=True)
class CommLocation:
    """A ground station."""
    name: str
    point: GeodeticPoint
    utc_offset_hours: float = 0.0
    min_elevation_mask: float = 0.0
    links_supported: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not -12.0 <= self.utc_offset_hours <= 14.0:
            raise ValueError("utc_offset_hours must be within [-12, +14]")


@dataclass(frozen=True)
class CapLocation:
    """An imaging target."""
    name: str
    point: GeodeticPoint
    utc_offset_hours: float = 0.0

    def __post_init__(self):
        if not -12.0 <= self.utc_offset_hours <= 14.0:
            raise ValueError("utc_offset_hours must be within [-12, +14]")


@dataclass(frozen=True)
class RequestTemplate:
    """A predefined imaging-request recipe users pick from."""
    id: str
    name: str
    sensor_name: str
    cmd_template_type: str         # smi_mfc | hpt_mfc
    max_resolution_factor: float = 1.3
    max_cloud_pct: float = 25.0
    require_sat_sunlit: bool = True
