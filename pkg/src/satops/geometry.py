"""Instantaneous geometry between a satellite, a ground point, and the Sun.

Azimuth/elevation/range in the local horizon frame, the cylindrical-shadow
sunlit test, solar elevation at a site, the orbital-plane solar angle, mean
local solar time, and the off-nadir pointing numbers (roll angle and
resolution factor) that gate imaging.

Everything here is pure and stateless.  "Nadir" means the ellipsoid-normal
down direction at the sub-satellite point, so that a target at the
sub-satellite point gives exactly roll 0, elevation 90, factor 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .astro.epoch import Epoch
from .astro.frames import eci_to_ecef
from .astro.geodesy import (
    GeodeticPoint,
    ecef_to_geodetic,
    ellipsoid_normal,
    geodetic_to_ecef,
)
from .astro.propagator import StateVector
from .astro.sun import sun_direction
from .astro.tle import OrbitalElements

EARTH_SHADOW_RADIUS_KM = 6378.137


@dataclass(frozen=True)
class Topocentric:
    azimuth: float     # deg [0, 360), clockwise from north
    elevation: float   # deg [-90, 90]
    range_km: float


@dataclass(frozen=True)
class IlluminationState:
    sat_sunlit: bool
    sun_el_deg: float
    orb_sun_deg: float
    local_solar_time: float      # decimal hours [0, 24)
    local_clock_time: Epoch      # site UTC offset applied


@dataclass(frozen=True)
class PointingGeometry:
    roll_deg: float
    elevation_at_target: float
    resolution_factor: float     # >= 1 when valid; nan when target below horizon
    target_visible: bool


def _enu_basis(site: GeodeticPoint):
    lat = math.radians(site.latitude)
    lon = math.radians(site.longitude)
    east = np.array([-math.sin(lon), math.cos(lon), 0.0])
    north = np.array([-math.sin(lat) * math.cos(lon),
                      -math.sin(lat) * math.sin(lon),
                      math.cos(lat)])
    up = np.array([math.cos(lat) * math.cos(lon),
                   math.cos(lat) * math.sin(lon),
                   math.sin(lat)])
    return east, north, up


def topocentric(site: GeodeticPoint, sat_ecef) -> Topocentric:
    """Local-horizon look angles from ``site`` to an ECEF position (km)."""
    east, north, up = _enu_basis(site)
    rho = np.asarray(sat_ecef, dtype=float) - geodetic_to_ecef(site)
    e, n, u = rho @ east, rho @ north, rho @ up
    rng = math.sqrt(e * e + n * n + u * u)
    az = math.degrees(math.atan2(e, n)) % 360.0
    el = math.degrees(math.asin(min(max(u / rng, -1.0), 1.0)))
    return Topocentric(az, el, rng)


def elevation_array(site: GeodeticPoint, sat_ecef: np.ndarray) -> np.ndarray:
    """Elevation only, vectorized over an (N, 3) array of ECEF positions."""
    _, _, up = _enu_basis(site)
    rho = sat_ecef - geodetic_to_ecef(site)
    u = rho @ up
    rng = np.linalg.norm(rho, axis=-1)
    return np.degrees(np.arcsin(np.clip(u / rng, -1.0, 1.0)))


def azel_array(site: GeodeticPoint, sat_ecef: np.ndarray):
    east, north, up = _enu_basis(site)
    rho = sat_ecef - geodetic_to_ecef(site)
    e, n, u = rho @ east, rho @ north, rho @ up
    rng = np.linalg.norm(rho, axis=-1)
    az = np.degrees(np.arctan2(e, n)) % 360.0
    el = np.degrees(np.arcsin(np.clip(u / rng, -1.0, 1.0)))
    return az, el, rng


def is_sunlit(sat_position_eci, sun_dir) -> bool:
    """Cylindrical Earth-shadow test.

    Dark iff the satellite sits behind the terminator plane (negative
    component along the sun line) and within one equatorial radius of the
    shadow axis.
    """
    r = np.asarray(sat_position_eci, dtype=float)
    s = np.asarray(sun_dir, dtype=float)
    along = r @ s
    if along >= 0.0:
        return True
    off_axis = math.sqrt(max(float(r @ r) - along * along, 0.0))
    return off_axis >= EARTH_SHADOW_RADIUS_KM


def solar_elevation(site: GeodeticPoint, t: Epoch) -> float:
    """Geometric solar elevation at the site, degrees (no refraction)."""
    sun_eci, _ = sun_direction(t)
    sun_ecef = eci_to_ecef(sun_eci, t)
    _, _, up = _enu_basis(site)
    return math.degrees(math.asin(float(np.clip(sun_ecef @ up, -1.0, 1.0))))


def beta_angle(elements: OrbitalElements, t: Epoch) -> float:
    """Elevation of the Sun above the orbital plane, degrees in [-90, 90]."""
    i = math.radians(elements.inclination)
    raan = math.radians(elements.raan)
    normal = np.array([math.sin(i) * math.sin(raan),
                       -math.sin(i) * math.cos(raan),
                       math.cos(i)])
    sun, _ = sun_direction(t)
    return math.degrees(math.asin(float(np.clip(normal @ sun, -1.0, 1.0))))


def local_solar_time(longitude: float, t: Epoch) -> float:
    """Mean local solar time in decimal hours, [0, 24)."""
    return (t.utc_hours() + longitude / 15.0) % 24.0


def local_clock_time(t: Epoch, utc_offset_hours: float) -> Epoch:
    return t + utc_offset_hours * 3600.0


def pointing_geometry(sat_state: StateVector, target: GeodeticPoint) -> PointingGeometry:
    """Roll angle, target elevation, and resolution factor for one geometry.

    resolution factor = (slant range / altitude) / sin(target elevation):
    1.0 at nadir, growing with both slant range and incidence off-nadir.
    When the satellite is below the target's horizon the factor is
    meaningless and reported as nan with ``target_visible`` False.
    """
    sat_ecef = eci_to_ecef(sat_state.position, sat_state.epoch)
    subpoint = ecef_to_geodetic(sat_ecef)
    altitude_km = subpoint.altitude / 1000.0
    nadir = -ellipsoid_normal(subpoint)

    target_ecef = geodetic_to_ecef(target)
    to_target = target_ecef - sat_ecef
    slant_km = float(np.linalg.norm(to_target))
    to_target /= slant_km
    roll = math.degrees(math.acos(float(np.clip(to_target @ nadir, -1.0, 1.0))))

    look = topocentric(target, sat_ecef)
    visible = look.elevation > 0.0
    if visible:
        factor = (slant_km / altitude_km) / math.sin(math.radians(look.elevation))
    else:
        factor = math.nan
    return PointingGeometry(roll, look.elevation, factor, visible)


def illumination(sat_state: StateVector, site: GeodeticPoint,
                 elements: OrbitalElements, utc_offset_hours: float = 0.0) -> IlluminationState:
    """The full illumination record the session database stores."""
    t = sat_state.epoch
    sun_eci, _ = sun_direction(t)
    return IlluminationState(
        sat_sunlit=is_sunlit(sat_state.position, sun_eci),
        sun_el_deg=solar_elevation(site, t),
        orb_sun_deg=beta_angle(elements, t),
        local_solar_time=local_solar_time(site.longitude, t),
        local_clock_time=local_clock_time(t, utc_offset_hours),
    )


__all__ = [
    "IlluminationState",
    "PointingGeometry",
    "Topocentric",
    "azel_array",
    "beta_angle",
    "elevation_array",
    "illumination",
    "is_sunlit",
    "local_clock_time",
    "local_solar_time",
    "pointing_geometry",
    "solar_elevation",
    "topocentric",
]
