"""Low-precision solar ephemeris.

The standard almanac series for the Sun's ecliptic longitude (two terms of
the equation of center), good to about 0.01 degrees over 1990-2060 -- far
inside the 0.05 degree budget the illumination checks need.  Coordinates
are mean equinox of date, which is what the TEME propagation frame expects.
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import OutOfEphemerisRange
from .epoch import Epoch

_YEAR_MIN = Epoch.from_iso("1990-01-01T00:00:00Z")
_YEAR_MAX = Epoch.from_iso("2061-01-01T00:00:00Z")


def sun_direction(t: Epoch) -> tuple[np.ndarray, float]:
    """Unit vector toward the Sun (inertial, of-date) and distance in AU."""
    if not _YEAR_MIN <= t < _YEAR_MAX:
        raise OutOfEphemerisRange(f"{t} outside the 1990-2060 almanac range")
    u, dist = _sun_arrays(np.array([t.jd]))
    return u[0], float(dist[0])


def _sun_arrays(jd: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = jd - 2451545.0
    mean_lon = np.deg2rad((280.460 + 0.9856474 * n) % 360.0)
    mean_anom = np.deg2rad((357.528 + 0.9856003 * n) % 360.0)
    ecl_lon = mean_lon + np.deg2rad(1.915) * np.sin(mean_anom) \
        + np.deg2rad(0.020) * np.sin(2.0 * mean_anom)
    obliq = np.deg2rad(23.439 - 0.0000004 * n)
    x = np.cos(ecl_lon)
    y = np.cos(obliq) * np.sin(ecl_lon)
    z = np.sin(obliq) * np.sin(ecl_lon)
    u = np.stack([x, y, z], axis=-1)
    u /= np.linalg.norm(u, axis=-1, keepdims=True)
    dist = 1.00014 - 0.01671 * np.cos(mean_anom) - 0.00014 * np.cos(2.0 * mean_anom)
    return u, dist


def sun_declination_deg(t: Epoch) -> float:
    u, _ = sun_direction(t)
    return math.degrees(math.asin(u[2]))
