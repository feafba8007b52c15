"""WGS-84 geodetic coordinates and their Cartesian (ECEF) forms."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import OriginPoint

WGS84_A_KM = 6378.137
WGS84_F = 1.0 / 298.257223563
WGS84_B_KM = WGS84_A_KM * (1.0 - WGS84_F)
_E2 = WGS84_F * (2.0 - WGS84_F)


@dataclass(frozen=True)
class GeodeticPoint:
    latitude: float    # deg, [-90, 90]
    longitude: float   # deg, (-180, 180]
    altitude: float    # m above the WGS-84 ellipsoid

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 < self.longitude <= 180.0:
            raise ValueError(f"longitude {self.longitude} outside (-180, 180]")


def geodetic_to_ecef(point: GeodeticPoint) -> np.ndarray:
    """ECEF position in km."""
    lat = math.radians(point.latitude)
    lon = math.radians(point.longitude)
    alt_km = point.altitude / 1000.0
    n = WGS84_A_KM / math.sqrt(1.0 - _E2 * math.sin(lat) ** 2)
    x = (n + alt_km) * math.cos(lat) * math.cos(lon)
    y = (n + alt_km) * math.cos(lat) * math.sin(lon)
    z = (n * (1.0 - _E2) + alt_km) * math.sin(lat)
    return np.array([x, y, z])


def ecef_to_geodetic(r_ecef) -> GeodeticPoint:
    """Latitude/longitude/altitude by Bowring's method plus fixed-point polish.

    Round-trips with :func:`geodetic_to_ecef` to well under a meter.
    """
    x, y, z = (float(c) for c in r_ecef)
    if x == 0.0 and y == 0.0 and z == 0.0:
        raise OriginPoint("cannot convert the origin to geodetic coordinates")
    lon = math.degrees(math.atan2(y, x))
    if lon <= -180.0:
        lon += 360.0
    p = math.hypot(x, y)
    if p < 1e-9:  # on the polar axis the latitude is exact
        lat = math.copysign(90.0, z)
        alt_km = abs(z) - WGS84_B_KM
        return GeodeticPoint(lat, lon, alt_km * 1000.0)

    ep2 = _E2 / (1.0 - _E2)
    theta = math.atan2(z * WGS84_A_KM, p * WGS84_B_KM)
    lat = math.atan2(z + ep2 * WGS84_B_KM * math.sin(theta) ** 3,
                     p - _E2 * WGS84_A_KM * math.cos(theta) ** 3)
    for _ in range(3):
        n = WGS84_A_KM / math.sqrt(1.0 - _E2 * math.sin(lat) ** 2)
        alt_km = p / math.cos(lat) - n
        lat = math.atan2(z, p * (1.0 - _E2 * n / (n + alt_km)))
    n = WGS84_A_KM / math.sqrt(1.0 - _E2 * math.sin(lat) ** 2)
    alt_km = p / math.cos(lat) - n
    return GeodeticPoint(math.degrees(lat), lon, alt_km * 1000.0)


def ellipsoid_normal(point: GeodeticPoint) -> np.ndarray:
    """Unit outward normal of the ellipsoid (the local geodetic 'up')."""
    lat = math.radians(point.latitude)
    lon = math.radians(point.longitude)
    return np.array([math.cos(lat) * math.cos(lon),
                     math.cos(lat) * math.sin(lon),
                     math.sin(lat)])
