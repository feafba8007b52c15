"""Time, TLE, propagation, solar ephemeris, and coordinate transforms."""

from .epoch import Epoch
from .frames import ecef_to_eci, eci_to_ecef, gmst_deg
from .geodesy import GeodeticPoint, ecef_to_geodetic, geodetic_to_ecef
from .propagator import (
    J2Propagator,
    Propagator,
    Sgp4Propagator,
    StateVector,
    propagate,
)
from .sgp4 import WGS72, WGS84, GravityModel, Sgp4Model
from .sun import sun_direction
from .tle import OrbitalElements, checksum, format_tle, parse_tle, read_tle_file

__all__ = [
    "Epoch",
    "GeodeticPoint",
    "GravityModel",
    "J2Propagator",
    "OrbitalElements",
    "Propagator",
    "Sgp4Model",
    "Sgp4Propagator",
    "StateVector",
    "WGS72",
    "WGS84",
    "checksum",
    "ecef_to_eci",
    "ecef_to_geodetic",
    "eci_to_ecef",
    "format_tle",
    "geodetic_to_ecef",
    "gmst_deg",
    "parse_tle",
    "propagate",
    "read_tle_file",
    "sun_direction",
]
