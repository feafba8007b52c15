"""Earth rotation: TEME/ECI <-> ECEF via Greenwich mean sidereal time.

A GMST-only rotation about the pole (no polar motion or nutation), which
is orders of magnitude below the pointing accuracy this system needs.
"""
from __future__ import annotations

import numpy as np

from .epoch import Epoch


def gmst_deg(t: Epoch) -> float:
    """Greenwich mean sidereal time, degrees in [0, 360) (IAU-82 polynomial)."""
    jd = t.jd
    d = jd - 2451545.0
    tc = d / 36525.0
    theta = (280.46061837 + 360.98564736629 * d
             + 0.000387933 * tc * tc - tc * tc * tc / 38710000.0)
    return theta % 360.0


def gmst_rad_array(jd: np.ndarray) -> np.ndarray:
    d = jd - 2451545.0
    tc = d / 36525.0
    theta = (280.46061837 + 360.98564736629 * d
             + 0.000387933 * tc * tc - tc * tc * tc / 38710000.0)
    return np.deg2rad(theta % 360.0)


def eci_to_ecef(r_eci, t: Epoch):
    """Rotate an inertial vector into the Earth-fixed frame at ``t``."""
    theta = np.deg2rad(gmst_deg(t))
    return _rotate_z(np.asarray(r_eci, dtype=np.float64), theta)


def ecef_to_eci(r_ecef, t: Epoch):
    theta = np.deg2rad(gmst_deg(t))
    return _rotate_z(np.asarray(r_ecef, dtype=np.float64), -theta)


def _rotate_z(r, theta):
    c, s = np.cos(theta), np.sin(theta)
    x = c * r[..., 0] + s * r[..., 1]
    y = -s * r[..., 0] + c * r[..., 1]
    return np.stack([x, y, r[..., 2]], axis=-1)


def eci_to_ecef_array(r_eci: np.ndarray, jd: np.ndarray) -> np.ndarray:
    """Vectorized rotation for N positions at N instants (shapes (N,3), (N,))."""
    theta = gmst_rad_array(jd)
    c, s = np.cos(theta), np.sin(theta)
    x = c * r_eci[:, 0] + s * r_eci[:, 1]
    y = -s * r_eci[:, 0] + c * r_eci[:, 1]
    return np.stack([x, y, r_eci[:, 2]], axis=-1)
