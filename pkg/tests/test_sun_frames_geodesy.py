import math
import random

import numpy as np
import pytest

from satops.astro import (
    Epoch,
    GeodeticPoint,
    ecef_to_eci,
    ecef_to_geodetic,
    eci_to_ecef,
    geodetic_to_ecef,
    gmst_deg,
    sun_direction,
)
from satops.errors import OriginPoint, OutOfEphemerisRange


# --- independent almanac oracle (different series than the implementation) ---

def meeus_sun_unit(t: Epoch):
    """Apparent solar direction from the classic polynomial series."""
    T = (t.jd - 2451545.0) / 36525.0
    L0 = 280.46646 + 36000.76983 * T + 0.0003032 * T * T
    M = math.radians(357.52911 + 35999.05029 * T - 0.0001537 * T * T)
    C = ((1.914602 - 0.004817 * T - 0.000014 * T * T) * math.sin(M)
         + (0.019993 - 0.000101 * T) * math.sin(2 * M)
         + 0.000289 * math.sin(3 * M))
    omega = math.radians(125.04 - 1934.136 * T)
    lon = math.radians(L0 + C - 0.00569 - 0.00478 * math.sin(omega))
    eps = math.radians(23.43929111 - 0.01300417 * T + 0.00256 * math.cos(omega))
    return np.array([math.cos(lon),
                     math.cos(eps) * math.sin(lon),
                     math.sin(eps) * math.sin(lon)])


def gmst_seconds_form_deg(t: Epoch) -> float:
    """Sidereal time via the seconds-of-UT1 polynomial (independent form)."""
    tut1 = (t.jd - 2451545.0) / 36525.0
    sec = (-6.2e-6 * tut1**3 + 0.093104 * tut1**2
           + (876600.0 * 3600 + 8640184.812866) * tut1 + 67310.54841)
    return (sec / 240.0) % 360.0


def test_sun_near_march_equinox_low_declination():
    u, _ = sun_direction(Epoch.from_iso("2021-03-20T09:37:00Z"))
    decl = math.degrees(math.asin(u[2]))
    assert abs(decl) < 0.5


def test_sun_near_june_solstice_declination():
    u, _ = sun_direction(Epoch.from_iso("2021-06-21T03:32:00Z"))
    decl = math.degrees(math.asin(u[2]))
    assert decl == pytest.approx(23.44, abs=0.1)


def test_sun_against_independent_almanac():
    rng = random.Random(11)
    t0 = Epoch.from_iso("1995-01-01T00:00:00Z")
    for _ in range(300):
        t = t0 + rng.uniform(0, 60 * 365.25 * 86400)
        u, dist = sun_direction(t)
        angle = math.degrees(math.acos(np.clip(np.dot(u, meeus_sun_unit(t)), -1, 1)))
        assert angle <= 0.05, f"{t}: {angle:.4f} deg"
        assert 0.98 < dist < 1.02


def test_sun_unit_norm():
    rng = random.Random(5)
    t0 = Epoch.from_iso("2000-01-01T00:00:00Z")
    for _ in range(100):
        u, _ = sun_direction(t0 + rng.uniform(0, 50 * 365 * 86400))
        assert abs(np.linalg.norm(u) - 1.0) < 1e-12


def test_sun_range_limits():
    with pytest.raises(OutOfEphemerisRange):
        sun_direction(Epoch.from_iso("1989-12-31T23:59:59Z"))
    with pytest.raises(OutOfEphemerisRange):
        sun_direction(Epoch.from_iso("2061-01-01T00:00:01Z"))


def test_gmst_matches_independent_evaluation():
    rng = random.Random(3)
    t0 = Epoch.from_iso("1995-01-01T00:00:00Z")
    for _ in range(200):
        t = t0 + rng.uniform(0, 40 * 365.25 * 86400)
        delta = abs(gmst_deg(t) - gmst_seconds_form_deg(t))
        assert min(delta, 360 - delta) < 0.01


def test_greenwich_meridian_vector_maps_to_x_axis():
    t = Epoch.from_iso("2021-05-11T00:00:00Z")
    theta = math.radians(gmst_deg(t))
    r_eci = np.array([7000.0 * math.cos(theta), 7000.0 * math.sin(theta), 0.0])
    r_ecef = eci_to_ecef(r_eci, t)
    assert r_ecef[0] == pytest.approx(7000.0, abs=1e-6)
    assert abs(r_ecef[1]) < 1e-6


def test_rotation_preserves_norm():
    rng = random.Random(17)
    t = Epoch.from_iso("2021-05-11T12:00:00Z")
    for _ in range(1000):
        r = np.array([rng.uniform(-1e4, 1e4) for _ in range(3)])
        out = eci_to_ecef(r, t)
        assert abs(np.linalg.norm(out) - np.linalg.norm(r)) <= 1e-9 * np.linalg.norm(r)


def test_rotation_round_trip_identity():
    rng = random.Random(23)
    t = Epoch.from_iso("2030-01-02T03:04:05Z")
    for _ in range(50):
        r = np.array([rng.uniform(-1e4, 1e4) for _ in range(3)])
        back = ecef_to_eci(eci_to_ecef(r, t), t)
        assert np.linalg.norm(back - r) < 1e-6


def test_equator_prime_meridian_point():
    p = ecef_to_geodetic(np.array([6378.137, 0.0, 0.0]))
    assert p.latitude == pytest.approx(0.0, abs=1e-9)
    assert p.longitude == pytest.approx(0.0, abs=1e-9)
    assert abs(p.altitude) < 1.0


def test_polar_axis_point():
    p = ecef_to_geodetic(np.array([0.0, 0.0, 6356.752]))
    assert p.latitude == pytest.approx(90.0, abs=1e-6)
    assert abs(p.altitude) < 1.0
    p = ecef_to_geodetic(np.array([0.0, 0.0, -6356.752]))
    assert p.latitude == pytest.approx(-90.0, abs=1e-6)


def test_geodetic_round_trip_under_1m():
    rng = random.Random(31)
    cases = [GeodeticPoint(45.0, 45.0, 0.0)]
    cases += [GeodeticPoint(rng.uniform(-89.9, 89.9), rng.uniform(-179.9, 180.0),
                            rng.uniform(-100, 600_000)) for _ in range(200)]
    for p in cases:
        q = ecef_to_geodetic(geodetic_to_ecef(p))
        dist = np.linalg.norm(geodetic_to_ecef(q) - geodetic_to_ecef(p)) * 1000.0
        assert dist < 1.0, f"{p}: {dist:.3f} m"


def test_origin_rejected():
    with pytest.raises(OriginPoint):
        ecef_to_geodetic(np.zeros(3))
