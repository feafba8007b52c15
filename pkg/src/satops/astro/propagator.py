"""Propagator facade over the analytic models.

``propagate`` is the entry point the rest of the system uses; it enforces
the 30-day element freshness horizon and the 100 km minimum-perigee rule,
and is deterministic for identical inputs.  The interface admits multiple
backends: the full SGP4 model and a two-body+J2 fallback that doubles as
an independent cross-check in tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DecayedOrbit, StaleElements
from .epoch import Epoch
from .sgp4 import WGS72, Sgp4Model
from .tle import OrbitalElements

MAX_ELEMENT_AGE_DAYS = 30.0
MIN_PERIGEE_RADIUS_KM = 6378.137 + 100.0


@dataclass(frozen=True)
class StateVector:
    epoch: Epoch
    position: np.ndarray   # km, TEME
    velocity: np.ndarray   # km/s, TEME


class Propagator:
    """Common contract: state at a UTC instant from one element set."""

    def __init__(self, elements: OrbitalElements):
        self.elements = elements

    def state(self, t: Epoch) -> StateVector:
        r, v = self.state_arrays(np.array([(t.ms - self.elements.epoch.ms) / 60000.0]))
        return StateVector(t, r[0], v[0])

    def state_arrays(self, tsince_min: np.ndarray):
        raise NotImplementedError


class Sgp4Propagator(Propagator):
    def __init__(self, elements: OrbitalElements, gravity=WGS72):
        super().__init__(elements)
        self._model = Sgp4Model(elements, gravity)

    def state_arrays(self, tsince_min: np.ndarray):
        r, v = self._model.propagate(tsince_min)
        radii = np.linalg.norm(r, axis=-1)
        if np.any(radii < MIN_PERIGEE_RADIUS_KM):
            raise DecayedOrbit(
                f"radius {radii.min():.1f} km is below the 100 km altitude floor"
            )
        return r, v


class J2Propagator(Propagator):
    """Keplerian motion with secular J2 rates on RAAN, perigee, and anomaly.

    No drag, no periodics: a cross-check model, not a flight model.
    """

    MU = 398600.8          # km^3/s^2, matching the WGS-72 base of the TLEs
    RE = 6378.135
    J2 = 0.001082616

    def __init__(self, elements: OrbitalElements):
        super().__init__(elements)
        n_rad_s = elements.mean_motion * 2.0 * math.pi / 86400.0
        self.a = (self.MU / n_rad_s ** 2) ** (1.0 / 3.0)
        self.n = n_rad_s
        i = math.radians(elements.inclination)
        e = elements.eccentricity
        p = self.a * (1.0 - e * e)
        base = 1.5 * self.J2 * (self.RE / p) ** 2 * self.n
        self.raan_dot = -base * math.cos(i)
        self.argp_dot = base * (2.0 - 2.5 * math.sin(i) ** 2)
        self.m_dot = self.n + base * math.sqrt(1.0 - e * e) * (1.0 - 1.5 * math.sin(i) ** 2)

    def state_arrays(self, tsince_min: np.ndarray):
        el = self.elements
        t = np.asarray(tsince_min, dtype=np.float64) * 60.0
        e = el.eccentricity
        i = math.radians(el.inclination)
        raan = math.radians(el.raan) + self.raan_dot * t
        argp = math.radians(el.arg_perigee) + self.argp_dot * t
        m = math.radians(el.mean_anomaly) + self.m_dot * t

        ecc_anom = m.copy()
        for _ in range(12):
            ecc_anom = ecc_anom - (ecc_anom - e * np.sin(ecc_anom) - m) / (1.0 - e * np.cos(ecc_anom))
        nu = 2.0 * np.arctan2(np.sqrt(1.0 + e) * np.sin(ecc_anom / 2.0),
                              np.sqrt(1.0 - e) * np.cos(ecc_anom / 2.0))
        r_mag = self.a * (1.0 - e * np.cos(ecc_anom))

        u = argp + nu
        cos_raan, sin_raan = np.cos(raan), np.sin(raan)
        cos_u, sin_u = np.cos(u), np.sin(u)
        cos_i, sin_i = math.cos(i), math.sin(i)
        r = np.stack([
            r_mag * (cos_raan * cos_u - sin_raan * sin_u * cos_i),
            r_mag * (sin_raan * cos_u + cos_raan * sin_u * cos_i),
            r_mag * sin_u * sin_i,
        ], axis=-1)

        p = self.a * (1.0 - e * e)
        h = math.sqrt(self.MU * p)
        vr = self.MU / h * e * np.sin(nu)
        vt = self.MU / h * (1.0 + e * np.cos(nu))
        r_hat = r / r_mag[..., None]
        t_hat = np.stack([
            -(cos_raan * sin_u + sin_raan * cos_u * cos_i),
            -(sin_raan * sin_u - cos_raan * cos_u * cos_i),
            cos_u * sin_i,
        ], axis=-1)
        v = vr[..., None] * r_hat + vt[..., None] * t_hat
        return r, v


def propagate(elements: OrbitalElements, t: Epoch,
              propagator_cls: type[Propagator] = Sgp4Propagator) -> StateVector:
    """State vector at ``t``; elements must be fresh within 30 days."""
    age_days = abs(t.ms - elements.epoch.ms) / 86_400_000.0
    if age_days > MAX_ELEMENT_AGE_DAYS:
        raise StaleElements(
            f"elements are {age_days:.1f} days from {t}; horizon is "
            f"{MAX_ELEMENT_AGE_DAYS:.0f} days"
        )
    return propagator_cls(elements).state(t)
