"""Search the time axis for communication passes and imaging opportunities.

Strategy: sample the elevation function on a coarse grid (default 30 s),
bracket threshold crossings and local maxima, then refine AOS/LOS by
bisection and the maximum-elevation time by golden-section search, both to
0.1 s.  Grazing passes whose peak falls between grid samples are caught by
refining near-threshold local maxima before discarding them.

Searches are stateless and deterministic; a dense 0.1 s scan over the same
window must find exactly the same passes (the acceptance suite checks it).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .astro.epoch import Epoch
from .astro.frames import eci_to_ecef_array
from .astro.geodesy import GeodeticPoint
from .astro.propagator import Propagator, Sgp4Propagator
from .astro.sun import sun_direction
from .astro.tle import OrbitalElements
from .errors import EmptyWindow, NeverAboveFive, WindowTooLong
from .geometry import (
    beta_angle,
    elevation_array,
    is_sunlit,
    local_clock_time,
    local_solar_time,
    pointing_geometry,
    solar_elevation,
)
from .models import Sensor

REFINE_TOL_S = 0.1
LOS5_ELEVATION_DEG = 5.0
_GRAZING_MARGIN_DEG = 2.0
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

try:
    from numba import njit as _njit
except ImportError:  # pragma: no cover
    _njit = None


def _elevation_loop(r_eci, jd, site, east, north, up, out):
    """GMST rotation + topocentric elevation, fused for dense scans."""
    for i in range(jd.shape[0]):
        d = jd[i] - 2451545.0
        tc = d / 36525.0
        theta = (280.46061837 + 360.98564736629 * d
                 + 0.000387933 * tc * tc - tc * tc * tc / 38710000.0) % 360.0
        theta *= 0.017453292519943295
        c = math.cos(theta)
        s = math.sin(theta)
        x = c * r_eci[i, 0] + s * r_eci[i, 1] - site[0]
        y = -s * r_eci[i, 0] + c * r_eci[i, 1] - site[1]
        z = r_eci[i, 2] - site[2]
        u = x * up[0] + y * up[1] + z * up[2]
        rng = math.sqrt(x * x + y * y + z * z)
        ratio = u / rng
        if ratio > 1.0:
            ratio = 1.0
        elif ratio < -1.0:
            ratio = -1.0
        out[i] = 57.29577951308232 * math.asin(ratio)


_elevation_compiled = _njit(cache=True)(_elevation_loop) if _njit is not None else None


@dataclass(frozen=True)
class Pass:
    satellite_id: str
    location_id: str
    t_aos: Epoch
    t_mel: Epoch
    t_los: Epoch
    t_los5: Epoch | None
    max_elevation: float
    sunlit_at_mel: bool

    def __post_init__(self):
        if not (self.t_aos <= self.t_mel <= self.t_los and self.t_aos < self.t_los):
            raise ValueError("pass timestamps out of order")
        if self.t_los5 is not None and not (self.t_mel < self.t_los5 <= self.t_los):
            raise ValueError("t_los5 must lie in (t_mel, t_los]")

    @property
    def duration_s(self) -> float:
        return self.t_los - self.t_aos


@dataclass(frozen=True)
class Opportunity:
    satellite_id: str
    sensor_id: str
    location_id: str
    t_mel: Epoch
    elevation_at_target: float
    roll_deg: float
    resolution_factor: float
    sat_sunlit: bool
    sun_el_deg: float
    orb_sun_deg: float
    local_solar_time: float
    local_clock_time: Epoch
    cloud_pct: float | None        # None = forecast unknown
    excluded_from_auto: bool = False


@dataclass(frozen=True)
class ConstraintSet:
    max_resolution_factor: float = 1.3
    min_sun_el_deg: float | None = None   # None = use the sensor's own floor
    max_cloud_pct: float = 25.0
    require_sat_sunlit: bool = True

    def __post_init__(self):
        if self.max_resolution_factor < 1.0:
            raise ValueError("max_resolution_factor must be >= 1")
        if not 0.0 <= self.max_cloud_pct <= 100.0:
            raise ValueError("max_cloud_pct must be within [0, 100]")

    def effective_min_sun_el(self, sensor: Sensor) -> float:
        return self.min_sun_el_deg if self.min_sun_el_deg is not None else sensor.min_sun_el_deg


class CloudForecastProvider(Protocol):
    def query(self, lat: float, lon: float, t: Epoch) -> float | None:
        """Cloud cover percent in [0, 100], or None when unknown."""


class ElevationSampler:
    """Elevation of one satellite above one site as a function of time."""

    def __init__(self, elements: OrbitalElements, site: GeodeticPoint,
                 propagator_cls: type[Propagator] = Sgp4Propagator):
        self.elements = elements
        self.site = site
        self.propagator = propagator_cls(elements)
        self._epoch_ms = elements.epoch.ms

    def positions_eci(self, times_ms: np.ndarray) -> np.ndarray:
        tsince_min = (times_ms - self._epoch_ms) / 60000.0
        r, _ = self.propagator.state_arrays(tsince_min)
        return r

    def elevations(self, times_ms: np.ndarray) -> np.ndarray:
        r = self.positions_eci(times_ms)
        jd = 2440587.5 + times_ms / 86400000.0
        if _elevation_compiled is not None and times_ms.size >= 256:
            from .geometry import _enu_basis
            from .astro.geodesy import geodetic_to_ecef
            east, north, up = _enu_basis(self.site)
            out = np.empty(times_ms.size)
            _elevation_compiled(np.ascontiguousarray(r), jd,
                                geodetic_to_ecef(self.site), east, north, up, out)
            return out
        return elevation_array(self.site, eci_to_ecef_array(r, jd))

    def elevation_at(self, t_ms: float) -> float:
        return float(self.elevations(np.array([t_ms], dtype=np.float64))[0])


def _bisect_crossing(sampler, lo_ms, hi_ms, threshold, rising):
    """Locate the elevation-threshold crossing inside [lo, hi] to 0.1 s."""
    tol_ms = REFINE_TOL_S * 1000.0
    while hi_ms - lo_ms > tol_ms:
        mid = 0.5 * (lo_ms + hi_ms)
        above = sampler.elevation_at(mid) >= threshold
        if above == rising:
            hi_ms = mid
        else:
            lo_ms = mid
    return 0.5 * (lo_ms + hi_ms)


def _golden_max(sampler, lo_ms, hi_ms):
    """Time and value of the elevation maximum inside [lo, hi], to 0.1 s."""
    tol_ms = REFINE_TOL_S * 1000.0
    a, b = lo_ms, hi_ms
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = sampler.elevation_at(c), sampler.elevation_at(d)
    while b - a > tol_ms:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = sampler.elevation_at(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = sampler.elevation_at(d)
    t = 0.5 * (a + b)
    return t, sampler.elevation_at(t)


def _check_window(window: tuple[Epoch, Epoch], max_days: float):
    t0, t1 = window
    if t1 < t0:
        raise EmptyWindow(f"window [{t0}, {t1}] is inverted")
    if (t1 - t0) > max_days * 86400.0:
        raise WindowTooLong(f"window exceeds {max_days:.0f} days")
    return t0, t1


def find_comm_passes(elements: OrbitalElements, station: GeodeticPoint,
                     window: tuple[Epoch, Epoch], min_elevation: float = 0.0,
                     *, coarse_step_s: float = 30.0,
                     propagator_cls: type[Propagator] = Sgp4Propagator,
                     location_id: str = "") -> list[Pass]:
    """All intervals in ``window`` with elevation >= ``min_elevation``."""
    t0, t1 = _check_window(window, 31.0)
    if not 0.0 <= min_elevation <= 20.0:
        raise ValueError("min_elevation must be within [0, 20] degrees")
    if t0 == t1:
        return []
    sampler = ElevationSampler(elements, station, propagator_cls)
    grid = np.arange(t0.ms, t1.ms, coarse_step_s * 1000.0, dtype=np.float64)
    grid = np.append(grid, float(t1.ms))
    el = sampler.elevations(grid)
    above = el >= min_elevation

    intervals: list[tuple[float, float]] = []
    i = 0
    n = len(grid)
    while i < n:
        if not above[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and above[j + 1]:
            j += 1
        aos = (float(t0.ms) if i == 0 else
               _bisect_crossing(sampler, grid[i - 1], grid[i], min_elevation, rising=True))
        los = (float(t1.ms) if j == n - 1 else
               _bisect_crossing(sampler, grid[j], grid[j + 1], min_elevation, rising=False))
        intervals.append((aos, los))
        i = j + 1

    # grazing passes: near-threshold local maxima with no sample above threshold
    for k in range(1, n - 1):
        if above[k - 1] or above[k] or above[k + 1]:
            continue
        if el[k] <= el[k - 1] or el[k] <= el[k + 1]:
            continue
        if el[k] < min_elevation - _GRAZING_MARGIN_DEG:
            continue
        t_peak, peak = _golden_max(sampler, grid[k - 1], grid[k + 1])
        if peak < min_elevation:
            continue
        aos = _bisect_crossing(sampler, grid[k - 1], t_peak, min_elevation, rising=True)
        los = _bisect_crossing(sampler, t_peak, grid[k + 1], min_elevation, rising=False)
        intervals.append((aos, los))

    intervals.sort()
    passes = []
    for aos_ms, los_ms in intervals:
        t_mel_ms, max_el = _golden_max(sampler, aos_ms, los_ms)
        t_mel_ms = min(max(t_mel_ms, aos_ms), los_ms)
        t_los5 = None
        if max_el > LOS5_ELEVATION_DEG:
            t_los5 = Epoch(round(_descending_five(sampler, t_mel_ms, los_ms)))
        sun_eci, _ = sun_direction(Epoch(round(t_mel_ms)))
        r_mel = sampler.positions_eci(np.array([t_mel_ms]))[0]
        passes.append(Pass(
            satellite_id=elements.satellite_id,
            location_id=location_id,
            t_aos=Epoch(round(aos_ms)),
            t_mel=Epoch(round(t_mel_ms)),
            t_los=Epoch(round(los_ms)),
            t_los5=t_los5,
            max_elevation=max_el,
            sunlit_at_mel=is_sunlit(r_mel, sun_eci),
        ))
    return passes


def _descending_five(sampler, t_mel_ms, los_ms):
    if sampler.elevation_at(los_ms) >= LOS5_ELEVATION_DEG:
        # window-clipped or masked above 5 deg: playback may run to LOS
        return los_ms
    return _bisect_crossing(sampler, t_mel_ms, los_ms, LOS5_ELEVATION_DEG, rising=False)


def los5_time(passdata: Pass, elements: OrbitalElements, station: GeodeticPoint,
              propagator_cls: type[Propagator] = Sgp4Propagator) -> Epoch:
    """Descending 5-degree crossing between MEL and LOS, refined to 0.1 s."""
    if passdata.max_elevation <= LOS5_ELEVATION_DEG:
        raise NeverAboveFive(
            f"pass peaks at {passdata.max_elevation:.2f} deg, never above 5"
        )
    sampler = ElevationSampler(elements, station, propagator_cls)
    return Epoch(round(_descending_five(sampler, float(passdata.t_mel.ms),
                                        float(passdata.t_los.ms))))


def find_capture_opportunities(elements: OrbitalElements, target: GeodeticPoint,
                               sensor: Sensor, window: tuple[Epoch, Epoch],
                               constraints: ConstraintSet = ConstraintSet(),
                               forecast: CloudForecastProvider | None = None,
                               *, utc_offset_hours: float = 0.0,
                               coarse_step_s: float = 30.0,
                               propagator_cls: type[Propagator] = Sgp4Propagator,
                               location_id: str = "") -> list[Opportunity]:
    """One candidate per closest approach satisfying the imaging constraints.

    Candidates whose cloud forecast is unknown are returned but flagged
    ``excluded_from_auto`` so automatic selection skips them while an
    operator can still choose them.
    """
    t0, t1 = _check_window(window, 14.0)
    if t0 == t1:
        return []
    sampler = ElevationSampler(elements, target, propagator_cls)
    grid = np.arange(t0.ms, t1.ms, coarse_step_s * 1000.0, dtype=np.float64)
    grid = np.append(grid, float(t1.ms))
    el = sampler.elevations(grid)

    peak_times: list[float] = []
    for k in range(1, len(grid) - 1):
        if el[k] >= el[k - 1] and el[k] > el[k + 1] and el[k] > -_GRAZING_MARGIN_DEG:
            t_peak, peak = _golden_max(sampler, grid[k - 1], grid[k + 1])
            if peak > 0.0:
                peak_times.append(t_peak)

    out = []
    min_sun_el = constraints.effective_min_sun_el(sensor)
    for t_ms in peak_times:
        t_mel = Epoch(round(t_ms))
        state = sampler.propagator.state(t_mel)
        geom = pointing_geometry(state, target)
        if not geom.target_visible:
            continue
        sun_eci, _ = sun_direction(t_mel)
        sunlit = is_sunlit(state.position, sun_eci)
        sun_el = solar_elevation(target, t_mel)

        if geom.resolution_factor > constraints.max_resolution_factor:
            continue
        if sun_el < min_sun_el:
            continue
        if constraints.require_sat_sunlit and not sunlit:
            continue
        cloud = forecast.query(target.latitude, target.longitude, t_mel) if forecast else None
        if cloud is not None and cloud > constraints.max_cloud_pct:
            continue

        out.append(Opportunity(
            satellite_id=elements.satellite_id,
            sensor_id=sensor.name,
            location_id=location_id,
            t_mel=t_mel,
            elevation_at_target=geom.elevation_at_target,
            roll_deg=geom.roll_deg,
            resolution_factor=geom.resolution_factor,
            sat_sunlit=sunlit,
            sun_el_deg=sun_el,
            orb_sun_deg=beta_angle(elements, t_mel),
            local_solar_time=local_solar_time(target.longitude, t_mel),
            local_clock_time=local_clock_time(t_mel, utc_offset_hours),
            cloud_pct=cloud,
            excluded_from_auto=cloud is None,
        ))
    out.sort(key=lambda o: o.t_mel)
    return out
