"""Shared fixtures: the synthetic sun-synchronous scenario used throughout.

A ~500 km, 97.4 degree orbit with a mid-latitude station and a polar
station, mirroring the operational setup the system is sized for.
"""
import numpy as np
import pytest

from satops.astro import Epoch, GeodeticPoint, OrbitalElements

T0 = Epoch.from_iso("2021-05-11T00:00:00Z")


def make_sso_elements(epoch: Epoch = T0, raan: float = 22.5,
                      mean_anomaly: float = 240.0, satellite_id: str = "90001",
                      mean_motion: float = 15.21834) -> OrbitalElements:
    # RAAN 22.5 deg at this epoch puts the ascending node near 10:30 local
    # solar time: a morning sun-synchronous orbit with well-lit ground tracks
    return OrbitalElements(
        satellite_id=satellite_id, epoch=epoch, inclination=97.4, raan=raan,
        eccentricity=0.0012345, arg_perigee=120.0, mean_anomaly=mean_anomaly,
        mean_motion=mean_motion, bstar=1.2345e-5, element_set_no=999,
    )


@pytest.fixture
def sso_elements():
    return make_sso_elements()


def pick_visible_target(elements: OrbitalElements, t_from: Epoch, t_to: Epoch,
                        min_sun_el: float = 30.0):
    """A ground point guaranteed to see the satellite overhead, in daylight.

    Walks the ground track and returns (point, overhead time) for the first
    instant where the sub-satellite point is sunlit enough for imaging.
    """
    from satops.astro import Sgp4Propagator, ecef_to_geodetic, eci_to_ecef, sun_direction
    from satops.geometry import is_sunlit, solar_elevation

    prop = Sgp4Propagator(elements)
    t = t_from
    while t < t_to:
        state = prop.state(t)
        sun, _ = sun_direction(t)
        if is_sunlit(state.position, sun):
            sub = ecef_to_geodetic(eci_to_ecef(state.position, t))
            point = GeodeticPoint(sub.latitude, sub.longitude, 0.0)
            if solar_elevation(point, t) >= min_sun_el:
                return point, t
        t = t + 60.0
    raise AssertionError("no sunlit overhead point in the window")


@pytest.fixture
def midlat_station():
    return GeodeticPoint(38.3, 140.8, 100.0)


@pytest.fixture
def polar_station():
    return GeodeticPoint(67.8, 20.2, 400.0)


def dense_scan_passes(sampler, t0: Epoch, t1: Epoch, threshold: float,
                      step_s: float = 0.1, chunk_s: float = 21600.0):
    """Brute-force oracle: step the elevation function and cut runs.

    Returns (aos_ms, los_ms, mel_ms, max_el) per contiguous above-threshold
    run, accurate to one step.  Chunked so a week at 0.1 s stays in memory.
    """
    step_ms = step_s * 1000.0
    runs = []
    open_run = None  # [aos_ms, last_above_ms, best_ms, best_el]
    t = float(t0.ms)
    end = float(t1.ms)
    while t < end:
        hi = min(t + chunk_s * 1000.0, end)
        times = np.arange(t, hi, step_ms)
        if len(times) == 0:
            break
        el = sampler.elevations(times)
        above = el >= threshold
        n = len(times)
        d = np.diff(above.astype(np.int8))
        seg_starts = ([0] if above[0] else []) + (np.flatnonzero(d == 1) + 1).tolist()
        seg_ends = (np.flatnonzero(d == -1)).tolist() + ([n - 1] if above[-1] else [])

        if open_run is not None and (not seg_starts or seg_starts[0] != 0):
            runs.append(tuple(open_run))   # run ended exactly at the chunk edge
            open_run = None
        for s, e in zip(seg_starts, seg_ends):
            k = s + int(np.argmax(el[s:e + 1]))
            if s == 0 and open_run is not None:
                open_run[1] = times[e]
                if el[k] > open_run[3]:
                    open_run[2], open_run[3] = times[k], float(el[k])
            else:
                open_run = [times[s], times[e], times[k], float(el[k])]
            if e < n - 1:
                runs.append(tuple(open_run))
                open_run = None
        t = hi
    if open_run is not None:
        runs.append(tuple(open_run))
    return runs
