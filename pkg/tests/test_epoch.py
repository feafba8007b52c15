import random
from datetime import datetime, timezone

import pytest

from satops.astro import Epoch


def test_iso_round_trip():
    e = Epoch.from_iso("2021-05-11T04:15:45Z")
    assert e.isoformat() == "2021-05-11T04:15:45Z"
    assert e.to_datetime() == datetime(2021, 5, 11, 4, 15, 45, tzinfo=timezone.utc)


def test_julian_date_known_value():
    # 2000-01-01T12:00:00Z is exactly JD 2451545.0
    assert Epoch.from_iso("2000-01-01T12:00:00Z").jd == pytest.approx(2451545.0, abs=1e-9)


def test_calendar_jd_round_trip_within_1ms():
    rng = random.Random(42)
    for _ in range(500):
        ms = rng.randrange(0, 4_000_000_000_000)  # through 2096
        e = Epoch(ms)
        assert abs(Epoch.from_jd(e.jd).ms - ms) <= 1


def test_ordering_total():
    a = Epoch.from_iso("2021-05-11T00:21:08Z")
    b = Epoch.from_iso("2021-05-11T00:23:12Z")
    assert a < b and not b < a and a != b
    assert sorted([b, a]) == [a, b]


def test_year_doy_round_trip():
    e = Epoch.from_year_doy(2000, 179.78495062)
    year, doy = e.year_doy()
    assert year == 2000
    assert doy == pytest.approx(179.78495062, abs=1e-8)


def test_doy_day_one_is_january_first():
    assert Epoch.from_year_doy(2021, 1.0).isoformat() == "2021-01-01T00:00:00Z"


def test_arithmetic():
    e = Epoch.from_iso("2021-05-11T04:15:45Z")
    assert (e + 30.0).isoformat() == "2021-05-11T04:16:15Z"
    assert (e - 45.0).isoformat() == "2021-05-11T04:15:00Z"
    assert (e + 30.0) - e == pytest.approx(30.0)


def test_csv_format():
    assert Epoch.from_iso("2021-05-11T00:21:08Z").csvformat() == "2021/05/11 00:21:08"


def test_millisecond_formatting():
    e = Epoch.from_iso("2021-05-11T04:15:45.250Z")
    assert e.isoformat() == "2021-05-11T04:15:45.250Z"
    assert Epoch.from_iso(e.isoformat()) == e


def test_utc_hours():
    assert Epoch.from_iso("2021-05-11T06:00:00Z").utc_hours() == pytest.approx(6.0)
