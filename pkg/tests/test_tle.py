import pytest

from satops.astro import Epoch, OrbitalElements, checksum, format_tle, parse_tle, read_tle_file
from satops.errors import ChecksumMismatch, LineCountError, MalformedField

# Real catalog records; expected fields hand-decoded from the published
# column layout, independent of the parser under test.
PUBLIC_TLES = [
    (
        "1 00005U 58002B   00179.78495062  .00000023  00000-0  28098-4 0  4753",
        "2 00005  34.2682 348.7242 1859667 331.7664  19.3264 10.82419157413667",
        dict(satellite_id="00005", intl_designator="58002B", epoch_year=2000,
             epoch_doy=179.78495062, ndot=2.3e-7, nddot=0.0, bstar=2.8098e-5,
             element_set_no=475, inclination=34.2682, raan=348.7242,
             eccentricity=0.1859667, arg_perigee=331.7664, mean_anomaly=19.3264,
             mean_motion=10.82419157, rev_number=41366),
    ),
    (
        "1     5U 58002B   18231.96948527 -.00000019 +00000-0 -48070-4 0  9990",
        "2     5 034.2557 124.2521 1846373 229.0197 113.5561 10.84817833132766",
        dict(satellite_id="5", intl_designator="58002B", epoch_year=2018,
             epoch_doy=231.96948527, ndot=-1.9e-7, nddot=0.0, bstar=-4.8070e-5,
             element_set_no=999, inclination=34.2557, raan=124.2521,
             eccentricity=0.1846373, arg_perigee=229.0197, mean_anomaly=113.5561,
             mean_motion=10.84817833, rev_number=13276),
    ),
    (
        "1    11U 59001A   18234.91021469 +.00000021 +00000-0 +14392-4 0  9993",
        "2    11 032.8682 030.1273 1466645 100.3180 276.5496 11.85533996196087",
        dict(satellite_id="11", intl_designator="59001A", epoch_year=2018,
             epoch_doy=234.91021469, ndot=2.1e-7, nddot=0.0, bstar=1.4392e-5,
             element_set_no=999, inclination=32.8682, raan=30.1273,
             eccentricity=0.1466645, arg_perigee=100.3180, mean_anomaly=276.5496,
             mean_motion=11.85533996, rev_number=19608),
    ),
]


def make_tle(satnum="90001", intl="21001A", epoch_year=21, epoch_day=131.5,
             ndot=1e-6, nddot_field=" 00000-0", bstar_field=" 12345-4",
             incl=97.4, raan=10.0, ecc=0.0012345, argp=120.0, ma=240.0,
             mm=15.21834, rev=100):
    """Compose a syntactically valid record column by column."""
    ndot_str = ("-" if ndot < 0 else " ") + f"{abs(ndot):.8f}"[1:]
    l1 = (f"1 {satnum:>5s}U {intl:<8s} {epoch_year:02d}{epoch_day:012.8f} "
          f"{ndot_str} {nddot_field} {bstar_field} 0  999")
    l2 = (f"2 {satnum:>5s} {incl:8.4f} {raan:8.4f} {round(ecc * 1e7):07d} "
          f"{argp:8.4f} {ma:8.4f} {mm:11.8f}{rev:5d}")
    return l1 + str(checksum(l1)) + "\n" + l2 + str(checksum(l2))


@pytest.mark.parametrize("l1,l2,expected", PUBLIC_TLES)
def test_parse_matches_hand_decoded_fields(l1, l2, expected):
    el = parse_tle(l1 + "\n" + l2)
    assert el.satellite_id == expected["satellite_id"]
    assert el.intl_designator == expected["intl_designator"]
    year, doy = el.epoch.year_doy()
    assert year == expected["epoch_year"]
    assert doy == pytest.approx(expected["epoch_doy"], abs=2e-8)
    assert el.ndot == pytest.approx(expected["ndot"], rel=1e-12)
    assert el.nddot == pytest.approx(expected["nddot"], abs=1e-20)
    assert el.bstar == pytest.approx(expected["bstar"], rel=1e-12)
    assert el.element_set_no == expected["element_set_no"]
    assert el.inclination == expected["inclination"]
    assert el.raan == expected["raan"]
    assert el.eccentricity == pytest.approx(expected["eccentricity"], abs=1e-12)
    assert el.arg_perigee == expected["arg_perigee"]
    assert el.mean_anomaly == expected["mean_anomaly"]
    assert el.mean_motion == pytest.approx(expected["mean_motion"], rel=1e-12)
    assert el.rev_number == expected["rev_number"]


@pytest.mark.parametrize("kwargs", [
    dict(),
    dict(satnum="1", ecc=1e-7, mm=12.0),
    dict(bstar_field="-98765-3", ndot=-2e-6),
    dict(incl=0.0001, raan=359.9999, argp=0.0, ma=359.9999),
    dict(epoch_year=99, epoch_day=365.99999999, mm=16.0),
    dict(satnum="99999", rev=99999),
    dict(nddot_field=" 12345-6"),
])
def test_parse_composed_records(kwargs):
    text = make_tle(**kwargs)
    el = parse_tle(text)
    l2 = text.splitlines()[1]
    assert el.inclination == float(l2[8:16])
    assert el.mean_motion == pytest.approx(float(l2[52:63]), rel=1e-12)


def test_checksum_known_line():
    # digits sum is straightforward to verify by hand on this short example
    assert checksum("2 00005  34.2682 348.7242 1859667 331.7664  19.3264 10.82419157413667") == 7


def test_altered_checksum_digit_rejected():
    l1, l2, _ = PUBLIC_TLES[0]
    bad = l2[:68] + str((int(l2[68]) + 1) % 10)
    with pytest.raises(ChecksumMismatch):
        parse_tle(l1 + "\n" + bad)


def test_corrupted_field_breaks_checksum():
    l1, l2, _ = PUBLIC_TLES[0]
    bad = l2[:20] + "9" + l2[21:]
    with pytest.raises(ChecksumMismatch):
        parse_tle(l1 + "\n" + bad)


def test_single_line_input():
    with pytest.raises(LineCountError):
        parse_tle(PUBLIC_TLES[0][0])


def test_malformed_field_reports_columns():
    text = make_tle()
    l1, l2 = text.splitlines()
    l1 = l1[:20] + "xx" + l1[22:]
    l1 = l1[:68] + str(checksum(l1))
    with pytest.raises(MalformedField) as exc:
        parse_tle(l1 + "\n" + l2)
    assert exc.value.columns == (19, 20) or exc.value.columns == (21, 32)


def test_short_line_rejected():
    l1, l2, _ = PUBLIC_TLES[0]
    with pytest.raises(MalformedField):
        parse_tle(l1[:-5] + "\n" + l2)


def test_name_line_accepted():
    l1, l2, _ = PUBLIC_TLES[0]
    el = parse_tle("VANGUARD 1\n" + l1 + "\n" + l2)
    assert el.name == "VANGUARD 1"
    assert el.satellite_id == "00005"


@pytest.mark.parametrize("l1,l2,_", PUBLIC_TLES)
def test_parse_serialize_parse_fixed_point(l1, l2, _):
    first = parse_tle(l1 + "\n" + l2)
    second = parse_tle(format_tle(first))
    assert second == first


def test_serialize_composed_fixed_point():
    for kwargs in [dict(), dict(bstar_field="-98765-3"), dict(ecc=1e-7)]:
        first = parse_tle(make_tle(**kwargs))
        assert parse_tle(format_tle(first)) == first


def test_read_tle_file_multiple_sets_crlf():
    l1a, l2a, _ = PUBLIC_TLES[0]
    l1b, l2b, _ = PUBLIC_TLES[2]
    text = f"SAT A\r\n{l1a}\r\n{l2a}\r\n\r\nSAT B\r\n{l1b}\r\n{l2b}\r\n"
    sets = read_tle_file(text)
    assert [s.name for s in sets] == ["SAT A", "SAT B"]
    assert sets[1].satellite_id == "11"


def test_invariant_validation():
    with pytest.raises(ValueError):
        OrbitalElements("X", Epoch(0), inclination=97.0, raan=0.0, eccentricity=1.2,
                        arg_perigee=0.0, mean_anomaly=0.0, mean_motion=15.0,
                        bstar=0.0, element_set_no=1)
    with pytest.raises(ValueError):
        OrbitalElements("X", Epoch(0), inclination=97.0, raan=0.0, eccentricity=0.0,
                        arg_perigee=0.0, mean_anomaly=0.0, mean_motion=25.0,
                        bstar=0.0, element_set_no=1)
