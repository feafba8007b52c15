"""Two-line element set parsing and formatting.

Standard 69-column TLE records, with the usual implied-decimal fields and
the modulo-10 line checksum (digits count their value, ``-`` counts 1).
``parse_tle`` accepts an optional name line; ``read_tle_file`` iterates a
whole file of element sets, tolerating CRLF and blank lines.

Mean motion is kept in rev/day and angles in degrees, exactly as found in
the record; unit conversions belong to the propagator.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

from ..errors import ChecksumMismatch, LineCountError, MalformedField
from .epoch import Epoch


@dataclass(frozen=True)
class OrbitalElements:
    satellite_id: str
    epoch: Epoch
    inclination: float          # deg
    raan: float                 # deg
    eccentricity: float
    arg_perigee: float          # deg
    mean_anomaly: float         # deg
    mean_motion: float          # rev/day
    bstar: float                # 1/earth radii
    element_set_no: int
    classification: str = "U"
    intl_designator: str = ""
    ndot: float = 0.0           # rev/day^2 (already halved in the record)
    nddot: float = 0.0          # rev/day^3 (already divided by 6)
    ephemeris_type: int = 0
    rev_number: int = 0
    name: str = ""

    def __post_init__(self):
        for label, value in (("inclination", self.inclination),
                             ("raan", self.raan),
                             ("arg_perigee", self.arg_perigee),
                             ("mean_anomaly", self.mean_anomaly)):
            if not 0.0 <= value < 360.0:
                raise ValueError(f"{label} {value} outside [0, 360)")
        if not 0.0 <= self.eccentricity < 1.0:
            raise ValueError(f"eccentricity {self.eccentricity} outside [0, 1)")
        if not 0.0 < self.mean_motion < 20.0:
            raise ValueError(f"mean motion {self.mean_motion} outside (0, 20) rev/day")

    def with_name(self, name: str) -> "OrbitalElements":
        return replace(self, name=name)


def checksum(line: str) -> int:
    """Modulo-10 sum of digits, with '-' counting as 1, over columns 1-68."""
    total = 0
    for ch in line[:68]:
        if ch.isdigit():
            total += int(ch)
        elif ch == "-":
            total += 1
    return total % 10


def _field(line: str, line_no: int, lo: int, hi: int, kind, what: str):
    """Extract columns [lo, hi] (1-indexed, inclusive) and convert."""
    raw = line[lo - 1:hi]
    try:
        return kind(raw.strip() or "0")
    except ValueError:
        raise MalformedField(f"cannot read {what} from {raw!r}", line_no, (lo, hi)) from None


def _implied_decimal(line: str, line_no: int, lo: int, hi: int, what: str) -> float:
    """Fields like ' 28098-4' meaning 0.28098e-4 (mantissa has an implied dot)."""
    raw = line[lo - 1:hi]
    text = raw.strip()
    if not text or text in ("+", "-"):
        return 0.0
    sign = -1.0 if text.startswith("-") else 1.0
    text = text.lstrip("+-")
    mantissa, exp = text[:-2], text[-2:]
    try:
        return sign * float(f"0.{mantissa}") * 10.0 ** int(exp)
    except ValueError:
        raise MalformedField(f"cannot read {what} from {raw!r}", line_no, (lo, hi)) from None


def parse_tle(two_line_text: str) -> OrbitalElements:
    """Parse one element set (optionally preceded by a name line)."""
    lines = [ln.rstrip("\r") for ln in two_line_text.splitlines() if ln.strip()]
    name = ""
    if len(lines) == 3:
        name = lines[0].strip().removeprefix("0 ").strip()
        lines = lines[1:]
    if len(lines) != 2:
        raise LineCountError(f"expected 2 element lines, got {len(lines)}")
    l1, l2 = lines
    for idx, line in ((1, l1), (2, l2)):
        if len(line) != 69:
            raise MalformedField(f"line {idx} is {len(line)} columns, expected 69", idx, (1, 69))
        if line[0] != str(idx):
            raise MalformedField(f"line {idx} does not start with '{idx}'", idx, (1, 1))
        expected = checksum(line)
        if int(line[68]) != expected:
            raise ChecksumMismatch(
                f"line {idx} checksum {line[68]} != computed {expected}"
            )

    epoch_year = _field(l1, 1, 19, 20, int, "epoch year")
    epoch_year += 2000 if epoch_year < 57 else 1900
    epoch_day = _field(l1, 1, 21, 32, float, "epoch day")

    return OrbitalElements(
        satellite_id=l1[2:7].strip(),
        classification=l1[7].strip() or "U",
        intl_designator=l1[9:17].strip(),
        epoch=Epoch.from_year_doy(epoch_year, epoch_day),
        ndot=_field(l1, 1, 34, 43, float, "ndot"),
        nddot=_implied_decimal(l1, 1, 45, 52, "nddot"),
        bstar=_implied_decimal(l1, 1, 54, 61, "bstar"),
        ephemeris_type=_field(l1, 1, 63, 63, int, "ephemeris type"),
        element_set_no=_field(l1, 1, 65, 68, int, "element set number"),
        inclination=_field(l2, 2, 9, 16, float, "inclination"),
        raan=_field(l2, 2, 18, 25, float, "raan"),
        eccentricity=_field(l2, 2, 27, 33, lambda s: float(f"0.{s}"), "eccentricity"),
        arg_perigee=_field(l2, 2, 35, 42, float, "argument of perigee"),
        mean_anomaly=_field(l2, 2, 44, 51, float, "mean anomaly"),
        mean_motion=_field(l2, 2, 53, 63, float, "mean motion"),
        rev_number=_field(l2, 2, 64, 68, int, "rev number"),
        name=name,
    )


def _format_implied_decimal(value: float) -> str:
    if value == 0.0:
        return " 00000+0"
    sign = "-" if value < 0 else " "
    v = abs(value)
    exp = 0
    while v >= 1.0:
        v /= 10.0
        exp += 1
    while v < 0.1:
        v *= 10.0
        exp -= 1
    mantissa = round(v * 1e5)
    if mantissa == 100000:     # rounding spilled over, e.g. 0.0999999
        mantissa = 10000
        exp += 1
    return f"{sign}{mantissa:05d}{'+' if exp >= 0 else '-'}{abs(exp)}"


def _format_ndot(value: float) -> str:
    sign = "-" if value < 0 else " "
    body = f"{abs(value):.8f}".lstrip("0")
    return f"{sign}{body}"


def format_tle(elements: OrbitalElements) -> str:
    """Render the element set back to its two-line form (checksums computed)."""
    year, doy = elements.epoch.year_doy()
    l1 = (
        f"1 {elements.satellite_id:>5s}{elements.classification:1s} "
        f"{elements.intl_designator:<8s} "
        f"{year % 100:02d}{doy:012.8f} "
        f"{_format_ndot(elements.ndot)} "
        f"{_format_implied_decimal(elements.nddot)} "
        f"{_format_implied_decimal(elements.bstar)} "
        f"{elements.ephemeris_type:1d} "
        f"{elements.element_set_no:4d}"
    )
    l2 = (
        f"2 {elements.satellite_id:>5s} "
        f"{elements.inclination:8.4f} "
        f"{elements.raan:8.4f} "
        f"{round(elements.eccentricity * 1e7):07d} "
        f"{elements.arg_perigee:8.4f} "
        f"{elements.mean_anomaly:8.4f} "
        f"{elements.mean_motion:11.8f}"
        f"{elements.rev_number:5d}"
    )
    l1 += str(checksum(l1))
    l2 += str(checksum(l2))
    lines = ([elements.name] if elements.name else []) + [l1, l2]
    return "\n".join(lines) + "\n"


def read_tle_file(text: str) -> list[OrbitalElements]:
    """All element sets in a file, each optionally preceded by a name line."""
    lines = [ln.rstrip("\r") for ln in text.splitlines() if ln.strip()]
    sets: list[OrbitalElements] = []
    pending_name = ""
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith("1 ") and i + 1 < len(lines) and lines[i + 1].startswith("2 "):
            parsed = parse_tle(line + "\n" + lines[i + 1])
            if pending_name:
                parsed = parsed.with_name(pending_name)
            sets.append(parsed)
            pending_name = ""
            i += 2
        else:
            pending_name = line.strip().removeprefix("0 ").strip()
            i += 1
    if not sets:
        raise LineCountError("no element sets found")
    return sets
