"""UTC instants with millisecond resolution.

All timestamps in the system are :class:`Epoch` values: an integer count of
milliseconds since the Unix epoch, interpreted as UTC.  Leap seconds are
ignored; at the 1 s planning granularity of this system the constant offset
is irrelevant.  Julian-date conversions are exact to well under 1 ms in
float64 (JD magnitude ~2.46e6 leaves ~0.05 ms of mantissa resolution).
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

_UNIX_JD = 2440587.5          # Julian date of 1970-01-01T00:00:00Z
_MS_PER_DAY = 86_400_000

_ISO_RE = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})[T ](\d{2}):(\d{2}):(\d{2})(\.\d{1,6})?(Z|\+00:00)?$"
)


@dataclass(frozen=True, order=True)
class Epoch:
    """A UTC instant, totally ordered, hashable."""

    ms: int

    # --- constructors -------------------------------------------------

    @classmethod
    def from_datetime(cls, dt: datetime) -> "Epoch":
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return cls(round(dt.timestamp() * 1000))

    @classmethod
    def from_iso(cls, text: str) -> "Epoch":
        m = _ISO_RE.match(text.strip())
        if not m:
            raise ValueError(f"unrecognized timestamp: {text!r}")
        y, mo, d, h, mi, s = (int(g) for g in m.groups()[:6])
        frac = float(m.group(7) or 0.0)
        dt = datetime(y, mo, d, h, mi, s, tzinfo=timezone.utc)
        return cls(round(dt.timestamp() * 1000) + round(frac * 1000))

    @classmethod
    def from_jd(cls, jd: float) -> "Epoch":
        return cls(round((jd - _UNIX_JD) * _MS_PER_DAY))

    @classmethod
    def from_year_doy(cls, year: int, doy: float) -> "Epoch":
        """Year plus fractional day-of-year (1.0 = Jan 1 00:00), as in TLEs."""
        jan1 = datetime(year, 1, 1, tzinfo=timezone.utc)
        ms = round(jan1.timestamp() * 1000) + round((doy - 1.0) * _MS_PER_DAY)
        return cls(ms)

    # --- views ----------------------------------------------------------

    def to_datetime(self) -> datetime:
        return datetime.fromtimestamp(self.ms / 1000.0, tz=timezone.utc).replace(
            microsecond=(self.ms % 1000) * 1000
        )

    @property
    def jd(self) -> float:
        return _UNIX_JD + self.ms / _MS_PER_DAY

    def jd_split(self) -> tuple[float, float]:
        """Whole and fractional Julian date (higher-precision pair)."""
        whole_days, ms = divmod(self.ms, _MS_PER_DAY)
        return _UNIX_JD + whole_days, ms / _MS_PER_DAY

    def year_doy(self) -> tuple[int, float]:
        dt = self.to_datetime()
        jan1 = datetime(dt.year, 1, 1, tzinfo=timezone.utc)
        return dt.year, 1.0 + (self.ms - round(jan1.timestamp() * 1000)) / _MS_PER_DAY

    def utc_hours(self) -> float:
        """Hours elapsed since the most recent UTC midnight, [0, 24)."""
        return (self.ms % _MS_PER_DAY) / 3_600_000.0

    # --- formatting -------------------------------------------------------

    def isoformat(self) -> str:
        """``YYYY-MM-DDThh:mm:ssZ``; milliseconds appended only when nonzero."""
        dt = self.to_datetime()
        base = dt.strftime("%Y-%m-%dT%H:%M:%S")
        if self.ms % 1000:
            base += f".{self.ms % 1000:03d}"
        return base + "Z"

    def csvformat(self) -> str:
        """``YYYY/MM/DD hh:mm:ss`` used by session-list exports."""
        return self.to_datetime().strftime("%Y/%m/%d %H:%M:%S")

    def __str__(self) -> str:
        return self.isoformat()

    # --- arithmetic --------------------------------------------------------

    def add_seconds(self, seconds: float) -> "Epoch":
        return Epoch(self.ms + round(seconds * 1000))

    def diff_seconds(self, other: "Epoch") -> float:
        """Seconds from ``other`` to ``self`` (positive when self is later)."""
        return (self.ms - other.ms) / 1000.0

    def round_to_second(self) -> "Epoch":
        return Epoch(round(self.ms / 1000) * 1000)

    def __add__(self, seconds: float) -> "Epoch":
        return self.add_seconds(seconds)

    def __sub__(self, other):
        if isinstance(other, Epoch):
            return self.diff_seconds(other)
        return self.add_seconds(-other)
