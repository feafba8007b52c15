"""Cloud-forecast providers.

The provider contract: ``query(lat, lon, t) -> percent | None``; None means
unknown, which keeps candidates visible but out of automatic selection.
The file-backed grid is the default; the HTTP adapter enforces a 2 s
budget and degrades to unknown on any failure.
"""
from __future__ import annotations

import json
import logging
import math

import httpx

from ..astro.epoch import Epoch

log = logging.getLogger(__name__)


class NoForecast:
    def query(self, lat: float, lon: float, t: Epoch) -> float | None:
        return None


class StaticForecast:
    def __init__(self, pct: float):
        self.pct = float(pct)

    def query(self, lat: float, lon: float, t: Epoch) -> float | None:
        return self.pct


class FileGridForecast:
    """Gridded values keyed by latitude band, longitude band, and UTC hour.

    File format::

        {"band_deg": 5.0, "cells": {"7:28:6": 20.0, ...}}

    where the key is ``floor(lat/band):floor(lon/band):hour``.  Missing
    cells are unknown.
    """

    def __init__(self, path: str):
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
        self.band_deg = float(raw.get("band_deg", 5.0))
        self.cells = {k: float(v) for k, v in raw.get("cells", {}).items()}

    def key(self, lat: float, lon: float, t: Epoch) -> str:
        hour = t.to_datetime().hour
        return (f"{math.floor(lat / self.band_deg)}:"
                f"{math.floor(lon / self.band_deg)}:{hour}")

    def query(self, lat: float, lon: float, t: Epoch) -> float | None:
        return self.cells.get(self.key(lat, lon, t))


class HttpForecast:
    """Remote provider adapter with a hard response budget."""

    def __init__(self, url: str, timeout_s: float = 2.0, client: httpx.Client | None = None):
        self.url = url
        self.timeout_s = timeout_s
        self._client = client or httpx.Client(timeout=timeout_s)

    def query(self, lat: float, lon: float, t: Epoch) -> float | None:
        try:
            response = self._client.get(
                self.url,
                params={"lat": lat, "lon": lon, "time": t.round_to_second().isoformat()},
                timeout=self.timeout_s)
            if response.status_code != 200:
                log.warning("forecast provider returned %s; treating as unknown",
                            response.status_code)
                return None
            value = float(response.text.strip())
            if not 0.0 <= value <= 100.0:
                log.warning("forecast provider returned %r; treating as unknown", value)
                return None
            return value
        except Exception as exc:
            log.warning("forecast provider unavailable (%s); treating as unknown", exc)
            return None


def build_forecast(config) -> object:
    if config.provider == "static":
        return StaticForecast(config.value)
    if config.provider == "file":
        return FileGridForecast(config.path)
    if config.provider == "http":
        return HttpForecast(config.url, config.timeout_s)
    return NoForecast()
