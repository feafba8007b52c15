"""HTTP service: configuration, API application, forecast, scheduled jobs."""

from .api import create_app, session_to_json
from .config import (
    ForecastConfig,
    ServiceConfig,
    TokenEntry,
    apply_env_overrides,
    bootstrap_store,
    ingest_tle_text,
    load_config,
)
from .forecast import FileGridForecast, HttpForecast, NoForecast, StaticForecast, build_forecast
from .jobs import JobScheduler

__all__ = [
    "FileGridForecast",
    "ForecastConfig",
    "HttpForecast",
    "JobScheduler",
    "NoForecast",
    "ServiceConfig",
    "StaticForecast",
    "TokenEntry",
    "apply_env_overrides",
    "bootstrap_store",
    "build_forecast",
    "create_app",
    "ingest_tle_text",
    "load_config",
    "session_to_json",
]
