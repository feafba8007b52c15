"""Session database: models, lifecycle, and exports."""

from .db import DEFAULT_REGISTRY_SLOTS, RegistrationReport, SessionStore
from .export import SESSION_CSV_HEADER, beam_label, session_rows_to_csv
from .lifecycle import (
    DEFAULT_POLICY,
    PlanningPolicy,
    auto_register_comm_sessions,
    confirm_request,
    create_request,
    expire_stale,
    resolve_interference,
)

__all__ = [
    "DEFAULT_POLICY",
    "DEFAULT_REGISTRY_SLOTS",
    "PlanningPolicy",
    "RegistrationReport",
    "SESSION_CSV_HEADER",
    "SessionStore",
    "auto_register_comm_sessions",
    "beam_label",
    "confirm_request",
    "create_request",
    "expire_stale",
    "resolve_interference",
    "session_rows_to_csv",
]
