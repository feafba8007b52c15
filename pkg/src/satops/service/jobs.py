"""Scheduled background jobs, driven by an injectable clock.

Daily: auto-register comm sessions for the coming week and expire stale
tentative state.  Every two days per satellite: surface an operator
notification that the planning procedure is due.  Job runs are keyed by
date in the store, so restarts within the same day are no-ops and no
registration batch is committed twice.
"""
from __future__ import annotations

from ..astro.epoch import Epoch
from ..store.db import SessionStore
from ..store.lifecycle import PlanningPolicy, auto_register_comm_sessions, expire_stale


class JobScheduler:
    def __init__(self, store: SessionStore, policy: PlanningPolicy):
        self.store = store
        self.policy = policy

    def run_due(self, now: Epoch) -> list[dict]:
        """Run whatever is due at ``now``; returns one report per job run."""
        reports = []
        day_key = now.to_datetime().strftime("%Y-%m-%d")

        if not self.store.job_already_ran("auto_register", day_key):
            report = auto_register_comm_sessions(self.store, now, self.policy)
            payload = {"created": report.created, "updated": report.updated,
                       "unchanged": report.unchanged, "errors": report.errors}
            self.store.record_job_run("auto_register", day_key, now, payload)
            reports.append({"job": "auto_register", "key": day_key, **payload})

        expiry = expire_stale(self.store, now)
        if expiry["expired_requests"] or expiry["dropped_sessions"]:
            reports.append({"job": "expire_stale", "key": day_key, **expiry})

        if now.to_datetime().toordinal() % 2 == 0:
            if not self.store.job_already_ran("planning_reminder", day_key):
                sats = [s.name for s in self.store.satellites()]
                for name in sats:
                    self.store.add_notification(
                        "planning_due", name,
                        f"two-day planning procedure due for {name}", now)
                self.store.record_job_run("planning_reminder", day_key, now,
                                          {"satellites": sats})
                reports.append({"job": "planning_reminder", "key": day_key,
                                "satellites": sats})
        return reports
