"""HTTP ingestion and query API for uplink webhooks.

Endpoints:

    POST /v1/uplink       network-server webhook; body is the uplink envelope
    GET  /v1/sensors      per-sensor summaries
    GET  /v1/activities   ?sensor=&from=&to=&bucket=raw|hour|day

Ingestion acknowledges only after the event is durably stored; duplicates
(at-least-once delivery) return the original event id. All timestamps are
RFC 3339 UTC.
"""

from __future__ import annotations

import logging
import sqlite3
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .codec import DecodeError
from .store import EventStore, QueryError, parse_rfc3339

__all__ = ["create_app"]

log = logging.getLogger("parksense.service")


def create_app(store: EventStore, static_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="parksense ingestion service", version="0.1.0")

    @app.post("/v1/uplink")
    async def ingest_uplink(request: Request):
        try:
            envelope = await request.json()
        except Exception:
            raise HTTPException(status_code=400, detail="body is not valid JSON")
        if not isinstance(envelope, dict):
            raise HTTPException(status_code=400, detail="envelope must be a JSON object")
        try:
            event_id, created = store.ingest(envelope)
        except DecodeError as exc:
            raise HTTPException(status_code=400,
                                detail=f"invalid uplink ({exc.reason}): {exc}")
        except sqlite3.Error as exc:
            log.error("storage failure: %s", exc)
            raise HTTPException(status_code=500, detail="storage failure")
        status = 201 if created else 200
        return JSONResponse({"event_id": event_id, "duplicate": not created},
                            status_code=status)

    @app.get("/v1/sensors")
    def list_sensors():
        return {"sensors": [s.to_api() for s in store.list_sensors()]}

    @app.get("/v1/activities")
    def query_activities(
        sensor: str | None = None,
        bucket: str = "raw",
        from_: str = Query(alias="from"),
        to: str = Query(),
    ):
        try:
            start = parse_rfc3339(from_)
            end = parse_rfc3339(to)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        try:
            if bucket == "raw":
                events = store.query_raw(start, end, sensor)
                return {"bucket": "raw", "events": [e.to_api() for e in events]}
            buckets = store.query_buckets(start, end, bucket, sensor)
            return {"bucket": bucket, "buckets": [b.to_api() for b in buckets]}
        except QueryError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="dashboard")

    return app
