"""Durable, idempotent storage for ingested activity events.

Backed by a single SQLite file in WAL mode: acknowledged writes survive a
process restart, concurrent readers see consistent snapshots, and the
idempotency key (hash of device id, receive timestamp, and payload) makes
at-least-once webhook delivery safe — replaying the same uplink log any
number of times leaves the store unchanged.
"""

from __future__ import annotations

import hashlib
import sqlite3
import threading
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .codec import DecodeError, decode_envelope

__all__ = [
    "ActivityEvent",
    "AggregateBucket",
    "EventStore",
    "QueryError",
    "SensorSummary",
    "parse_rfc3339",
    "format_rfc3339",
]

MAX_QUERY_RANGE_DAYS = 370

_SCHEMA = """
CREATE TABLE IF NOT EXISTS events (
    event_id     INTEGER PRIMARY KEY AUTOINCREMENT,
    idem_key     TEXT    NOT NULL UNIQUE,
    sensor_id    TEXT    NOT NULL,
    received_at  TEXT    NOT NULL,
    received_us  INTEGER NOT NULL,
    start_us     INTEGER NOT NULL,
    duration_s   INTEGER NOT NULL,
    presence     INTEGER NOT NULL,
    break_count  INTEGER NOT NULL,
    battery_mv   INTEGER,
    rssi_dbm     REAL,
    snr_db       REAL
);
CREATE INDEX IF NOT EXISTS idx_events_start ON events (start_us);
CREATE INDEX IF NOT EXISTS idx_events_sensor_start ON events (sensor_id, start_us);
"""


class QueryError(ValueError):
    """Invalid query parameters (bad range, unknown sensor or bucket)."""


def parse_rfc3339(text: str) -> datetime:
    """Parse an RFC 3339 timestamp; must carry an offset, normalized to UTC."""
    try:
        dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except (ValueError, AttributeError, TypeError):
        raise ValueError(f"timestamp {text!r} is not RFC 3339") from None
    if dt.tzinfo is None:
        raise ValueError(f"timestamp {text!r} lacks a UTC offset")
    return dt.astimezone(timezone.utc)


def format_rfc3339(dt: datetime) -> str:
    dt = dt.astimezone(timezone.utc)
    if dt.microsecond:
        return dt.strftime("%Y-%m-%dT%H:%M:%S.%f").rstrip("0") + "Z"
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


def _to_us(dt: datetime) -> int:
    return round((dt - _EPOCH).total_seconds() * 1_000_000)


def _from_us(us: int) -> datetime:
    return _EPOCH + timedelta(microseconds=us)


@dataclass(frozen=True)
class ActivityEvent:
    event_id: int
    sensor_id: str
    received_at: datetime
    start_at: datetime
    duration_s: int
    presence: bool
    break_count: int
    battery_mv: int | None
    rssi_dbm: float | None = None
    snr_db: float | None = None

    def to_api(self) -> dict:
        return {
            "event_id": self.event_id,
            "sensor_id": self.sensor_id,
            "received_at": format_rfc3339(self.received_at),
            "start_at": format_rfc3339(self.start_at),
            "duration_s": self.duration_s,
            "presence": self.presence,
            "break_count": self.break_count,
            "battery_mv": self.battery_mv,
            "rssi_dbm": self.rssi_dbm,
            "snr_db": self.snr_db,
        }


@dataclass(frozen=True)
class AggregateBucket:
    bucket_start: datetime
    total_active_s: int
    session_count: int
    presence_count: int

    def to_api(self) -> dict:
        return {
            "bucket_start": format_rfc3339(self.bucket_start),
            "total_active_s": self.total_active_s,
            "session_count": self.session_count,
            "presence_count": self.presence_count,
        }


@dataclass(frozen=True)
class SensorSummary:
    sensor_id: str
    first_seen: datetime
    last_seen: datetime
    event_count: int
    last_battery_mv: int | None

    def to_api(self) -> dict:
        return {
            "sensor_id": self.sensor_id,
            "first_seen": format_rfc3339(self.first_seen),
            "last_seen": format_rfc3339(self.last_seen),
            "event_count": self.event_count,
            "last_battery_mv": self.last_battery_mv,
        }


_BUCKET_US = {"hour": 3_600_000_000, "day": 86_400_000_000}


class EventStore:
    """SQLite-backed event store; one instance per data directory.

    Connections are per-thread so the FastAPI threadpool can ingest and
    query concurrently; SQLite's locking keeps ingestion linearizable per
    idempotency key.
    """

    def __init__(self, path: str | Path):
        self._path = str(path)
        self._uri = False
        if self._path == ":memory:":
            # shared-cache URI so every thread's connection sees one database;
            # the keepalive connection pins it for the store's lifetime
            self._path = f"file:parksense-{id(self):x}?mode=memory&cache=shared"
            self._uri = True
        else:
            Path(self._path).parent.mkdir(parents=True, exist_ok=True)
        self._local = threading.local()
        self._keepalive = self._connect()
        self._keepalive.executescript(_SCHEMA)
        self._keepalive.commit()

    def _connect(self) -> sqlite3.Connection:
        con = getattr(self._local, "con", None)
        if con is None:
            con = sqlite3.connect(self._path, timeout=30.0, uri=self._uri)
            con.execute("PRAGMA journal_mode=WAL")
            con.execute("PRAGMA synchronous=NORMAL")
            self._local.con = con
        return con

    def close(self) -> None:
        con = getattr(self._local, "con", None)
        if con is not None:
            con.close()
            self._local.con = None
        if self._keepalive is not None and self._keepalive is not con:
            self._keepalive.close()
        self._keepalive = None

    @staticmethod
    def idempotency_key(device_id: str, received_at: str, payload_b64: str) -> str:
        digest = hashlib.sha256(
            f"{device_id}\n{received_at}\n{payload_b64}".encode()
        )
        return digest.hexdigest()

    def ingest(self, envelope: dict) -> tuple[int, bool]:
        """Validate, decode, and durably persist one uplink envelope.

        Returns (event_id, created). A duplicate envelope returns the
        original event_id with created=False and changes nothing. Raises
        DecodeError on anything malformed; sqlite3.Error propagates as a
        storage failure (the event was NOT acknowledged).
        """
        device_id, received_at, frame = decode_envelope(envelope)
        try:
            received = parse_rfc3339(received_at)
        except ValueError as exc:
            raise DecodeError("received_at", str(exc)) from None
        rssi = envelope.get("rssi_dbm")
        snr = envelope.get("snr_db")
        if rssi is not None and not isinstance(rssi, (int, float)):
            raise DecodeError("rssi_dbm", "rssi_dbm must be a number")
        if snr is not None and not isinstance(snr, (int, float)):
            raise DecodeError("snr_db", "snr_db must be a number")

        start = received - timedelta(seconds=frame.duration_s)
        key = self.idempotency_key(device_id, received_at, envelope["payload_b64"])
        con = self._connect()
        with con:
            cur = con.execute(
                """INSERT INTO events (idem_key, sensor_id, received_at, received_us,
                                       start_us, duration_s, presence, break_count,
                                       battery_mv, rssi_dbm, snr_db)
                   VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
                   ON CONFLICT (idem_key) DO NOTHING""",
                (key, device_id, received_at, _to_us(received), _to_us(start),
                 frame.duration_s, int(frame.presence), frame.break_count,
                 frame.battery_mv, rssi, snr),
            )
            if cur.rowcount == 1:
                return cur.lastrowid, True
        row = con.execute(
            "SELECT event_id FROM events WHERE idem_key = ?", (key,)
        ).fetchone()
        return row[0], False

    def event_count(self) -> int:
        return self._connect().execute("SELECT COUNT(*) FROM events").fetchone()[0]

    def _check_range(self, start: datetime, end: datetime) -> tuple[int, int]:
        if start >= end:
            raise QueryError("'from' must be earlier than 'to'")
        if end - start > timedelta(days=MAX_QUERY_RANGE_DAYS):
            raise QueryError(f"range exceeds {MAX_QUERY_RANGE_DAYS} days")
        return _to_us(start), _to_us(end)

    def _check_sensor(self, sensor_id: str) -> None:
        row = self._connect().execute(
            "SELECT 1 FROM events WHERE sensor_id = ? LIMIT 1", (sensor_id,)
        ).fetchone()
        if row is None:
            raise QueryError(f"unknown sensor {sensor_id!r}")

    def query_raw(
        self, start: datetime, end: datetime, sensor_id: str | None = None
    ) -> list[ActivityEvent]:
        """Events with start_at in [start, end), ordered by start then id."""
        lo, hi = self._check_range(start, end)
        sql = """SELECT event_id, sensor_id, received_us, start_us, duration_s,
                        presence, break_count, battery_mv, rssi_dbm, snr_db
                 FROM events WHERE start_us >= ? AND start_us < ?"""
        args: list = [lo, hi]
        if sensor_id is not None:
            self._check_sensor(sensor_id)
            sql += " AND sensor_id = ?"
            args.append(sensor_id)
        sql += " ORDER BY start_us, event_id"
        out = []
        for row in self._connect().execute(sql, args):
            out.append(ActivityEvent(
                event_id=row[0],
                sensor_id=row[1],
                received_at=_from_us(row[2]),
                start_at=_from_us(row[3]),
                duration_s=row[4],
                presence=bool(row[5]),
                break_count=row[6],
                battery_mv=row[7],
                rssi_dbm=row[8],
                snr_db=row[9],
            ))
        return out

    def query_buckets(
        self,
        start: datetime,
        end: datetime,
        bucket: str,
        sensor_id: str | None = None,
    ) -> list[AggregateBucket]:
        """Contiguous zero-filled hour/day buckets covering [start, end).

        An event belongs to the bucket containing its start_at; totals over
        any covering partition therefore equal the raw duration sum.
        """
        width = _BUCKET_US.get(bucket)
        if width is None:
            raise QueryError(f"unknown bucket {bucket!r} (expected raw, hour, or day)")
        lo, hi = self._check_range(start, end)
        sql = """SELECT (start_us / ?) AS b, SUM(duration_s), COUNT(*), SUM(presence)
                 FROM events WHERE start_us >= ? AND start_us < ?"""
        args: list = [width, lo, hi]
        if sensor_id is not None:
            self._check_sensor(sensor_id)
            sql += " AND sensor_id = ?"
            args.append(sensor_id)
        sql += " GROUP BY b"
        filled = {row[0]: (row[1], row[2], row[3])
                  for row in self._connect().execute(sql, args)}
        out = []
        b = lo // width
        while b * width < hi:
            total, count, present = filled.get(b, (0, 0, 0))
            out.append(AggregateBucket(
                bucket_start=_from_us(b * width),
                total_active_s=int(total),
                session_count=int(count),
                presence_count=int(present),
            ))
            b += 1
        return out

    def list_sensors(self) -> list[SensorSummary]:
        """One summary per distinct sensor, ordered by sensor_id."""
        con = self._connect()
        out = []
        rows = con.execute(
            """SELECT sensor_id, MIN(received_us), MAX(received_us), COUNT(*)
               FROM events GROUP BY sensor_id ORDER BY sensor_id"""
        ).fetchall()
        for sensor_id, first_us, last_us, count in rows:
            battery = con.execute(
                """SELECT battery_mv FROM events
                   WHERE sensor_id = ? AND battery_mv IS NOT NULL
                   ORDER BY received_us DESC, event_id DESC LIMIT 1""",
                (sensor_id,),
            ).fetchone()
            out.append(SensorSummary(
                sensor_id=sensor_id,
                first_seen=_from_us(first_us),
                last_seen=_from_us(last_us),
                event_count=count,
                last_battery_mv=battery[0] if battery else None,
            ))
        return out
