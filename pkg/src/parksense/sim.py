"""Deterministic desk-scale simulation of instrumented workout parks.

Synthesizes what the hardware would measure: white sensor noise plus one
damped-oscillation burst per exercise repetition, visitor schedules drawn
from hourly arrival rates, a repeating daily sun exposure pattern, and a
lossy delayed uplink channel. The synthetic samples drive the real detection
state machine, every detected session is charged against the battery and
encoded through the real uplink codec, and the report pairs detector output
with ground truth for accuracy scoring.

Everything is reproducible: a scenario plus a seed yields a byte-identical
report.
"""

from __future__ import annotations

import bisect
import csv
import enum
import json
import math
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .codec import encode_envelope, encode_frame
from .detector import (
    ActivityDetector,
    DetectorConfig,
    Phase,
    SessionRecord,
    ToFReading,
    variance_series,
)
from .energy import (
    MODE_POWER_MW,
    BatteryState,
    HarvestProfile,
    PowerMode,
    step_energy,
    voltage_of_charge,
)

__all__ = [
    "ChannelModel",
    "DayProfile",
    "Location",
    "Scenario",
    "ScenarioError",
    "SensorSpec",
    "SimReport",
    "default_scenario",
    "merge_ground_truth",
    "run_sim",
    "schedule_day",
    "synth_trace",
    "synth_vibration",
]

SAMPLE_HZ = 5

# One repetition rings the bar like a struck spring: a damped sinusoid on a
# single axis, one rep per second while exercising.
REP_AMPLITUDE_MG = 200.0
REP_TAU_S = 0.4
REP_FREQ_HZ = 1.3

# Incremental cost of one uplink on top of the sampling baseline, taken from
# the measured every-minute transmission average minus the sampling average,
# spread over a 2 s radio burst.
UPLINK_EXTRA_MW = (
    MODE_POWER_MW[PowerMode.SAMPLING_AND_TRANSMISSION] - MODE_POWER_MW[PowerMode.SAMPLING]
)
UPLINK_BURST_S = 2.0
UPLINK_ENERGY_J = UPLINK_EXTRA_MW * UPLINK_BURST_S / 1000.0

PRESENCE_ENERGY_J = MODE_POWER_MW[PowerMode.PRESENCE_DETECTION] * 0.08 / 1000.0

DEFAULT_START_TIME = "2025-01-06T00:00:00Z"


class Location(enum.Enum):
    AT_SENSOR_BAR = "at_sensor_bar"
    ELSEWHERE = "elsewhere"


@dataclass(frozen=True)
class SessionPlan:
    """One planned visit: where the exercising happens and when.

    active_spans are (offset_s, len_s) pairs relative to start_t, ordered,
    non-overlapping, with gaps shorter than the 35 s calm timeout so the
    whole plan is a single ground-truth session.
    """

    start_t: float
    active_spans: tuple[tuple[float, float], ...]
    reps_per_span: int
    location: Location

    def __post_init__(self) -> None:
        if not self.active_spans:
            raise ValueError("plan needs at least one active span")
        prev_end = None
        total = 0.0
        for off, length in self.active_spans:
            if off < 0 or length <= 0:
                raise ValueError("spans must have offset >= 0 and length > 0")
            if prev_end is not None:
                gap = off - prev_end
                if gap < 0:
                    raise ValueError("spans must be ordered and non-overlapping")
                if gap >= 35.0:
                    raise ValueError("gap between spans must stay below 35 s")
            prev_end = off + length
            total += length
        if total < 1.0:
            raise ValueError("total active time must be at least 1 s")

    @property
    def end_t(self) -> float:
        off, length = self.active_spans[-1]
        return self.start_t + off + length

    @property
    def span_s(self) -> float:
        return self.end_t - self.start_t


@dataclass(frozen=True)
class DayProfile:
    """Expected visits per hour plus the session length distribution."""

    hourly_rate: tuple[float, ...]
    mean_len_s: float = 22.0
    sd_len_s: float = 8.0

    def __post_init__(self) -> None:
        if len(self.hourly_rate) != 24:
            raise ValueError("hourly_rate needs exactly 24 entries")
        if any(r < 0 for r in self.hourly_rate):
            raise ValueError("hourly rates must be >= 0")
        if self.mean_len_s <= 0:
            raise ValueError("mean_len_s must be > 0")


@dataclass(frozen=True)
class ChannelModel:
    """Lossy fixed-delay uplink path between sensor and network server."""

    loss_prob: float = 0.0
    latency_s: float = 2.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ValueError("loss_prob must be in [0, 1]")
        if self.latency_s < 0:
            raise ValueError("latency_s must be >= 0")


def _rep_burst(samples: np.ndarray, rep_start: float, rng_axis: int = 0) -> None:
    """Add one damped-oscillation repetition starting at rep_start (seconds)."""
    n = samples.shape[0]
    i0 = max(0, math.ceil(rep_start * SAMPLE_HZ - 1e-9))
    i1 = min(n - 1, math.floor((rep_start + 1.0) * SAMPLE_HZ - 1e-9))
    if i1 < i0:
        return
    idx = np.arange(i0, i1 + 1)
    dt = idx / SAMPLE_HZ - rep_start
    samples[idx, rng_axis] += (
        REP_AMPLITUDE_MG * np.exp(-dt / REP_TAU_S) * np.sin(2.0 * np.pi * REP_FREQ_HZ * dt)
    )


def synth_trace(
    plans: list[SessionPlan],
    total_s: float,
    quiet_std_mg: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Synthesize a 5 Hz (N, 3) trace covering [0, total_s] on the grid.

    Quiet periods are white noise; every second inside an active span adds
    one repetition burst to the x axis. Deterministic given the generator
    state.
    """
    if quiet_std_mg <= 0:
        raise ValueError("quiet_std_mg must be > 0")
    n = int(round(total_s * SAMPLE_HZ)) + 1
    samples = rng.normal(0.0, quiet_std_mg, size=(n, 3))
    for plan in plans:
        reps_left = plan.reps_per_span if plan.reps_per_span > 0 else None
        for off, length in plan.active_spans:
            span_start = plan.start_t + off
            for k in range(int(math.floor(length))):
                if reps_left is not None and reps_left <= 0:
                    break
                _rep_burst(samples, span_start + k)
                if reps_left is not None:
                    reps_left -= 1
    return samples


def synth_vibration(
    plan: SessionPlan,
    quiet_std_mg: float = 2.0,
    seed: int = 0,
    lead_s: float = 10.0,
    tail_s: float = 40.0,
) -> np.ndarray:
    """Single-plan trace with quiet lead-in and enough tail to finalize."""
    rng = np.random.default_rng(seed)
    total = plan.end_t + tail_s
    shifted = SessionPlan(
        start_t=plan.start_t + lead_s,
        active_spans=plan.active_spans,
        reps_per_span=plan.reps_per_span,
        location=plan.location,
    )
    return synth_trace([shifted], total + lead_s, quiet_std_mg, rng)


def _truncated_normal(rng: np.random.Generator, mean: float, sd: float, minimum: float) -> float:
    for _ in range(64):
        x = rng.normal(mean, sd)
        if x >= minimum:
            return x
    return minimum


def schedule_day(
    profile: DayProfile,
    rng: np.random.Generator,
    break_prob: float = 0.3,
) -> list[SessionPlan]:
    """Draw one day of session plans from the hourly arrival profile.

    Per hour the session count is Poisson with that hour's rate; lengths
    come from a truncated normal (minimum 10 s). Longer sessions may get a
    single rest break well below the calm timeout. Sessions can overlap:
    several people exercise at once on busy hours.
    """
    plans: list[SessionPlan] = []
    for hour, rate in enumerate(profile.hourly_rate):
        count = int(rng.poisson(rate)) if rate > 0 else 0
        for _ in range(count):
            length = _truncated_normal(rng, profile.mean_len_s, profile.sd_len_s, 10.0)
            length = float(round(length))
            start = hour * 3600.0 + rng.uniform(0.0, 3600.0)
            start = float(round(start))
            # keep the session plus detector tail inside the day
            start = min(start, 86400.0 - length - 40.0)
            spans: tuple[tuple[float, float], ...]
            if length >= 25.0 and rng.random() < break_prob:
                first = float(round(length * 0.4))
                gap = float(round(rng.uniform(5.0, 20.0)))
                spans = ((0.0, first), (first + gap, length - first))
            else:
                spans = ((0.0, length),)
            location = Location.AT_SENSOR_BAR if rng.random() < 0.5 else Location.ELSEWHERE
            plans.append(SessionPlan(
                start_t=start,
                active_spans=spans,
                reps_per_span=0,
                location=location,
            ))
    plans.sort(key=lambda p: p.start_t)
    return plans


@dataclass(frozen=True)
class GroundTruthSession:
    """A detector-equivalent true session: planned spans merged where the
    calm gap stays below the 35 s timeout (the detector cannot split those)."""

    sensor_id: str
    start_s: float
    end_s: float
    location: Location
    plans_merged: int

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


def merge_ground_truth(
    sensor_id: str,
    plans: list[SessionPlan],
    calm_timeout_s: float = 35.0,
) -> list[GroundTruthSession]:
    """Collapse planned sessions into what the detector can tell apart."""
    if not plans:
        return []
    spans = sorted((p.start_t, p.end_t, p.location) for p in plans)
    merged: list[GroundTruthSession] = []
    cur_start, cur_end, cur_loc = spans[0]
    count = 1
    for start, end, loc in spans[1:]:
        if start - cur_end < calm_timeout_s:
            cur_end = max(cur_end, end)
            count += 1
        else:
            merged.append(GroundTruthSession(sensor_id, cur_start, cur_end, cur_loc, count))
            cur_start, cur_end, cur_loc = start, end, loc
            count = 1
    merged.append(GroundTruthSession(sensor_id, cur_start, cur_end, cur_loc, count))
    return merged


@dataclass(frozen=True)
class SensorSpec:
    sensor_id: str
    day_profile: str


class ScenarioError(ValueError):
    """Scenario validation failure; collects every problem found."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass(frozen=True)
class Scenario:
    sensors: tuple[SensorSpec, ...]
    day_profiles: dict[str, DayProfile]
    harvest_profile: HarvestProfile
    channel: ChannelModel
    days: int
    seed: int
    quiet_std_mg: float = 2.0
    battery_start_frac: float = 0.75
    start_time: str = DEFAULT_START_TIME
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    # Sensors listed here skip schedule_day and run exactly these plans
    # (absolute sim time); used for controlled accuracy experiments.
    fixed_plans: dict[str, tuple[SessionPlan, ...]] = field(default_factory=dict)

    def validate(self) -> None:
        problems: list[str] = []
        if self.days < 1:
            problems.append("days must be >= 1")
        if not self.sensors:
            problems.append("at least one sensor is required")
        seen = set()
        for spec in self.sensors:
            if spec.sensor_id in seen:
                problems.append(f"duplicate sensor_id {spec.sensor_id}")
            seen.add(spec.sensor_id)
            if len(spec.sensor_id) != 8 or any(c not in "0123456789abcdef" for c in spec.sensor_id):
                problems.append(f"sensor_id {spec.sensor_id!r} must be 8 hex chars")
            if spec.day_profile not in self.day_profiles:
                problems.append(f"sensor {spec.sensor_id} references unknown profile "
                                f"{spec.day_profile!r}")
        if self.quiet_std_mg <= 0:
            problems.append("quiet_std_mg must be > 0")
        if not 0.0 <= self.battery_start_frac <= 1.0:
            problems.append("battery_start_frac must be in [0, 1]")
        for start, end in self.harvest_profile.sun_intervals:
            if start % 60 or end % 60:
                problems.append("sun interval endpoints must be whole minutes")
        try:
            _parse_rfc3339(self.start_time)
        except ValueError:
            problems.append(f"start_time {self.start_time!r} is not RFC 3339")
        if problems:
            raise ScenarioError(problems)

    @classmethod
    def from_dict(cls, raw: dict) -> "Scenario":
        problems: list[str] = []

        def grab(key, default=None, required=False):
            if key in raw:
                return raw[key]
            if required:
                problems.append(f"missing required field {key!r}")
            return default

        sensors_raw = grab("sensors", [], required=True) or []
        profiles_raw = grab("day_profiles", {}, required=True) or {}
        harvest_raw = grab("harvest_profile", {}) or {}
        channel_raw = grab("channel", {}) or {}
        days = grab("days", None, required=True)
        seed = grab("seed", 0)

        sensors = []
        for entry in sensors_raw:
            try:
                sensors.append(SensorSpec(str(entry["sensor_id"]), str(entry["day_profile"])))
            except (TypeError, KeyError):
                problems.append(f"sensor entry {entry!r} needs sensor_id and day_profile")
        profiles = {}
        for name, p in profiles_raw.items():
            try:
                profiles[name] = DayProfile(
                    hourly_rate=tuple(float(r) for r in p["hourly_rate"]),
                    mean_len_s=float(p.get("mean_len_s", 22.0)),
                    sd_len_s=float(p.get("sd_len_s", 8.0)),
                )
            except (TypeError, KeyError, ValueError) as exc:
                problems.append(f"day profile {name!r}: {exc}")
        try:
            harvest = HarvestProfile(
                sun_intervals=tuple((float(a), float(b))
                                    for a, b in harvest_raw.get("sun_intervals", [])),
                net_rate_j_per_h=float(harvest_raw.get("net_rate_j_per_h", 28.7)),
            )
        except (TypeError, ValueError) as exc:
            problems.append(f"harvest_profile: {exc}")
            harvest = HarvestProfile()
        try:
            channel = ChannelModel(
                loss_prob=float(channel_raw.get("loss_prob", 0.0)),
                latency_s=float(channel_raw.get("latency_s", 2.0)),
            )
        except (TypeError, ValueError) as exc:
            problems.append(f"channel: {exc}")
            channel = ChannelModel()
        if problems:
            raise ScenarioError(problems)

        scenario = cls(
            sensors=tuple(sensors),
            day_profiles=profiles,
            harvest_profile=harvest,
            channel=channel,
            days=int(days),
            seed=int(seed),
            quiet_std_mg=float(raw.get("quiet_std_mg", 2.0)),
            battery_start_frac=float(raw.get("battery_start_frac", 0.75)),
            start_time=str(raw.get("start_time", DEFAULT_START_TIME)),
        )
        scenario.validate()
        return scenario

    def to_dict(self) -> dict:
        return {
            "sensors": [{"sensor_id": s.sensor_id, "day_profile": s.day_profile}
                        for s in self.sensors],
            "day_profiles": {
                name: {
                    "hourly_rate": list(p.hourly_rate),
                    "mean_len_s": p.mean_len_s,
                    "sd_len_s": p.sd_len_s,
                } for name, p in sorted(self.day_profiles.items())
            },
            "harvest_profile": {
                "sun_intervals": [[a, b] for a, b in self.harvest_profile.sun_intervals],
                "net_rate_j_per_h": self.harvest_profile.net_rate_j_per_h,
            },
            "channel": {
                "loss_prob": self.channel.loss_prob,
                "latency_s": self.channel.latency_s,
            },
            "days": self.days,
            "seed": self.seed,
            "quiet_std_mg": self.quiet_std_mg,
            "battery_start_frac": self.battery_start_frac,
            "start_time": self.start_time,
        }


def default_scenario(days: int = 7, seed: int = 42, n_sensors: int = 3) -> Scenario:
    """Three parks, midday and evening peaks, average winter sun."""
    base = [0.0, 0.0, 0.0, 0.0, 0.0, 0.2, 0.5, 1.0, 2.0, 2.5, 3.0, 4.0,
            6.0, 5.0, 3.0, 2.5, 3.0, 4.0, 7.0, 8.0, 5.0, 2.0, 1.0, 0.3]
    quiet = [r * 0.6 for r in base]
    sensors = tuple(SensorSpec(f"0a0000c{i+1}", "busy" if i == 0 else "quiet")
                    for i in range(n_sensors))
    return Scenario(
        sensors=sensors,
        day_profiles={
            "busy": DayProfile(hourly_rate=tuple(base)),
            "quiet": DayProfile(hourly_rate=tuple(quiet)),
        },
        harvest_profile=HarvestProfile(sun_intervals=((36000.0, 52200.0),)),
        channel=ChannelModel(loss_prob=0.0, latency_s=2.0),
        days=days,
        seed=seed,
    )


@dataclass
class DeliveredUplink:
    sensor_id: str
    end_t: float
    received_at: str
    duration_s: int
    presence: bool
    break_count: int
    battery_mv: int
    rssi_dbm: int
    snr_db: float


@dataclass
class AccuracyRow:
    sensor_id: str
    gt_start_s: float
    gt_end_s: float
    gt_duration_s: float
    det_duration_s: int | None
    duration_error_s: float | None
    matched: bool


@dataclass
class EnergyLedger:
    initial_j: float
    final_j: float
    harvest_j: float
    load_j: float
    clamped_j: float
    depleted_minutes: int

    @property
    def residual_j(self) -> float:
        """Conservation residual; zero (to rounding) absent clamping."""
        return self.final_j - self.initial_j - self.harvest_j + self.load_j + self.clamped_j


@dataclass
class SensorResult:
    sensor_id: str
    ground_truth: list[GroundTruthSession]
    detected: list[SessionRecord]
    delivered: list[DeliveredUplink]
    lost_uplinks: int
    battery_trace: list[tuple[float, float, float]]
    accuracy: list[AccuracyRow]
    ledger: EnergyLedger

    @property
    def matched_rows(self) -> list[AccuracyRow]:
        return [r for r in self.accuracy if r.matched]

    @property
    def mean_abs_duration_error_s(self) -> float | None:
        rows = [r for r in self.matched_rows if r.duration_error_s is not None]
        if not rows:
            return None
        return sum(abs(r.duration_error_s) for r in rows) / len(rows)

    @property
    def detection_rate(self) -> float | None:
        if not self.ground_truth:
            return None
        return len(self.matched_rows) / len(self.ground_truth)

    @property
    def false_sessions(self) -> int:
        return len(self.detected) - len(self.matched_rows)


@dataclass
class SimReport:
    scenario: dict
    sensors: list[SensorResult]

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "sensors": [
                {
                    "sensor_id": s.sensor_id,
                    "ground_truth": [
                        {
                            "start_s": g.start_s,
                            "end_s": g.end_s,
                            "duration_s": g.duration_s,
                            "location": g.location.value,
                            "plans_merged": g.plans_merged,
                        } for g in s.ground_truth
                    ],
                    "detected": [
                        {
                            "end_t": r.end_t,
                            "duration_s": r.duration_s,
                            "presence": r.presence,
                            "break_count": r.break_count,
                        } for r in s.detected
                    ],
                    "delivered": [asdict(d) for d in s.delivered],
                    "lost_uplinks": s.lost_uplinks,
                    "battery_trace": [[t, q, v] for t, q, v in s.battery_trace],
                    "accuracy": [asdict(a) for a in s.accuracy],
                    "summary": {
                        "detection_rate": s.detection_rate,
                        "mean_abs_duration_error_s": s.mean_abs_duration_error_s,
                        "false_sessions": s.false_sessions,
                    },
                    "energy": {
                        "initial_j": s.ledger.initial_j,
                        "final_j": s.ledger.final_j,
                        "harvest_j": s.ledger.harvest_j,
                        "load_j": s.ledger.load_j,
                        "clamped_j": s.ledger.clamped_j,
                        "depleted_minutes": s.ledger.depleted_minutes,
                        "residual_j": s.ledger.residual_j,
                    },
                } for s in self.sensors
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def envelopes(self) -> list[dict]:
        """Webhook envelopes for every delivered uplink, in receive order."""
        envs = []
        for s in self.sensors:
            for d in s.delivered:
                frame = encode_frame(d.duration_s, d.presence, d.break_count, d.battery_mv)
                envs.append(encode_envelope(
                    s.sensor_id, d.received_at, frame,
                    rssi_dbm=d.rssi_dbm, snr_db=d.snr_db,
                ))
        envs.sort(key=lambda e: e["received_at"])
        return envs

    def write_outputs(self, out_dir: str | Path) -> list[Path]:
        """Write report.json, the four CSV tables, and the uplink log."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []

        report_path = out / "report.json"
        report_path.write_text(self.to_json())
        written.append(report_path)

        def table(name: str, header: list[str], rows) -> None:
            path = out / name
            with path.open("w", newline="") as fp:
                w = csv.writer(fp)
                w.writerow(header)
                w.writerows(rows)
            written.append(path)

        table(
            "ground_truth.csv",
            ["sensor_id", "start_s", "end_s", "duration_s", "location", "plans_merged"],
            ((s.sensor_id, g.start_s, g.end_s, g.duration_s, g.location.value, g.plans_merged)
             for s in self.sensors for g in s.ground_truth),
        )
        table(
            "delivered.csv",
            ["sensor_id", "end_s", "received_at", "duration_s", "presence",
             "break_count", "battery_mv", "rssi_dbm", "snr_db"],
            ((d.sensor_id, d.end_t, d.received_at, d.duration_s, int(d.presence),
              d.break_count, d.battery_mv, d.rssi_dbm, d.snr_db)
             for s in self.sensors for d in s.delivered),
        )
        table(
            "battery_trace.csv",
            ["sensor_id", "t_s", "charge_j", "voltage_v"],
            ((s.sensor_id, t, q, v) for s in self.sensors for t, q, v in s.battery_trace),
        )
        table(
            "accuracy.csv",
            ["sensor_id", "gt_start_s", "gt_end_s", "gt_duration_s",
             "det_duration_s", "duration_error_s", "matched"],
            ((a.sensor_id, a.gt_start_s, a.gt_end_s, a.gt_duration_s,
              "" if a.det_duration_s is None else a.det_duration_s,
              "" if a.duration_error_s is None else a.duration_error_s,
              int(a.matched))
             for s in self.sensors for a in s.accuracy),
        )

        log_path = out / "uplinks.jsonl"
        with log_path.open("w") as fp:
            for env in self.envelopes():
                fp.write(json.dumps(env, sort_keys=True) + "\n")
        written.append(log_path)
        return written


def _parse_rfc3339(text: str) -> datetime:
    dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        raise ValueError(f"timestamp {text!r} lacks a UTC offset")
    return dt.astimezone(timezone.utc)


def _format_rfc3339(dt: datetime) -> str:
    dt = dt.astimezone(timezone.utc)
    if dt.microsecond:
        body = dt.strftime("%Y-%m-%dT%H:%M:%S.%f").rstrip("0")
    else:
        body = dt.strftime("%Y-%m-%dT%H:%M:%S")
    return body + "Z"


def _match_accuracy(
    sensor_id: str,
    gt: list[GroundTruthSession],
    detected: list[SessionRecord],
    calm_timeout_s: float,
    tolerance_s: float = 3.0,
) -> list[AccuracyRow]:
    """Greedy interval matching of detector output against ground truth."""
    det_spans = []
    for r in detected:
        last_active = r.end_t - calm_timeout_s
        first_active = last_active - (r.duration_s - 1)
        det_spans.append((first_active, last_active, r))
    det_spans.sort()
    rows: list[AccuracyRow] = []
    used = [False] * len(det_spans)
    di = 0
    for g in gt:
        match = None
        for j in range(di, len(det_spans)):
            if used[j]:
                continue
            first, last, rec = det_spans[j]
            if first > g.end_s + tolerance_s:
                break
            if last >= g.start_s - tolerance_s:
                match = (j, rec)
                break
        if match is None:
            rows.append(AccuracyRow(sensor_id, g.start_s, g.end_s, g.duration_s,
                                    None, None, False))
        else:
            j, rec = match
            used[j] = True
            while di < len(det_spans) and used[di]:
                di += 1
            rows.append(AccuracyRow(
                sensor_id, g.start_s, g.end_s, g.duration_s,
                rec.duration_s, rec.duration_s - g.duration_s, True,
            ))
    return rows


def _simulate_sensor(
    spec: SensorSpec,
    scenario: Scenario,
    rng_sched: np.random.Generator,
    rng_synth: np.random.Generator,
    rng_chan: np.random.Generator,
) -> SensorResult:
    cfg = scenario.detector
    profile = scenario.day_profiles[spec.day_profile]
    total_s = scenario.days * 86400

    if spec.sensor_id in scenario.fixed_plans:
        plans = list(scenario.fixed_plans[spec.sensor_id])
    else:
        plans = []
        for day in range(scenario.days):
            for p in schedule_day(profile, rng_sched):
                plans.append(SessionPlan(
                    start_t=p.start_t + day * 86400.0,
                    active_spans=p.active_spans,
                    reps_per_span=p.reps_per_span,
                    location=p.location,
                ))
    ground_truth = merge_ground_truth(spec.sensor_id, plans, cfg.calm_timeout_s)
    gt_starts = [g.start_s for g in ground_truth]

    samples = synth_trace(plans, float(total_s), scenario.quiet_std_mg, rng_synth)
    variances = variance_series(samples, cfg.window_len, SAMPLE_HZ)
    del samples

    det = ActivityDetector(cfg, sensor_id=int(spec.sensor_id, 16))
    battery = BatteryState.at_fraction(scenario.battery_start_frac)
    harvest = scenario.harvest_profile
    start_dt = _parse_rfc3339(scenario.start_time)

    detected: list[SessionRecord] = []
    delivered: list[DeliveredUplink] = []
    lost = 0
    trace: list[tuple[float, float, float]] = []
    harvest_j = 0.0
    load_j = 0.0
    clamped_j = 0.0
    depleted_minutes = 0
    initial_j = battery.charge_j
    base_mw = MODE_POWER_MW[PowerMode.SAMPLING]
    offline_until = -1.0

    def tof_at(now: float) -> ToFReading:
        i = bisect.bisect_right(gt_starts, now) - 1
        if i >= 0:
            g = ground_truth[i]
            if now <= g.end_s + 2.0:
                if g.location is Location.AT_SENSOR_BAR:
                    return ToFReading(range_m=1.2, valid=True)
                return ToFReading(range_m=4.0, valid=True)
        return ToFReading(range_m=0.0, valid=False)

    for minute in range(scenario.days * 1440):
        t0 = minute * 60.0
        online = not battery.depleted
        events_j = 0.0
        if online:
            for n in range(int(t0), int(t0) + 60):
                if n < 2 or n <= offline_until:
                    continue
                was_idle = det.phase is Phase.IDLE
                rec = det.evaluate_variance(float(n), float(variances[n - 2]))
                if was_idle and det.phase is Phase.ACTIVE:
                    det.presence_cascade(tof_at(float(n)))
                    events_j += PRESENCE_ENERGY_J
                if rec is not None:
                    detected.append(rec)
                    events_j += UPLINK_ENERGY_J
                    battery_mv = int(round(voltage_of_charge(battery) * 1000.0))
                    if rng_chan.random() >= scenario.channel.loss_prob:
                        received = start_dt + timedelta(
                            seconds=rec.end_t + scenario.channel.latency_s)
                        delivered.append(DeliveredUplink(
                            sensor_id=spec.sensor_id,
                            end_t=rec.end_t,
                            received_at=_format_rfc3339(received),
                            duration_s=rec.duration_s,
                            presence=rec.presence,
                            break_count=rec.break_count,
                            battery_mv=battery_mv,
                            rssi_dbm=int(-95 - rng_chan.integers(0, 15)),
                            snr_db=float(round(rng_chan.uniform(-2.0, 9.0), 1)),
                        ))
                    else:
                        lost += 1
        else:
            depleted_minutes += 1
            det.reset()
            offline_until = t0 + 60.0 + 2.0  # ring buffer refills after recovery

        load_mw = (base_mw if online else 0.0) + events_j * 1000.0 / 60.0
        in_sun = harvest.in_sun(t0)
        before = battery.charge_j
        battery = step_energy(battery, load_mw, 60.0, harvesting=in_sun, profile=harvest)
        step_load = load_mw * 60.0 / 1000.0
        step_harvest = (harvest.net_rate_j_per_h * 60.0 / 3600.0 + step_load) if in_sun else 0.0
        load_j += step_load
        harvest_j += step_harvest
        clamped_j += (before - step_load + step_harvest) - battery.charge_j
        trace.append((t0 + 60.0, battery.charge_j, voltage_of_charge(battery)))

    accuracy = _match_accuracy(spec.sensor_id, ground_truth, detected, cfg.calm_timeout_s)
    ledger = EnergyLedger(
        initial_j=initial_j,
        final_j=battery.charge_j,
        harvest_j=harvest_j,
        load_j=load_j,
        clamped_j=clamped_j,
        depleted_minutes=depleted_minutes,
    )
    return SensorResult(
        sensor_id=spec.sensor_id,
        ground_truth=ground_truth,
        detected=detected,
        delivered=delivered,
        lost_uplinks=lost,
        battery_trace=trace,
        accuracy=accuracy,
        ledger=ledger,
    )


def run_sim(scenario: Scenario) -> SimReport:
    """Run the end-to-end simulation for every sensor in the scenario."""
    scenario.validate()
    results = []
    for i, spec in enumerate(scenario.sensors):
        rng_sched = np.random.default_rng(np.random.SeedSequence([scenario.seed, i, 0]))
        rng_synth = np.random.default_rng(np.random.SeedSequence([scenario.seed, i, 1]))
        rng_chan = np.random.default_rng(np.random.SeedSequence([scenario.seed, i, 2]))
        results.append(_simulate_sensor(spec, scenario, rng_sched, rng_synth, rng_chan))
    return SimReport(scenario=scenario.to_dict(), sensors=results)
