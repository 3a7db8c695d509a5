"""Vibration-based activity detection for instrumented workout bars.

A 3-axis accelerometer mounted on the steel structure samples at 5 Hz into a
ten-sample ring buffer. Once per second the detector compares the variance of
the buffered samples against an adaptive baseline; elevated variance marks the
second as active. Contiguous active time (spanning calm gaps shorter than the
calm timeout) forms a session, finalized after 35 s of calm and reported only
if it lasted at least 10 s. A time-of-flight ranger, woken once per session
start, confirms whether a person is within 2 m of the instrumented bar.

The detector is deterministic: identical sample streams and configuration
produce identical session records. One detector instance equals one sensor;
instances share no state.
"""

from __future__ import annotations

import csv
import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

import numpy as np

__all__ = [
    "AccelSample",
    "ActivityDetector",
    "DetectorConfig",
    "InsufficientDataError",
    "Phase",
    "SessionRecord",
    "StreamDiscontinuityError",
    "ToFReading",
    "iter_trace_csv",
    "replay_trace",
    "window_variance",
    "PRESENCE_RANGE_M",
    "PRESENCE_SENSING_S",
]

# ToF confirmation: person counts as present within this range, and each
# wake-check occupies the ranger for this long.
PRESENCE_RANGE_M = 2.0
PRESENCE_SENSING_S = 0.08

# Timestamp jitter tolerated when checking the 5 Hz sample grid.
_GRID_TOL_S = 1e-6


class StreamDiscontinuityError(ValueError):
    """Sample timestamp does not follow the previous one by one period.

    The caller must reset the detector before feeding more samples.
    """


class InsufficientDataError(ValueError):
    """Operation needs a full sample window and the buffer is not full yet."""


@dataclass(slots=True)
class AccelSample:
    """One 3-axis accelerometer reading.

    t is monotonic time in seconds on the 5 Hz grid; axis values are in
    milli-g, bounded by the configured full-scale range.
    """

    t: float
    ax: float
    ay: float
    az: float


@dataclass(slots=True)
class ToFReading:
    """Range measurement from the time-of-flight sensor, in meters."""

    range_m: float
    valid: bool


class Phase(enum.Enum):
    IDLE = "idle"
    ACTIVE = "active"


@dataclass(frozen=True)
class DetectorConfig:
    """Tuning knobs for the detection state machine.

    Defaults match the deployed firmware behaviour: 5 Hz sampling into a
    ten-sample window, evaluated once per second, 35 s calm timeout, 10 s
    minimum session. threshold_factor scales the adaptive quiet-variance
    baseline into the activity threshold; variance_floor keeps that baseline
    sane on a dead-quiet startup.
    """

    sample_rate_hz: float = 5.0
    window_len: int = 10
    eval_period_s: float = 1.0
    calm_timeout_s: float = 35.0
    min_session_s: float = 10.0
    threshold_factor: float = 5.0
    baseline_alpha: float = 0.05
    variance_floor: float = 4.0
    full_scale_mg: float = 2000.0
    # Calm gaps at least this long (but shorter than calm_timeout_s) count
    # as intra-session breaks.
    break_gap_s: float = 5.0

    def __post_init__(self) -> None:
        problems = []
        if self.sample_rate_hz <= 0:
            problems.append("sample_rate_hz must be > 0")
        if self.window_len < 2:
            problems.append("window_len must be >= 2")
        if self.sample_rate_hz > 0 and self.window_len / self.sample_rate_hz < self.eval_period_s:
            problems.append("window must span at least one evaluation period")
        if self.calm_timeout_s <= self.min_session_s:
            problems.append("calm_timeout_s must exceed min_session_s")
        if self.threshold_factor <= 1.0:
            problems.append("threshold_factor must be > 1")
        if self.variance_floor <= 0:
            problems.append("variance_floor must be > 0")
        if not 0.0 < self.baseline_alpha <= 1.0:
            problems.append("baseline_alpha must be in (0, 1]")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def sample_period_s(self) -> float:
        return 1.0 / self.sample_rate_hz


@dataclass(slots=True)
class SessionRecord:
    """A finalized exercise session, ready for uplink.

    duration_s counts whole seconds from the first to the last active
    evaluation inclusive; break_count is the number of intra-session calm
    gaps; end_t is the local monotonic time at which the session was
    finalized (35 s after the last activity).
    """

    sensor_id: int
    duration_s: int
    presence: bool
    break_count: int
    end_t: float


def window_variance(window: Iterable[AccelSample], window_len: int = 10) -> float:
    """Total variance of the buffered samples: var(ax) + var(ay) + var(az).

    Population variance (divide by N) per axis, summed over the three axes.
    Rotation-invariant, so mounting orientation does not matter. Raises
    InsufficientDataError until the window holds window_len samples.
    """
    arr = np.array([(s.ax, s.ay, s.az) for s in window], dtype=np.float64)
    if arr.shape[0] < window_len:
        raise InsufficientDataError(
            f"window has {arr.shape[0]} samples, needs {window_len}"
        )
    return float(arr.var(axis=0).sum())


def variance_series(samples: np.ndarray, window_len: int = 10, hop: int = 5) -> np.ndarray:
    """Window variances for every evaluation instant of a whole trace.

    samples is an (N, 3) array on the 5 Hz grid starting at t = 0. Entry k of
    the result is the variance of the window ending at sample index
    hop * (k + 2), i.e. the window evaluated at second k + 2 — the first
    second at which the buffer is full. Numerically identical to feeding the
    same samples through window_variance one second at a time.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[1] != 3:
        raise ValueError("samples must be an (N, 3) array")
    n = samples.shape[0]
    if n < window_len + 1:
        return np.empty(0, dtype=np.float64)
    windows = np.lib.stride_tricks.sliding_window_view(samples, window_len, axis=0)
    # windows[i] holds samples i .. i+window_len-1; the window evaluated at
    # second k+2 ends at index hop*(k+2), hence starts at hop*(k+2)-window_len+1.
    first = 2 * hop - window_len + 1
    picked = windows[first::hop]
    return picked.var(axis=2).sum(axis=1)


class ActivityDetector:
    """Clock-driven state machine turning accelerometer samples into sessions.

    Usage: call push_sample for every 5 Hz sample, call evaluate_second once
    per second (after the window has filled, a 2 s warm-up), and call
    presence_cascade exactly once whenever evaluate_second flips the phase
    from idle to active. evaluate_second returns the finalized SessionRecord
    when a session ends, else None.
    """

    def __init__(self, config: DetectorConfig | None = None, sensor_id: int = 0):
        self.config = config or DetectorConfig()
        if not 0 <= sensor_id <= 0xFFFFFFFF:
            raise ValueError("sensor_id must fit in 32 bits")
        self.sensor_id = sensor_id
        self.window: deque[AccelSample] = deque(maxlen=self.config.window_len)
        self.phase = Phase.IDLE
        self.baseline_var: float | None = None
        self.first_active_t = 0.0
        self.last_active_t = 0.0
        self.break_count = 0
        self.presence = False
        self._last_t: float | None = None

    def reset(self) -> None:
        """Drop all buffered samples and return to idle (stream restart)."""
        self.window.clear()
        self.phase = Phase.IDLE
        self.first_active_t = 0.0
        self.last_active_t = 0.0
        self.break_count = 0
        self.presence = False
        self._last_t = None
        # baseline_var survives a reset: the mechanical environment did not
        # change just because the stream did.

    @property
    def window_full(self) -> bool:
        return len(self.window) == self.config.window_len

    def push_sample(self, s: AccelSample) -> None:
        """Append a sample to the ring buffer, evicting the oldest if full.

        Never changes phase. Rejects samples off the 5 Hz grid with
        StreamDiscontinuityError; the caller must reset() before continuing.
        """
        if abs(s.ax) > self.config.full_scale_mg or abs(s.ay) > self.config.full_scale_mg \
                or abs(s.az) > self.config.full_scale_mg:
            raise ValueError(
                f"sample at t={s.t} exceeds full-scale range ±{self.config.full_scale_mg} mg"
            )
        if self._last_t is not None:
            expected = self._last_t + self.config.sample_period_s
            if abs(s.t - expected) > _GRID_TOL_S:
                raise StreamDiscontinuityError(
                    f"sample at t={s.t} does not follow t={self._last_t} "
                    f"by one period ({self.config.sample_period_s} s)"
                )
        self.window.append(s)
        self._last_t = s.t

    def window_variance(self) -> float:
        return window_variance(self.window, self.config.window_len)

    def evaluate_second(self, now: float) -> SessionRecord | None:
        """Run one 1 Hz evaluation of the buffered samples at time `now`.

        Returns the finalized SessionRecord if a session just ended and met
        the minimum duration, else None. Raises InsufficientDataError while
        the window is still filling.
        """
        if not self.window_full:
            raise InsufficientDataError(
                f"evaluation at t={now} before the sample window filled"
            )
        return self.evaluate_variance(now, self.window_variance())

    def evaluate_variance(self, now: float, variance: float) -> SessionRecord | None:
        """Advance the state machine by one evaluated second.

        Entry point for callers that compute window variances out of band
        (the simulator vectorizes them over whole traces); evaluate_second
        is this plus the variance of the internal ring buffer.
        """
        cfg = self.config
        if self.baseline_var is None:
            # First full window seeds the quiet baseline (clamped to the
            # floor); by construction this first second is never active.
            self.baseline_var = max(cfg.variance_floor, variance)

        active = variance > max(cfg.variance_floor, cfg.threshold_factor * self.baseline_var)

        if self.phase is Phase.IDLE:
            if active:
                self.phase = Phase.ACTIVE
                self.first_active_t = now
                self.last_active_t = now
                self.break_count = 0
                self.presence = False
            else:
                updated = (1.0 - cfg.baseline_alpha) * self.baseline_var \
                    + cfg.baseline_alpha * variance
                self.baseline_var = max(cfg.variance_floor, updated)
            return None

        # Active phase: baseline is frozen so the activity cannot poison it.
        if active:
            if now - self.last_active_t >= cfg.break_gap_s:
                self.break_count += 1
            self.last_active_t = now
            return None
        if now - self.last_active_t >= cfg.calm_timeout_s:
            record = self._finalize(now)
            self.phase = Phase.IDLE
            self.presence = False
            return record
        return None

    def _finalize(self, now: float) -> SessionRecord | None:
        cfg = self.config
        duration = self.last_active_t - self.first_active_t + cfg.eval_period_s
        if duration < cfg.min_session_s:
            return None
        return SessionRecord(
            sensor_id=self.sensor_id,
            duration_s=int(round(duration)),
            presence=self.presence,
            break_count=self.break_count,
            end_t=now,
        )

    def presence_cascade(self, tof: ToFReading) -> tuple[bool, float]:
        """Confirm presence at the instrumented bar via a one-shot ToF check.

        Call exactly once per idle-to-active transition. Returns the presence
        verdict and the active-sensing time to charge against the presence
        power mode. An invalid reading is simply "not present"; the sensing
        energy is spent either way.
        """
        presence = bool(tof.valid and tof.range_m <= PRESENCE_RANGE_M)
        self.presence = presence
        return presence, PRESENCE_SENSING_S


def replay_trace(
    samples: Iterable[AccelSample],
    config: DetectorConfig | None = None,
    sensor_id: int = 0,
    tof: ToFReading | None = None,
) -> list[SessionRecord]:
    """Feed a recorded sample stream through a fresh detector.

    Evaluates at every whole second once the window is full. If a ToF
    reading is supplied it is replayed at each session start; otherwise
    sessions carry presence=False (trace files carry no ranging data).
    """
    det = ActivityDetector(config, sensor_id=sensor_id)
    out: list[SessionRecord] = []
    for s in samples:
        det.push_sample(s)
        if not det.window_full:
            continue
        frac = s.t - math.floor(s.t)
        if min(frac, 1.0 - frac) > _GRID_TOL_S:
            continue
        was_idle = det.phase is Phase.IDLE
        rec = det.evaluate_second(round(s.t))
        if was_idle and det.phase is Phase.ACTIVE and tof is not None:
            det.presence_cascade(tof)
        if rec is not None:
            out.append(rec)
    return out


TRACE_HEADER = ["t_s", "ax_mg", "ay_mg", "az_mg"]


def iter_trace_csv(fp: TextIO) -> Iterator[AccelSample]:
    """Parse a trace CSV (header t_s,ax_mg,ay_mg,az_mg) into samples.

    Raises ValueError naming the offending row on any malformed content.
    """
    reader = csv.reader(fp)
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != TRACE_HEADER:
        raise ValueError(f"trace header must be {','.join(TRACE_HEADER)}")
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise ValueError(f"row {lineno}: expected 4 fields, got {len(row)}")
        try:
            t, ax, ay, az = (float(v) for v in row)
        except ValueError as exc:
            raise ValueError(f"row {lineno}: {exc}") from None
        yield AccelSample(t, ax, ay, az)
