"""parksense: desk-scale emulation of a self-sustaining workout-park monitor.

Subsystems:

- detector: vibration-variance activity detection and presence cascade
- energy: power modes, coulomb-counted battery, solar harvest balance
- codec: binary uplink frames and webhook envelopes
- sim: deterministic multi-sensor simulation with ground truth
- store / service: durable ingestion and the query HTTP API
- cli: the `parksense` command
"""

from .codec import FrameFields, decode_envelope, decode_frame, encode_envelope, encode_frame
from .detector import (
    AccelSample,
    ActivityDetector,
    DetectorConfig,
    SessionRecord,
    ToFReading,
    replay_trace,
    window_variance,
)
from .energy import (
    BatteryState,
    HarvestProfile,
    PowerMode,
    battery_runtime_days,
    daily_balance_j,
    session_energy_j,
    simulate_energy,
    step_energy,
    voltage_of_charge,
)
from .sim import Scenario, SimReport, default_scenario, run_sim, schedule_day, synth_vibration

__version__ = "0.1.0"

__all__ = [
    "AccelSample",
    "ActivityDetector",
    "BatteryState",
    "DetectorConfig",
    "FrameFields",
    "HarvestProfile",
    "PowerMode",
    "Scenario",
    "SessionRecord",
    "SimReport",
    "ToFReading",
    "battery_runtime_days",
    "daily_balance_j",
    "decode_envelope",
    "decode_frame",
    "default_scenario",
    "encode_envelope",
    "encode_frame",
    "replay_trace",
    "run_sim",
    "schedule_day",
    "session_energy_j",
    "simulate_energy",
    "step_energy",
    "synth_vibration",
    "voltage_of_charge",
    "window_variance",
    "__version__",
]
