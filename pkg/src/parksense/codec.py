"""Binary uplink payload and the webhook envelope a network server delivers.

Frame layout (4 bytes, or 6 with battery telemetry), big-endian on the wire:

    byte 0   version (high nibble, =1) | flags (low nibble)
             flag bit 0: presence confirmed
             flag bit 1: battery voltage appended
    byte 1-2 session duration, seconds, unsigned 16-bit
    byte 3   intra-session break count, unsigned 8-bit
    byte 4-5 battery voltage, millivolts, unsigned 16-bit (iff flag bit 1)

Durations below 10 s are never transmitted, so both encoder and decoder
treat them as invalid. The envelope mirrors what a LoRaWAN network server
posts to an HTTP integration: device id, receive timestamp, base64 payload,
and optional link metrics.
"""

from __future__ import annotations

import base64
import binascii
import re
import struct
from dataclasses import dataclass

__all__ = [
    "FRAME_VERSION",
    "MIN_DURATION_S",
    "CodecError",
    "DecodeError",
    "EncodeError",
    "FrameFields",
    "decode_envelope",
    "decode_frame",
    "encode_envelope",
    "encode_frame",
]

FRAME_VERSION = 1
MIN_DURATION_S = 10
MAX_DURATION_S = 0xFFFF

_FLAG_PRESENCE = 0x01
_FLAG_BATTERY = 0x02
_KNOWN_FLAGS = _FLAG_PRESENCE | _FLAG_BATTERY

_DEVICE_ID_RE = re.compile(r"^[0-9a-f]{8}$")


class CodecError(ValueError):
    """Base for payload encode/decode failures."""

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


class EncodeError(CodecError):
    pass


class DecodeError(CodecError):
    pass


@dataclass(frozen=True)
class FrameFields:
    """Decoded payload content of one uplink."""

    duration_s: int
    presence: bool
    break_count: int
    battery_mv: int | None = None


def encode_frame(
    duration_s: int,
    presence: bool,
    break_count: int,
    battery_mv: int | None = None,
) -> bytes:
    """Pack session fields into the wire format. Deterministic."""
    if not MIN_DURATION_S <= duration_s <= MAX_DURATION_S:
        raise EncodeError(
            "duration",
            f"duration {duration_s} s outside [{MIN_DURATION_S}, {MAX_DURATION_S}]",
        )
    if not 0 <= break_count <= 0xFF:
        raise EncodeError("break_count", f"break_count {break_count} outside [0, 255]")
    flags = _FLAG_PRESENCE if presence else 0
    if battery_mv is not None:
        if not 0 <= battery_mv <= 0xFFFF:
            raise EncodeError("battery", f"battery_mv {battery_mv} outside [0, 65535]")
        flags |= _FLAG_BATTERY
    head = struct.pack(">BHB", (FRAME_VERSION << 4) | flags, duration_s, break_count)
    if battery_mv is not None:
        return head + struct.pack(">H", battery_mv)
    return head


def decode_frame(payload: bytes) -> FrameFields:
    """Exact inverse of encode_frame; rejects anything else.

    Distinct DecodeError reasons: "length", "version", "flags", "duration".
    """
    if len(payload) not in (4, 6):
        raise DecodeError("length", f"frame must be 4 or 6 bytes, got {len(payload)}")
    version = payload[0] >> 4
    flags = payload[0] & 0x0F
    if version != FRAME_VERSION:
        raise DecodeError("version", f"unsupported frame version {version}")
    if flags & ~_KNOWN_FLAGS:
        raise DecodeError("flags", f"unknown flag bits 0x{flags:x}")
    has_battery = bool(flags & _FLAG_BATTERY)
    expected_len = 6 if has_battery else 4
    if len(payload) != expected_len:
        raise DecodeError(
            "length",
            f"flags declare {'a' if has_battery else 'no'} battery field "
            f"but frame is {len(payload)} bytes",
        )
    duration_s, break_count = struct.unpack(">HB", payload[1:4])
    if duration_s < MIN_DURATION_S:
        raise DecodeError("duration", f"duration {duration_s} s below minimum")
    battery_mv = struct.unpack(">H", payload[4:6])[0] if has_battery else None
    return FrameFields(
        duration_s=duration_s,
        presence=bool(flags & _FLAG_PRESENCE),
        break_count=break_count,
        battery_mv=battery_mv,
    )


def encode_envelope(
    device_id: str,
    received_at: str,
    payload: bytes,
    rssi_dbm: float | None = None,
    snr_db: float | None = None,
) -> dict:
    """Wrap a frame in the webhook JSON schema a network server delivers."""
    if not _DEVICE_ID_RE.match(device_id):
        raise EncodeError("device_id", f"device_id {device_id!r} is not 8 hex chars")
    env: dict = {
        "device_id": device_id,
        "received_at": received_at,
        "payload_b64": base64.b64encode(payload).decode("ascii"),
    }
    if rssi_dbm is not None:
        env["rssi_dbm"] = rssi_dbm
    if snr_db is not None:
        env["snr_db"] = snr_db
    return env


def decode_envelope(env: dict) -> tuple[str, str, FrameFields]:
    """Validate an envelope and decode its payload.

    Returns (device_id, received_at, frame fields). Timestamp parsing is the
    receiver's business; here it only has to be a non-empty string.
    """
    try:
        device_id = env["device_id"]
        received_at = env["received_at"]
        payload_b64 = env["payload_b64"]
    except (TypeError, KeyError) as exc:
        raise DecodeError("envelope", f"missing envelope field: {exc}") from None
    if not isinstance(device_id, str) or not _DEVICE_ID_RE.match(device_id):
        raise DecodeError("device_id", f"device_id {device_id!r} is not 8 hex chars")
    if not isinstance(received_at, str) or not received_at:
        raise DecodeError("received_at", "received_at must be a non-empty string")
    if not isinstance(payload_b64, str):
        raise DecodeError("payload", "payload_b64 must be a string")
    try:
        payload = base64.b64decode(payload_b64, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise DecodeError("payload", f"payload_b64 is not valid base64: {exc}") from None
    return device_id, received_at, decode_frame(payload)
