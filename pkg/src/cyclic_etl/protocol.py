"""Update messages, their binary frames, and the transmitted-value ledger.

Frame layout (little-endian)::

    tag:u8  k:u32  payload
    0x01 StateUpdate        n x f64
    0x02 SmallModelUpdate   v x f64
    0x03 FullModelUpdate    c x f64 coefficients, then cycle length u32
    0x04 RawModelUpdate     cycle length u32, then N x f64

A frame is decoded as a whole; the payload size must match exactly.
"""
from __future__ import annotations

import csv
import struct
from collections import Counter
from dataclasses import dataclass, field

from .errors import FrameError, ProtocolError

_HEAD = struct.Struct("<BI")
_U32 = struct.Struct("<I")

TAG_STATE, TAG_SMALL, TAG_FULL, TAG_RAW = 0x01, 0x02, 0x03, 0x04


@dataclass(frozen=True)
class StateUpdate:
    k: int
    x: tuple

    tag = TAG_STATE
    kind = "state"

    @property
    def value_count(self) -> int:
        return len(self.x)

    def _payload(self) -> bytes:
        return struct.pack(f"<{len(self.x)}d", *self.x)


@dataclass(frozen=True)
class SmallModelUpdate:
    k: int
    theta: tuple

    tag = TAG_SMALL
    kind = "small"

    @property
    def value_count(self) -> int:
        return len(self.theta)

    def _payload(self) -> bytes:
        return struct.pack(f"<{len(self.theta)}d", *self.theta)


@dataclass(frozen=True)
class FullModelUpdate:
    k: int
    coefficients: tuple
    cycle_length: int

    tag = TAG_FULL
    kind = "full"
    n_coefficients = 19

    @property
    def value_count(self) -> int:
        return len(self.coefficients) + 1

    def _payload(self) -> bytes:
        return struct.pack(f"<{len(self.coefficients)}d", *self.coefficients) + _U32.pack(self.cycle_length)


@dataclass(frozen=True)
class RawModelUpdate:
    k: int
    values: tuple
    cycle_length: int

    tag = TAG_RAW
    kind = "raw"

    def __post_init__(self):
        if len(self.values) != self.cycle_length:
            raise ProtocolError("raw model length does not match its cycle length")

    @property
    def value_count(self) -> int:
        return len(self.values) + 1

    def _payload(self) -> bytes:
        return _U32.pack(self.cycle_length) + struct.pack(f"<{len(self.values)}d", *self.values)


MESSAGE_TYPES = (StateUpdate, SmallModelUpdate, FullModelUpdate, RawModelUpdate)
MODEL_KINDS = ("small", "full", "raw")


def state_update(k: int, x) -> StateUpdate:
    xs = (float(x),) if isinstance(x, (int, float)) else tuple(float(v) for v in x)
    return StateUpdate(int(k), xs)


def encode(msg) -> bytes:
    return _HEAD.pack(msg.tag, msg.k) + msg._payload()


def _reals(buf: bytes, what: str):
    if len(buf) % 8:
        raise FrameError(f"{what}: payload of {len(buf)} bytes is not a whole number of reals")
    return struct.unpack(f"<{len(buf) // 8}d", buf)


def decode(frame: bytes, full_coefficients: int = FullModelUpdate.n_coefficients):
    if len(frame) < _HEAD.size:
        raise FrameError(f"frame of {len(frame)} bytes is shorter than the header")
    tag, k = _HEAD.unpack_from(frame)
    body = bytes(frame[_HEAD.size:])
    if tag == TAG_STATE:
        xs = _reals(body, "state update")
        if not xs:
            raise FrameError("state update without payload")
        return StateUpdate(k, xs)
    if tag == TAG_SMALL:
        theta = _reals(body, "small model update")
        if not theta:
            raise FrameError("small model update without payload")
        return SmallModelUpdate(k, theta)
    if tag == TAG_FULL:
        want = 8 * full_coefficients + 4
        if len(body) != want:
            raise FrameError(f"full model update needs {want} payload bytes, got {len(body)}")
        coef = struct.unpack_from(f"<{full_coefficients}d", body)
        (n,) = _U32.unpack_from(body, 8 * full_coefficients)
        return FullModelUpdate(k, coef, n)
    if tag == TAG_RAW:
        if len(body) < 4:
            raise FrameError("raw model update without cycle length")
        (n,) = _U32.unpack_from(body)
        if len(body) != 4 + 8 * n:
            raise FrameError(f"raw model update of length {n} needs {4 + 8 * n} bytes, got {len(body)}")
        return RawModelUpdate(k, _reals(body[4:], "raw model update"), n)
    raise ProtocolError(f"unknown message tag 0x{tag:02X}")


@dataclass
class CommLedger:
    """Counts transmitted real values; the unit of comparison with full communication."""

    state_dim: int = 1
    model_values: int = 20
    values_sent: int = 0
    samples_elapsed: int = 0
    counts: Counter = field(default_factory=Counter)

    def record(self, msg) -> None:
        self.values_sent += msg.value_count
        self.counts[msg.kind] += 1

    def tick(self, samples: int = 1) -> None:
        self.samples_elapsed += samples

    def ratio(self) -> float:
        return ledger_ratio(self)

    def budget(self, eta: float, expected_tau: float) -> float:
        """Expected ratio under a correct model, ``(n + eta w) / (n E[tau])``."""
        n = self.state_dim
        return (n + eta * self.model_values) / (n * expected_tau)


def ledger_ratio(ledger: CommLedger) -> float:
    if ledger.samples_elapsed <= 0:
        raise ZeroDivisionError("ratio undefined before any sample elapsed")
    return ledger.values_sent / (ledger.state_dim * ledger.samples_elapsed)


def write_message_trace(messages, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "variant", "value_count"])
        for m in messages:
            w.writerow([m.k, m.kind, m.value_count])
