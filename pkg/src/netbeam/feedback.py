"""Distributive power control: the receiver broadcasts a short message and
each relay reconstructs its own fraction from local channel knowledge.

Two strategies:

* index list -- the indices of the full-power relays plus the quantized
  water-level ratio (cost i0 * ceil(log2 R) + b1 bits);
* threshold -- the ratio plus a cut value strictly between the last
  full-power relay's ranking statistic and the next one's (cost 2 * b1 bits,
  independent of the relay count).

Reals are quantized log-uniformly over [1e-3, 1e3]; messages carry the
integer quantizer codes so the wire round-trip is bit exact at any width.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .beamsolver import (
    DegenerateRelayError,
    PowerAllocation,
    SolverWorkspace,
    phi_statistic,
)

__all__ = [
    "FeedbackVariant",
    "FeedbackMessage",
    "ProtocolError",
    "encode_index_list",
    "encode_threshold",
    "relay_apply",
    "serialize_message",
    "deserialize_message",
    "bit_cost",
    "quantize_log",
    "dequantize_log",
]

_LOG_LO = -3.0  # quantizer span: 10**-3 .. 10**3
_LOG_HI = 3.0


class ProtocolError(ValueError):
    """Malformed or inconsistent feedback message."""


class FeedbackVariant(enum.Enum):
    INDEX_LIST = 0
    THRESHOLD = 1


def quantize_log(value: float, bits: int) -> int:
    """Code of ``value`` on the log-uniform grid (clamped to the span)."""
    if bits < 1:
        raise ValueError("quantizer width must be >= 1 bit")
    if value <= 0:
        return 0
    top = (1 << bits) - 1
    frac = (math.log10(value) - _LOG_LO) / (_LOG_HI - _LOG_LO)
    return min(top, max(0, round(frac * top)))


def dequantize_log(code: int, bits: int) -> float:
    """Grid value of ``code``; inverse of :func:`quantize_log` on the grid."""
    top = (1 << bits) - 1
    if not 0 <= code <= top:
        raise ProtocolError("quantizer code out of range")
    return 10.0 ** (_LOG_LO + (_LOG_HI - _LOG_LO) * code / top)


@dataclass(frozen=True)
class FeedbackMessage:
    """Receiver broadcast: either the full-power index list or a threshold.

    ``lambda_q``/``d_q`` are the dequantized grid values the relays act on;
    the matching integer codes are kept for exact serialization.
    """

    variant: FeedbackVariant
    relay_count: int
    b1_bits: int
    lambda_code: int
    full_power_indices: tuple = ()   # index-list variant, 0-based
    d_code: int | None = None        # threshold variant
    fallback: bool = False           # threshold encode fell back to the index list

    def __post_init__(self):
        if self.relay_count < 1:
            raise ProtocolError("relay_count must be >= 1")
        if self.b1_bits < 1:
            raise ProtocolError("b1_bits must be >= 1")
        idx = tuple(int(i) for i in self.full_power_indices)
        if self.variant is FeedbackVariant.INDEX_LIST:
            if len(set(idx)) != len(idx):
                raise ProtocolError("full-power indices must be distinct")
            if any(not 0 <= i < self.relay_count for i in idx):
                raise ProtocolError("full-power index out of range")
        elif self.d_code is None:
            raise ProtocolError("threshold variant needs a cut value")
        object.__setattr__(self, "full_power_indices", idx)

    @property
    def lambda_q(self) -> float:
        return dequantize_log(self.lambda_code, self.b1_bits)

    @property
    def d_q(self) -> float | None:
        if self.d_code is None:
            return None
        return dequantize_log(self.d_code, self.b1_bits)


def _index_bits(relay_count: int) -> int:
    return math.ceil(math.log2(relay_count)) if relay_count > 1 else 0


def bit_cost(msg: FeedbackMessage) -> int:
    """Broadcast payload size in bits (header bytes excluded)."""
    if msg.variant is FeedbackVariant.INDEX_LIST:
        return len(msg.full_power_indices) * _index_bits(msg.relay_count) + msg.b1_bits
    return 2 * msg.b1_bits


def _lambda_star(alloc: PowerAllocation, ws: SolverWorkspace) -> float:
    """Water-level ratio at the solution prefix, recomputed from the workspace."""
    if alloc.i0 < 1:
        raise ProtocolError("allocation has no full-power relay to broadcast")
    head = ws.tau[:alloc.i0]
    return (1.0 + float(np.sum(ws.a[head] ** 2))) / float(np.sum(ws.b[head]))


def encode_index_list(alloc: PowerAllocation, ws: SolverWorkspace,
                      b1: int) -> FeedbackMessage:
    """Broadcast the full-power relay indices plus the quantized ratio."""
    lam = _lambda_star(alloc, ws)
    return FeedbackMessage(variant=FeedbackVariant.INDEX_LIST,
                           relay_count=ws.phi.shape[0], b1_bits=b1,
                           lambda_code=quantize_log(lam, b1),
                           full_power_indices=tuple(int(i) for i in ws.tau[:alloc.i0]))


def encode_threshold(alloc: PowerAllocation, ws: SolverWorkspace,
                     b1: int) -> FeedbackMessage:
    """Broadcast two reals: the ratio and a cut separating the full-power set.

    The cut is the geometric mean of the bracketing ranking statistics (half
    the smaller one when every relay is at full power or the next statistic
    is zero).  An exact tie across the boundary makes the threshold ill-posed
    and falls back to the index list, flagged.
    """
    lam = _lambda_star(alloc, ws)
    r_count = ws.phi.shape[0]
    phi_sorted = ws.phi[ws.tau]
    i0 = alloc.i0
    if i0 < r_count:
        hi, lo = phi_sorted[i0 - 1], phi_sorted[i0]
        if hi == lo:
            msg = encode_index_list(alloc, ws, b1)
            return FeedbackMessage(variant=msg.variant, relay_count=msg.relay_count,
                                   b1_bits=b1, lambda_code=msg.lambda_code,
                                   full_power_indices=msg.full_power_indices,
                                   fallback=True)
        cut = math.sqrt(hi * lo) if lo > 0 else hi / 2.0
    else:
        cut = phi_sorted[-1] / 2.0
    return FeedbackMessage(variant=FeedbackVariant.THRESHOLD, relay_count=r_count,
                           b1_bits=b1, lambda_code=quantize_log(lam, b1),
                           d_code=quantize_log(cut, b1))


def relay_apply(msg: FeedbackMessage, own_index: int, f_mag: float, g_mag: float,
                p0: float, pj: float) -> float:
    """A relay's own power fraction, from the broadcast and local channels only.

    Full-power relays return 1; the rest scale their ranking statistic by the
    broadcast ratio, clamped back into [0, 1] after quantization.  The
    resulting transmit power equals lambda^2 |f/g|^2 (1 + |f|^2 P0).
    """
    if not isinstance(msg, FeedbackMessage):
        raise ProtocolError("not a feedback message")
    if not 0 <= own_index < msg.relay_count:
        raise ProtocolError("relay index outside the message's network")
    try:
        phi = phi_statistic(f_mag, g_mag, p0, pj)
    except DegenerateRelayError:
        return 0.0
    if msg.variant is FeedbackVariant.INDEX_LIST:
        if own_index in msg.full_power_indices:
            return 1.0
    elif msg.variant is FeedbackVariant.THRESHOLD:
        if phi > msg.d_q:
            return 1.0
    else:
        raise ProtocolError("unknown feedback variant")
    return float(min(1.0, max(0.0, msg.lambda_q * phi)))


class _BitWriter:
    def __init__(self):
        self.acc = 0
        self.nbits = 0

    def write(self, value: int, width: int):
        if width == 0:
            return
        if not 0 <= value < (1 << width):
            raise ProtocolError("field value exceeds its width")
        self.acc = (self.acc << width) | value
        self.nbits += width

    def to_bytes(self) -> bytes:
        pad = (-self.nbits) % 8
        return ((self.acc << pad) | 0).to_bytes((self.nbits + pad) // 8, "big") \
            if self.nbits else b""


class _BitReader:
    def __init__(self, data: bytes):
        self.acc = int.from_bytes(data, "big") if data else 0
        self.nbits = 8 * len(data)
        self.pos = 0

    def read(self, width: int) -> int:
        if width == 0:
            return 0
        if self.pos + width > self.nbits:
            raise ProtocolError("message truncated")
        shift = self.nbits - self.pos - width
        self.pos += width
        return (self.acc >> shift) & ((1 << width) - 1)


def serialize_message(msg: FeedbackMessage) -> bytes:
    """Fixed-width wire layout: variant byte, count byte, then big-endian
    bit-packed index fields (ceil(log2 R) bits each) and b1-bit real codes."""
    header = bytes([msg.variant.value,
                    len(msg.full_power_indices)
                    if msg.variant is FeedbackVariant.INDEX_LIST else 0])
    writer = _BitWriter()
    if msg.variant is FeedbackVariant.INDEX_LIST:
        width = _index_bits(msg.relay_count)
        for idx in msg.full_power_indices:
            writer.write(idx, width)
        writer.write(msg.lambda_code, msg.b1_bits)
    else:
        writer.write(msg.lambda_code, msg.b1_bits)
        writer.write(msg.d_code, msg.b1_bits)
    return header + writer.to_bytes()


def deserialize_message(data: bytes, relay_count: int, b1: int) -> FeedbackMessage:
    """Inverse of :func:`serialize_message`; relay_count and b1 are protocol
    parameters known to every node rather than part of the payload."""
    if len(data) < 2:
        raise ProtocolError("message shorter than its header")
    try:
        variant = FeedbackVariant(data[0])
    except ValueError as exc:
        raise ProtocolError("unknown feedback variant") from exc
    count = data[1]
    reader = _BitReader(data[2:])
    if variant is FeedbackVariant.INDEX_LIST:
        width = _index_bits(relay_count)
        indices = tuple(reader.read(width) for _ in range(count))
        lam_code = reader.read(b1)
        return FeedbackMessage(variant=variant, relay_count=relay_count, b1_bits=b1,
                               lambda_code=lam_code, full_power_indices=indices)
    lam_code = reader.read(b1)
    d_code = reader.read(b1)
    return FeedbackMessage(variant=variant, relay_count=relay_count, b1_bits=b1,
                           lambda_code=lam_code, d_code=d_code)
