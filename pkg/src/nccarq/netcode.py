"""Bytewise XOR coding of equal-length payloads and the per-node packet store.

Every station keeps a copy of each data packet it sends or correctly
overhears until that packet is acknowledged; the relay codes the two
buffered packets of a bidirectional exchange into a single multicast frame.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
import random
from typing import NamedTuple, Optional


class CodingError(ValueError):
    """Base class for XOR encode/decode failures."""


class LengthMismatchError(CodingError):
    """Payloads of different lengths cannot be combined."""


class NotDecodableError(CodingError):
    """The receiver holds neither constituent of a coded payload."""


class NodeId(str, Enum):
    """The three stations of the relay-assisted topology."""

    SOURCE = "S"
    DESTINATION = "D"
    RELAY = "R"


class PacketId(NamedTuple):
    """Identity of a data packet: originating station plus a per-station sequence number."""

    origin: NodeId
    seq: int


@dataclass(frozen=True, slots=True)
class Payload:
    """An application data unit carried by a DATA or piggybacked frame."""

    id: PacketId
    data: bytes

    def __len__(self) -> int:
        return len(self.data)


@dataclass(frozen=True, slots=True)
class CodedPayload:
    """XOR combination of two original payloads, tagged with both identities."""

    ids: tuple[PacketId, PacketId]
    data: bytes

    def __len__(self) -> int:
        return len(self.data)


@lru_cache(maxsize=1024)
def _xor_bytes(a: bytes, b: bytes) -> bytes:
    # Cached because saturated runs cycle through a bounded set of byte
    # patterns; the cache turns repeat combinations into dict lookups.
    n = len(a)
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(n, "big")


def xor_encode(a: Payload, b: Payload) -> CodedPayload:
    """Combine two distinct equal-length payloads into one coded payload."""
    if len(a.data) != len(b.data):
        raise LengthMismatchError(
            f"cannot encode payloads of {len(a.data)} and {len(b.data)} bytes"
        )
    if a.id == b.id:
        raise CodingError(f"refusing to encode packet {a.id} with itself")
    first, second = sorted((a.id, b.id))
    return CodedPayload(ids=(first, second), data=_xor_bytes(a.data, b.data))


def xor_decode(coded: CodedPayload, known: Payload) -> Payload:
    """Recover the counterpart payload from a coded payload and one known constituent."""
    if known.id not in coded.ids:
        raise NotDecodableError(f"packet {known.id} is not a constituent of {coded.ids}")
    if len(coded.data) != len(known.data):
        raise LengthMismatchError(
            f"coded payload is {len(coded.data)} bytes, known is {len(known.data)}"
        )
    other = coded.ids[1] if known.id == coded.ids[0] else coded.ids[0]
    return Payload(id=other, data=_xor_bytes(coded.data, known.data))


@dataclass
class OverheardStore:
    """Buffered copies of sent/overheard packets, held until acknowledged.

    Unbounded by default; with a capacity the oldest entry is evicted first.
    """

    capacity: Optional[int] = None
    entries: dict[PacketId, Payload] = field(default_factory=dict)

    def store(self, payload: Payload) -> None:
        self.entries[payload.id] = payload
        if self.capacity is not None and len(self.entries) > self.capacity:
            oldest = next(iter(self.entries))
            del self.entries[oldest]

    def lookup(self, packet_id: PacketId) -> Optional[Payload]:
        return self.entries.get(packet_id)

    def release(self, packet_id: PacketId) -> bool:
        """Drop an acknowledged packet. Returns False if it was not held."""
        return self.entries.pop(packet_id, None) is not None

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, packet_id: PacketId) -> bool:
        return packet_id in self.entries


_PAYLOAD_SLOTS = 97  # distinct byte patterns cycled by sequence number


@lru_cache(maxsize=4096)
def _payload_data(origin_tag: str, slot: int, size: int) -> bytes:
    return random.Random(f"payload:{origin_tag}:{slot}:{size}").randbytes(size)


def make_payload(origin: NodeId, seq: int, size: int) -> Payload:
    """Deterministic pseudo-random payload for a given packet identity."""
    return Payload(
        id=PacketId(origin, seq),
        data=_payload_data(origin.value, seq % _PAYLOAD_SLOTS, size),
    )
