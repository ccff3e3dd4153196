"""Scenario constants, frame definitions, and airtime arithmetic.

Conventions used throughout the package: times are float microseconds,
rates are bits per second, sizes are bytes. A frame's airtime is one PHY
header plus its bits divided by the link rate; the piggybacked
call-for-cooperation is two back-to-back units and therefore pays two PHY
headers.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

from .netcode import CodedPayload, NodeId, PacketId, Payload


class ParameterError(ValueError):
    """A size, rate, or duration parameter is out of its valid domain."""


class FrameKind(str, Enum):
    DATA = "DATA"
    CFC = "CFC"
    CFC_PIGGYBACK = "CFC+DATA"
    CODED = "CODED"
    ACK = "ACK"


@dataclass(frozen=True, slots=True)
class SystemParameters:
    """Timing, size, and rate constants of the simulated 802.11g scenario.

    Defaults describe the reference scenario: 1500-byte packets, 6 Mb/s on
    the direct source-destination link, 54 Mb/s on both relay-adjacent
    links, and negligible coding overhead.
    """

    mac_header_bytes: int = 34
    phy_header_us: float = 96.0
    data_payload_bytes: int = 1500
    ctrl_packet_bytes: int = 14
    sifs_us: float = 10.0
    difs_us: float = 50.0
    source_control_rate_bps: float = 6e6
    source_data_rate_bps: float = 6e6
    relay_control_rate_bps: float = 6e6
    relay_data_rate_bps: float = 54e6
    t_onc_us: float = 0.0
    per_sd: float = 0.0
    per_rd: float = 0.0
    per_rs: float = 0.0

    @property
    def data_frame_bytes(self) -> int:
        return self.mac_header_bytes + self.data_payload_bytes

    @property
    def payload_bits(self) -> int:
        return 8 * self.data_payload_bytes


def validate_parameters(params: SystemParameters) -> list[str]:
    """Check all parameter invariants; returns a list of violations (empty when valid)."""
    violations = []
    for name in ("mac_header_bytes", "data_payload_bytes", "ctrl_packet_bytes"):
        if getattr(params, name) <= 0:
            violations.append(f"{name} must be > 0")
    for name in (
        "source_control_rate_bps",
        "source_data_rate_bps",
        "relay_control_rate_bps",
        "relay_data_rate_bps",
    ):
        if getattr(params, name) <= 0:
            violations.append(f"{name} must be > 0")
    for name in ("phy_header_us", "sifs_us", "difs_us", "t_onc_us"):
        if getattr(params, name) < 0:
            violations.append(f"{name} must be >= 0")
    if not params.sifs_us < params.difs_us:
        violations.append("sifs_us must be < difs_us")
    for name in ("per_sd", "per_rd", "per_rs"):
        value = getattr(params, name)
        if not 0.0 <= value < 1.0:
            violations.append(f"{name} must be in [0, 1)")
    return violations


def frame_airtime(size_bytes: int, rate_bps: float, params: SystemParameters) -> float:
    """Airtime in microseconds of one PHY unit of `size_bytes` at `rate_bps`."""
    if size_bytes <= 0:
        raise ParameterError(f"frame size must be > 0 bytes, got {size_bytes}")
    if rate_bps <= 0:
        raise ParameterError(f"rate must be > 0 b/s, got {rate_bps}")
    return params.phy_header_us + size_bytes * 8 / (rate_bps / 1e6)


# Multicast destination of the coded frame (both endpoints at once).
MULTICAST = None


@dataclass(frozen=True, slots=True)
class Frame:
    """A MAC-layer transmission unit.

    `dst` is None for the multicast coded frame. `carries` lists the packet
    identities the frame moves or acknowledges; `payload` holds the actual
    bytes for data-bearing kinds.
    """

    kind: FrameKind
    src: NodeId
    dst: Optional[NodeId]
    carries: tuple[PacketId, ...]
    size_bytes: int
    payload: Union[Payload, CodedPayload, None] = None

    def __post_init__(self) -> None:
        if self.kind is FrameKind.CODED:
            if len(set(self.carries)) != 2:
                raise ParameterError("a coded frame must carry exactly two distinct packets")
            if self.dst is not MULTICAST:
                raise ParameterError("coded frames are multicast")
        elif self.dst is MULTICAST:
            raise ParameterError(f"{self.kind.value} frames need a unicast destination")

    @property
    def is_multicast(self) -> bool:
        return self.dst is MULTICAST


def data_frame(params: SystemParameters, src: NodeId, dst: NodeId, payload: Payload) -> Frame:
    if len(payload.data) != params.data_payload_bytes:
        raise ParameterError(
            f"payload is {len(payload.data)} bytes, expected {params.data_payload_bytes}"
        )
    return Frame(
        kind=FrameKind.DATA,
        src=src,
        dst=dst,
        carries=(payload.id,),
        size_bytes=params.data_frame_bytes,
        payload=payload,
    )


def cfc_frame(params: SystemParameters, src: NodeId, dst: NodeId) -> Frame:
    return Frame(
        kind=FrameKind.CFC,
        src=src,
        dst=dst,
        carries=(),
        size_bytes=params.ctrl_packet_bytes,
    )


def cfc_piggyback_frame(
    params: SystemParameters, src: NodeId, dst: NodeId, payload: Payload
) -> Frame:
    if len(payload.data) != params.data_payload_bytes:
        raise ParameterError(
            f"payload is {len(payload.data)} bytes, expected {params.data_payload_bytes}"
        )
    return Frame(
        kind=FrameKind.CFC_PIGGYBACK,
        src=src,
        dst=dst,
        carries=(payload.id,),
        size_bytes=params.ctrl_packet_bytes + params.data_frame_bytes,
        payload=payload,
    )


def coded_frame(params: SystemParameters, src: NodeId, coded: CodedPayload) -> Frame:
    return Frame(
        kind=FrameKind.CODED,
        src=src,
        dst=MULTICAST,
        carries=coded.ids,
        size_bytes=params.data_frame_bytes,
        payload=coded,
    )


def ack_frame(params: SystemParameters, src: NodeId, dst: NodeId, acked: PacketId) -> Frame:
    return Frame(
        kind=FrameKind.ACK,
        src=src,
        dst=dst,
        carries=(acked,),
        size_bytes=params.ctrl_packet_bytes,
    )


def control_rate_bps(params: SystemParameters, src: NodeId) -> float:
    if src is NodeId.RELAY:
        return params.relay_control_rate_bps
    return params.source_control_rate_bps


def data_rate_bps(params: SystemParameters, src: NodeId, dst: Optional[NodeId]) -> float:
    """Data rate of the link a data-bearing unit travels on.

    Relay-adjacent links run at the relay data rate; the direct link between
    the endpoint pair runs at the source data rate.
    """
    if src is NodeId.RELAY or dst is NodeId.RELAY or dst is MULTICAST:
        return params.relay_data_rate_bps
    return params.source_data_rate_bps


def airtime_us(frame: Frame, params: SystemParameters) -> float:
    """Total airtime of a frame, including every PHY header it occupies."""
    if frame.kind in (FrameKind.CFC, FrameKind.ACK):
        return frame_airtime(params.ctrl_packet_bytes, control_rate_bps(params, frame.src), params)
    if frame.kind is FrameKind.CFC_PIGGYBACK:
        # Control unit plus piggybacked data unit, each with its own PHY header.
        return frame_airtime(
            params.ctrl_packet_bytes, control_rate_bps(params, frame.src), params
        ) + frame_airtime(params.data_frame_bytes, params.relay_data_rate_bps, params)
    rate = data_rate_bps(params, frame.src, frame.dst)
    return frame_airtime(frame.size_bytes, rate, params)
