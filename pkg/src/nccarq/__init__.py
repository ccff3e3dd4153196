"""Network-coding cooperative ARQ: discrete-event simulator and closed-form model.

Three stations share one channel: a source and a destination exchanging
data over a poor direct link, and a relay on fast adjacent links. When the
direct transmission fails, the destination calls for cooperation and
piggybacks its own reverse-direction packet; the relay XORs the two buffered
packets and multicasts the coded frame, serving both directions with a
single cooperation phase. The package provides the closed-form delay and
throughput of that scheme and of a plain per-direction cooperative ARQ
baseline, plus a discrete-event simulator that reproduces the closed forms
exactly in deterministic mode.
"""
from .analytic import (
    CycleBreakdown,
    SweepRow,
    carq_cycle_delay,
    carq_throughput,
    expected_retransmissions,
    ncc_cooperation_delay,
    ncc_cycle_delay,
    ncc_throughput,
    sweep,
)
from .channel import ChannelMode, DeliveryOutcome, LinkErrorModel, UnknownLinkError
from .core import (
    Frame,
    FrameKind,
    ParameterError,
    SystemParameters,
    airtime_us,
    frame_airtime,
    validate_parameters,
)
from .engine import (
    RunStats,
    SimulationError,
    TraceRecord,
    UndefinedMetricError,
    confidence_halfwidth,
    mean_coded_attempts,
    mean_delay,
    run,
    throughput,
    write_trace,
)
from .netcode import (
    CodedPayload,
    CodingError,
    LengthMismatchError,
    NodeId,
    NotDecodableError,
    OverheardStore,
    PacketId,
    Payload,
    xor_decode,
    xor_encode,
)
from .protocol import (
    NodeState,
    Phase,
    ProtocolVariant,
    ProtocolViolationError,
    RetryLimitError,
    transmission_count,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelMode",
    "CodedPayload",
    "CodingError",
    "CycleBreakdown",
    "DeliveryOutcome",
    "Frame",
    "FrameKind",
    "LengthMismatchError",
    "LinkErrorModel",
    "NodeId",
    "NodeState",
    "NotDecodableError",
    "OverheardStore",
    "PacketId",
    "ParameterError",
    "Payload",
    "Phase",
    "ProtocolVariant",
    "ProtocolViolationError",
    "RetryLimitError",
    "RunStats",
    "SimulationError",
    "SweepRow",
    "SystemParameters",
    "TraceRecord",
    "UndefinedMetricError",
    "UnknownLinkError",
    "airtime_us",
    "carq_cycle_delay",
    "carq_throughput",
    "confidence_halfwidth",
    "expected_retransmissions",
    "frame_airtime",
    "mean_coded_attempts",
    "mean_delay",
    "ncc_cooperation_delay",
    "ncc_cycle_delay",
    "ncc_throughput",
    "run",
    "sweep",
    "throughput",
    "transmission_count",
    "validate_parameters",
    "write_trace",
    "xor_decode",
    "xor_encode",
]
