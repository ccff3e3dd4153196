"""Discrete-event scheduler: virtual clock, frame delivery, metrics.

One bidirectional exchange is a cycle. A transmission scheduled by a station
occupies the channel for its airtime; at the frame end every other station
receives an arrival event with its own delivery outcome. Relay data
transmissions additionally feed their decisive-leg outcome straight back to
the relay (the zero-length stand-in for the cooperation timeout), except
when the channel model runs the coded multicast in both-legs mode, where the
relay relies on its own timer instead.

A cycle completes when the acknowledgments for both exchanged packets have
finished their airtime; the next cycle starts at that same instant
(saturated traffic).
"""
from __future__ import annotations

import heapq
import math
import statistics
from dataclasses import dataclass, field
from typing import Optional, TextIO

from .channel import DeliveryOutcome, LinkErrorModel
from .core import Frame, FrameKind, SystemParameters, airtime_us, validate_parameters
from .netcode import NodeId, PacketId
from .protocol import (
    Action,
    ActionKind,
    CycleStart,
    FrameArrival,
    NodeState,
    ProtocolVariant,
    ProtocolViolationError,
    TimerExpiry,
    TxFeedback,
    carq_step,
    ncc_step,
)


class UndefinedMetricError(ValueError):
    """A statistic was requested from a run that cannot support it."""


class SimulationError(RuntimeError):
    """A run aborted; carries the statistics and trace gathered so far."""

    def __init__(self, message: str, stats: "RunStats", trace: list["TraceRecord"]):
        super().__init__(message)
        self.stats = stats
        self.trace = trace


@dataclass(frozen=True, slots=True)
class TraceRecord:
    """One structured trace line: a transmission, reception, delivery, or timer."""

    time_us: float
    node: NodeId
    action: str  # TX, RX, DELIVER, TIMER
    frame_kind: Optional[FrameKind]
    attempt: int
    cycle: int
    info: str = ""


@dataclass
class RunStats:
    cycles_completed: int = 0
    delivered_payload_bits: int = 0
    per_cycle_delay_us: list[float] = field(default_factory=list)
    tx_counts: dict[FrameKind, int] = field(default_factory=dict)
    sim_time_us: float = 0.0


_NODES = (NodeId.SOURCE, NodeId.DESTINATION, NodeId.RELAY)
_ENDPOINTS = (NodeId.SOURCE, NodeId.DESTINATION)
_OTHERS = {
    NodeId.SOURCE: (NodeId.DESTINATION, NodeId.RELAY),
    NodeId.DESTINATION: (NodeId.SOURCE, NodeId.RELAY),
    NodeId.RELAY: (NodeId.SOURCE, NodeId.DESTINATION),
}
_CORRUPTED = DeliveryOutcome.CORRUPTED

# Event tags, ordered FIFO by insertion sequence at equal times.
_EV_CYCLE = 0
_EV_FRAME_END = 1
_EV_TIMER = 2


class _Simulator:
    def __init__(
        self,
        params: SystemParameters,
        variant: ProtocolVariant,
        channel: LinkErrorModel,
        cycles: int,
        trace: bool,
        max_attempts: int,
    ) -> None:
        self.params = params
        self.variant = variant
        self.channel = channel
        self.total_cycles = cycles
        self.keep_trace = trace
        self.stats = RunStats()
        self.trace: list[TraceRecord] = []
        self.step_fn = ncc_step if variant is ProtocolVariant.NCC_ARQ else carq_step
        relay_timeout = channel.coded_both_legs and variant is ProtocolVariant.NCC_ARQ
        self.instant_feedback = not relay_timeout
        self.nodes = {
            node: NodeState(
                role=node,
                variant=variant,
                max_attempts=max_attempts,
                relay_uses_timeout=relay_timeout,
            )
            for node in _NODES
        }
        self.heap: list = []
        self.seq = 0
        self.now = 0.0
        self.cycle = 0
        self.cycle_start_us = 0.0
        self.outstanding: dict[PacketId, tuple[bytes, NodeId]] = {}
        self.delivered_ids: set[PacketId] = set()
        self.acked_ids: set[PacketId] = set()
        self.done = False

    def _schedule(self, time_us: float, tag: int, data) -> None:
        self.seq += 1
        heapq.heappush(self.heap, (time_us, self.seq, tag, data))

    def _record(
        self,
        time_us: float,
        node: NodeId,
        action: str,
        frame_kind: Optional[FrameKind],
        attempt: int,
        info: str = "",
    ) -> None:
        if self.keep_trace:
            self.trace.append(
                TraceRecord(time_us, node, action, frame_kind, attempt, self.cycle, info)
            )

    def run(self) -> None:
        self._schedule(0.0, _EV_CYCLE, 1)
        while self.heap and not self.done:
            time_us, _, tag, data = heapq.heappop(self.heap)
            if time_us < self.now:
                raise SimulationError(
                    f"event scheduled in the past at {time_us} < {self.now}",
                    self.stats,
                    self.trace,
                )
            self.now = time_us
            if tag == _EV_CYCLE:
                self._start_cycle(data)
            elif tag == _EV_FRAME_END:
                self._frame_end(*data)
            else:
                node, timer_tag, cycle = data
                self._dispatch(node, TimerExpiry(timer_tag, cycle))

    def _start_cycle(self, cycle: int) -> None:
        self.cycle = cycle
        self.cycle_start_us = self.now
        self.channel.reset_cycle()
        self.outstanding.clear()
        self.delivered_ids.clear()
        self.acked_ids.clear()
        for node in _NODES:
            self._dispatch(node, CycleStart(cycle))
        for endpoint in _ENDPOINTS:
            pending = self.nodes[endpoint].own_pending
            if pending is not None:
                other = NodeId.DESTINATION if endpoint is NodeId.SOURCE else NodeId.SOURCE
                self.outstanding[pending.id] = (pending.data, other)

    def _frame_end(self, frame: Frame, attempt: int, tx_node: NodeId) -> None:
        decisive_outcome = None
        decisive = frame.dst if frame.dst is not None else NodeId.DESTINATION
        kind = frame.kind
        for receiver in _OTHERS[tx_node]:
            addressed = frame.dst is None or frame.dst is receiver
            outcome = self.channel.deliver_outcome(
                tx_node, receiver, kind, attempt_index=attempt, addressed=addressed
            )
            if receiver is decisive:
                decisive_outcome = outcome
            if self.keep_trace:
                self._record(self.now, receiver, "RX", kind, attempt, outcome.value)
            if outcome is _CORRUPTED and not (
                addressed and kind is FrameKind.DATA and tx_node is not NodeId.RELAY
            ):
                # Only a corrupted direct data frame addressed to the receiver
                # provokes a reaction (the call for cooperation); every other
                # corrupted reception is discarded by all stations.
                continue
            self._dispatch(receiver, FrameArrival(frame, outcome, attempt))
        if (
            self.instant_feedback
            and tx_node is NodeId.RELAY
            and kind in (FrameKind.CODED, FrameKind.DATA)
        ):
            self._dispatch(tx_node, TxFeedback(frame, decisive_outcome, attempt))
        if kind is FrameKind.ACK:
            self.acked_ids.add(frame.carries[0])
            if len(self.acked_ids) == 2:
                self._complete_cycle()

    def _dispatch(self, node: NodeId, event) -> None:
        _, actions = self.step_fn(self.nodes[node], event, self.params)
        for action in actions:
            self._handle_action(node, action)

    def _handle_action(self, node: NodeId, action: Action) -> None:
        if action.kind is ActionKind.TRANSMIT:
            frame = action.frame
            start = self.now + action.delay_us
            counts = self.stats.tx_counts
            counts[frame.kind] = counts.get(frame.kind, 0) + 1
            if self.keep_trace:
                self._record(start, node, "TX", frame.kind, action.attempt)
            self._schedule(
                start + airtime_us(frame, self.params),
                _EV_FRAME_END,
                (frame, action.attempt, node),
            )
        elif action.kind is ActionKind.SET_TIMER:
            self._record(self.now, node, "TIMER", None, 0, action.timer_tag)
            self._schedule(
                self.now + action.delay_us, _EV_TIMER, (node, action.timer_tag, self.cycle)
            )
        else:
            self._deliver(node, action)

    def _deliver(self, node: NodeId, action: Action) -> None:
        payload = action.payload
        expected = self.outstanding.get(payload.id)
        if expected is None:
            raise ProtocolViolationError(f"delivery of unknown packet {payload.id}")
        data, destination = expected
        if node is not destination:
            raise ProtocolViolationError(
                f"packet {payload.id} delivered at {node.value}, expected {destination.value}"
            )
        if payload.id in self.delivered_ids:
            raise ProtocolViolationError(f"packet {payload.id} delivered twice")
        if payload.data != data:
            raise ProtocolViolationError(f"packet {payload.id} corrupted end to end")
        self.delivered_ids.add(payload.id)
        self.stats.delivered_payload_bits += 8 * len(payload.data)
        if self.keep_trace:
            self._record(self.now, node, "DELIVER", FrameKind.DATA, 1, str(payload.id.seq))

    def _complete_cycle(self) -> None:
        if len(self.delivered_ids) != 2:
            raise ProtocolViolationError(
                f"cycle {self.cycle} closed with {len(self.delivered_ids)} deliveries"
            )
        self.stats.per_cycle_delay_us.append(self.now - self.cycle_start_us)
        self.stats.cycles_completed += 1
        self.stats.sim_time_us = self.now
        if self.stats.cycles_completed >= self.total_cycles:
            self.done = True
        else:
            self._schedule(self.now, _EV_CYCLE, self.cycle + 1)


def run(
    params: SystemParameters,
    variant: ProtocolVariant,
    channel: LinkErrorModel,
    cycles: int,
    trace: bool = False,
    max_attempts: int = 100,
) -> tuple[RunStats, list[TraceRecord]]:
    """Execute `cycles` complete exchanges and return statistics plus the trace."""
    if cycles < 1:
        raise UndefinedMetricError(f"cycle count must be >= 1, got {cycles}")
    violations = validate_parameters(params)
    if violations:
        raise SimulationError("; ".join(violations), RunStats(), [])
    sim = _Simulator(params, variant, channel, cycles, trace, max_attempts)
    try:
        sim.run()
    except ProtocolViolationError as exc:
        raise SimulationError(str(exc), sim.stats, sim.trace) from exc
    return sim.stats, sim.trace


def throughput(stats: RunStats) -> float:
    """Delivered payload bits per second of simulated time."""
    if stats.sim_time_us <= 0.0:
        raise UndefinedMetricError("throughput is undefined for zero simulated time")
    return stats.delivered_payload_bits / stats.sim_time_us * 1e6


def mean_delay(stats: RunStats) -> float:
    """Arithmetic mean cycle delay in microseconds."""
    if stats.cycles_completed < 1:
        raise UndefinedMetricError("mean delay needs at least one completed cycle")
    return sum(stats.per_cycle_delay_us) / stats.cycles_completed


def confidence_halfwidth(stats: RunStats, level: float = 0.95) -> float:
    """Normal-approximation confidence half-width of the mean cycle delay."""
    if stats.cycles_completed < 2:
        raise UndefinedMetricError("confidence interval needs at least two cycles")
    if not 0.0 < level < 1.0:
        raise UndefinedMetricError(f"confidence level must be in (0, 1), got {level}")
    z = statistics.NormalDist().inv_cdf((1.0 + level) / 2.0)
    spread = statistics.stdev(stats.per_cycle_delay_us)
    return z * spread / math.sqrt(stats.cycles_completed)


def mean_coded_attempts(stats: RunStats) -> float:
    """Average coded transmissions per completed cycle."""
    if stats.cycles_completed < 1:
        raise UndefinedMetricError("attempt count needs at least one completed cycle")
    return stats.tx_counts.get(FrameKind.CODED, 0) / stats.cycles_completed


def format_trace_line(record: TraceRecord) -> str:
    kind = record.frame_kind.value if record.frame_kind is not None else "-"
    line = (
        f"{record.time_us:.4f} {record.node.value} {record.action} {kind} "
        f"attempt={record.attempt} cycle={record.cycle}"
    )
    if record.info:
        line += f" {record.info}"
    return line


def write_trace(trace: list[TraceRecord], stream: TextIO) -> None:
    """Write the trace as line-delimited structured text."""
    for record in trace:
        stream.write(format_trace_line(record) + "\n")
