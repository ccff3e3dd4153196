"""Event-driven station behavior for the coded scheme and its plain baseline.

Each station is a transition function: it consumes one event (cycle start,
frame arrival with a delivered/corrupted flag, relay transmit feedback, or
timer expiry) and returns the updated state plus the actions to schedule.
The functions own no clock and no queue; all timing is expressed as delays
relative to the event being handled, which makes every transition testable
in isolation.

Coded-scheme timeline for one bidirectional exchange:

  1. the source transmits its data packet; the destination receives it in
     error while the relay overhears and buffers a clean copy;
  2. after SIFS the destination sends the call for cooperation with its own
     reverse-direction packet piggybacked;
  3. the relay XORs the two buffered packets and, after DIFS plus the
     coding overhead, multicasts the coded frame, repeating back to back
     until the destination can decode;
  4. the destination decodes with its own packet, delivers, and ACKs after
     SIFS; the source then decodes with its own packet and ACKs after a
     further SIFS. Both ACKs release the buffered copies.

The baseline runs the same cooperation machinery without piggybacking or
coding, once per direction, the second direction starting immediately after
the first direction's ACK.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional, Union

from .channel import DeliveryOutcome
from .core import (
    Frame,
    FrameKind,
    SystemParameters,
    ack_frame,
    airtime_us,
    cfc_frame,
    cfc_piggyback_frame,
    coded_frame,
    data_frame,
)
from .netcode import (
    NodeId,
    OverheardStore,
    PacketId,
    Payload,
    make_payload,
    xor_decode,
    xor_encode,
)


class ProtocolViolationError(RuntimeError):
    """A station observed an event its protocol state cannot legally handle."""


class RetryLimitError(ProtocolViolationError):
    """The relay exceeded the safety bound on repeat transmissions."""


class ProtocolVariant(Enum):
    NCC_ARQ = "ncc"
    C_ARQ = "carq"


class Phase(Enum):
    IDLE = "idle"
    AWAIT_CFC = "await_cfc"
    AWAIT_CODED = "await_coded"
    AWAIT_ACK_D = "await_ack_d"
    AWAIT_ACK_S = "await_ack_s"
    COOPERATING = "cooperating"


class ActionKind(Enum):
    TRANSMIT = "transmit"
    SET_TIMER = "set_timer"
    DELIVER_TO_APP = "deliver"


class Action(NamedTuple):
    kind: ActionKind
    frame: Optional[Frame] = None
    delay_us: float = 0.0
    payload: Optional[Payload] = None
    timer_tag: str = ""
    attempt: int = 1
    note: str = ""


def transmit(frame: Frame, delay_us: float, attempt: int = 1, note: str = "") -> Action:
    return Action(ActionKind.TRANSMIT, frame=frame, delay_us=delay_us, attempt=attempt, note=note)


def set_timer(tag: str, delay_us: float) -> Action:
    if delay_us <= 0:
        raise ValueError("timer delay must be positive")
    return Action(ActionKind.SET_TIMER, delay_us=delay_us, timer_tag=tag)


def deliver(payload: Payload, note: str = "") -> Action:
    return Action(ActionKind.DELIVER_TO_APP, payload=payload, note=note)


class CycleStart(NamedTuple):
    cycle: int


class FrameArrival(NamedTuple):
    frame: Frame
    outcome: DeliveryOutcome
    attempt: int = 1


class TxFeedback(NamedTuple):
    """Immediate notification of a relay transmission's decisive-leg outcome.

    Stands in for the cooperation timeout: the interval in which the relay
    would conclude no acknowledgment is coming is collapsed to zero, so
    failed attempts repeat back to back.
    """

    frame: Frame
    outcome: DeliveryOutcome
    attempt: int


class TimerExpiry(NamedTuple):
    tag: str
    cycle: int


ProtocolEvent = Union[CycleStart, FrameArrival, TxFeedback, TimerExpiry]

COOP_TIMER = "coop_timeout"

_NO_ACTIONS: tuple = ()


@dataclass
class NodeState:
    """Mutable per-station protocol state, advanced only by the step functions."""

    role: NodeId
    variant: ProtocolVariant
    store: OverheardStore = field(default_factory=OverheardStore)
    phase: Phase = Phase.IDLE
    current_cycle: int = 0
    next_seq: int = 1
    attempt_count: int = 0
    max_attempts: int = 100
    relay_uses_timeout: bool = False  # retransmit on timer instead of instant feedback
    own_pending: Optional[Payload] = None      # endpoint packet awaiting its ACK
    counterpart_id: Optional[PacketId] = None  # packet decoded/received this cycle
    counterpart_delivered: bool = False
    heard_peer_ack: bool = False
    sent_counterpart_ack: bool = False
    pending_direct: Optional[PacketId] = None  # relay: overheard direct packet
    pending_piggy: Optional[PacketId] = None   # relay: piggybacked packet
    retx_frame: Optional[Frame] = None         # relay: frame repeated on failure
    acked: set[PacketId] = field(default_factory=set)


def _begin_cycle(state: NodeState, cycle: int) -> None:
    state.current_cycle = cycle
    state.attempt_count = 0
    state.counterpart_id = None
    state.counterpart_delivered = False
    state.heard_peer_ack = False
    state.sent_counterpart_ack = False
    state.pending_direct = None
    state.pending_piggy = None
    state.retx_frame = None
    state.acked.clear()


def _new_own_payload(state: NodeState, params: SystemParameters) -> Payload:
    payload = make_payload(state.role, state.next_seq, params.data_payload_bytes)
    state.next_seq += 1
    state.own_pending = payload
    state.store.store(payload)
    return payload


def _decode_with_own(state: NodeState, frame: Frame) -> Payload:
    # The station's own packet of this cycle is the decode key; it stays
    # available here even after an early ACK released the store copy.
    if state.own_pending is None or state.own_pending.id not in frame.carries:
        raise ProtocolViolationError(
            f"{state.role.value} cannot decode coded frame {frame.carries}: "
            "counterpart packet is not buffered"
        )
    return xor_decode(frame.payload, state.own_pending)


def _coop_timeout_us(params: SystemParameters, coded: Frame) -> float:
    # Coded airtime plus the window in which both ACKs would have completed,
    # plus one SIFS of guard silence so the timer never ties with an ACK end.
    ack = ack_frame(params, NodeId.DESTINATION, NodeId.SOURCE, PacketId(NodeId.SOURCE, 0))
    return (
        airtime_us(coded, params)
        + 2.0 * (params.sifs_us + airtime_us(ack, params))
        + params.sifs_us
    )


def _relay_retransmit(state: NodeState, params: SystemParameters, delay_us: float) -> list[Action]:
    state.attempt_count += 1
    if state.attempt_count > state.max_attempts:
        raise RetryLimitError(
            f"relay gave up after {state.max_attempts} attempts in cycle {state.current_cycle}"
        )
    actions = [transmit(state.retx_frame, delay_us, attempt=state.attempt_count)]
    if state.relay_uses_timeout:
        actions.append(set_timer(COOP_TIMER, delay_us + _coop_timeout_us(params, state.retx_frame)))
    return actions


def ncc_step(
    state: NodeState, event: ProtocolEvent, params: SystemParameters
) -> tuple[NodeState, list[Action]]:
    """Advance one station of the coded scheme by one event."""
    if type(event) is CycleStart:
        return state, _ncc_cycle_start(state, params, event.cycle)
    if state.role is NodeId.RELAY:
        return state, _ncc_relay(state, event, params)
    return state, _ncc_endpoint(state, event, params)


def _ncc_cycle_start(state: NodeState, params: SystemParameters, cycle: int) -> list[Action]:
    _begin_cycle(state, cycle)
    if state.role is NodeId.SOURCE:
        payload = _new_own_payload(state, params)
        state.phase = Phase.AWAIT_CODED
        return [transmit(data_frame(params, state.role, NodeId.DESTINATION, payload), 0.0)]
    if state.role is NodeId.DESTINATION:
        _new_own_payload(state, params)
        state.phase = Phase.IDLE
        return _NO_ACTIONS
    state.phase = Phase.IDLE
    return _NO_ACTIONS


def _ncc_endpoint(
    state: NodeState, event: ProtocolEvent, params: SystemParameters
) -> list[Action]:
    if type(event) is FrameArrival:
        frame = event.frame
        if frame.kind is FrameKind.DATA and frame.dst is state.role:
            if event.outcome is DeliveryOutcome.DELIVERED:
                raise ProtocolViolationError(
                    "direct data arrived intact; this scenario always cooperates"
                )
            if state.role is NodeId.DESTINATION:
                # Request cooperation, piggybacking the reverse-direction packet.
                state.phase = Phase.AWAIT_CODED
                return [
                    transmit(
                        cfc_piggyback_frame(params, state.role, NodeId.RELAY, state.own_pending),
                        params.sifs_us,
                    )
                ]
            return _NO_ACTIONS
        if frame.kind is FrameKind.CODED:
            return _ncc_endpoint_coded(state, event, params)
        if frame.kind is FrameKind.ACK:
            return _ncc_endpoint_ack(state, frame, params)
        return _NO_ACTIONS
    return _NO_ACTIONS


def _ncc_endpoint_coded(
    state: NodeState, event: FrameArrival, params: SystemParameters
) -> list[Action]:
    if event.outcome is DeliveryOutcome.CORRUPTED:
        return _NO_ACTIONS
    if state.counterpart_delivered:
        # Duplicate coded reception: re-acknowledge so a relay waiting on the
        # other endpoint's leg eventually sees both ACKs (timeout mode only).
        if state.role is NodeId.DESTINATION and state.relay_uses_timeout:
            return [
                transmit(
                    ack_frame(params, state.role, NodeId.SOURCE, state.counterpart_id),
                    params.sifs_us,
                )
            ]
        return _NO_ACTIONS
    decoded = _decode_with_own(state, event.frame)
    state.counterpart_id = decoded.id
    state.counterpart_delivered = True
    actions = [deliver(decoded)]
    if state.role is NodeId.DESTINATION:
        actions.append(
            transmit(ack_frame(params, state.role, NodeId.SOURCE, decoded.id), params.sifs_us)
        )
        state.phase = Phase.AWAIT_ACK_S
    else:
        # The source acknowledges second; wait for the destination's ACK.
        if state.heard_peer_ack and not state.sent_counterpart_ack:
            # Late decode after the destination already acknowledged (timeout
            # mode): the destination re-acknowledges this same reception, so
            # take the slot right after its re-ACK.
            own_ack = ack_frame(params, state.role, NodeId.DESTINATION, decoded.id)
            state.sent_counterpart_ack = True
            state.phase = Phase.IDLE
            actions.append(
                transmit(own_ack, 2.0 * params.sifs_us + airtime_us(own_ack, params))
            )
        else:
            state.phase = Phase.AWAIT_ACK_D
    return actions


def _ncc_endpoint_ack(state: NodeState, frame: Frame, params: SystemParameters) -> list[Action]:
    acked = frame.carries[0]
    if state.own_pending is not None and acked == state.own_pending.id:
        state.store.release(acked)
        state.heard_peer_ack = True
        if state.role is NodeId.SOURCE:
            if state.counterpart_delivered and not state.sent_counterpart_ack:
                state.sent_counterpart_ack = True
                state.phase = Phase.IDLE
                return [
                    transmit(
                        ack_frame(params, state.role, NodeId.DESTINATION, state.counterpart_id),
                        params.sifs_us,
                    )
                ]
        else:
            state.phase = Phase.IDLE
    return _NO_ACTIONS


def _ncc_relay(state: NodeState, event: ProtocolEvent, params: SystemParameters) -> list[Action]:
    if type(event) is FrameArrival:
        frame = event.frame
        if frame.kind is FrameKind.DATA and event.outcome is DeliveryOutcome.DELIVERED:
            # Promiscuous capture of the direct transmission.
            state.store.store(frame.payload)
            state.pending_direct = frame.payload.id
            state.phase = Phase.AWAIT_CFC
            return _NO_ACTIONS
        if frame.kind is FrameKind.CFC_PIGGYBACK and frame.dst is state.role:
            if event.outcome is DeliveryOutcome.CORRUPTED:
                return []
            piggy = frame.payload
            state.store.store(piggy)
            state.pending_piggy = piggy.id
            overheard = (
                state.store.lookup(state.pending_direct) if state.pending_direct else None
            )
            if overheard is None:
                raise ProtocolViolationError(
                    "relay asked to cooperate without a buffered copy of the direct packet"
                )
            coded = coded_frame(params, state.role, xor_encode(overheard, piggy))
            state.retx_frame = coded
            state.attempt_count = 0
            state.phase = Phase.COOPERATING
            return _relay_retransmit(state, params, params.difs_us + params.t_onc_us)
        if frame.kind is FrameKind.ACK:
            acked = frame.carries[0]
            state.store.release(acked)
            state.acked.add(acked)
            if state.acked >= {state.pending_direct, state.pending_piggy}:
                state.phase = Phase.IDLE
            return _NO_ACTIONS
        return _NO_ACTIONS
    if type(event) is TxFeedback:
        if state.phase is not Phase.COOPERATING:
            return _NO_ACTIONS
        if event.outcome is DeliveryOutcome.CORRUPTED:
            return _relay_retransmit(state, params, 0.0)
        return _NO_ACTIONS
    if type(event) is TimerExpiry:
        if (
            event.tag == COOP_TIMER
            and state.phase is Phase.COOPERATING
            and event.cycle == state.current_cycle
        ):
            return _relay_retransmit(state, params, 0.0)
        return _NO_ACTIONS
    return _NO_ACTIONS


def carq_step(
    state: NodeState, event: ProtocolEvent, params: SystemParameters
) -> tuple[NodeState, list[Action]]:
    """Advance one station of the plain cooperative baseline by one event."""
    if type(event) is CycleStart:
        return state, _carq_cycle_start(state, params, event.cycle)
    if state.role is NodeId.RELAY:
        return state, _carq_relay(state, event, params)
    return state, _carq_endpoint(state, event, params)


def _carq_cycle_start(state: NodeState, params: SystemParameters, cycle: int) -> list[Action]:
    _begin_cycle(state, cycle)
    if state.role is NodeId.SOURCE:
        payload = _new_own_payload(state, params)
        state.phase = Phase.AWAIT_ACK_D
        return [transmit(data_frame(params, state.role, NodeId.DESTINATION, payload), 0.0)]
    if state.role is NodeId.DESTINATION:
        _new_own_payload(state, params)
    state.phase = Phase.IDLE
    return _NO_ACTIONS


def _carq_endpoint(
    state: NodeState, event: ProtocolEvent, params: SystemParameters
) -> list[Action]:
    if type(event) is not FrameArrival:
        return _NO_ACTIONS
    frame = event.frame
    if frame.kind is FrameKind.DATA and frame.dst is state.role:
        if frame.src is not NodeId.RELAY:
            # Direct transmission from the other endpoint, always in error.
            if event.outcome is DeliveryOutcome.DELIVERED:
                raise ProtocolViolationError(
                    "direct data arrived intact; this scenario always cooperates"
                )
            state.phase = Phase.AWAIT_CODED
            return [transmit(cfc_frame(params, state.role, NodeId.RELAY), params.sifs_us)]
        if event.outcome is DeliveryOutcome.CORRUPTED or state.counterpart_delivered:
            return _NO_ACTIONS
        received = frame.payload
        state.counterpart_id = received.id
        state.counterpart_delivered = True
        peer = frame.payload.id.origin
        actions = [
            deliver(received),
            transmit(ack_frame(params, state.role, peer, received.id), params.sifs_us),
        ]
        if state.role is NodeId.DESTINATION:
            # Second direction: send our own packet right after the ACK ends.
            ack_air = airtime_us(ack_frame(params, state.role, peer, received.id), params)
            actions.append(
                transmit(
                    data_frame(params, state.role, NodeId.SOURCE, state.own_pending),
                    params.sifs_us + ack_air,
                )
            )
            state.phase = Phase.AWAIT_ACK_S
        else:
            state.phase = Phase.IDLE
        return actions
    if frame.kind is FrameKind.ACK:
        acked = frame.carries[0]
        if state.own_pending is not None and acked == state.own_pending.id:
            state.store.release(acked)
            state.heard_peer_ack = True
            state.phase = Phase.IDLE
    return _NO_ACTIONS


def _carq_relay(state: NodeState, event: ProtocolEvent, params: SystemParameters) -> list[Action]:
    if type(event) is FrameArrival:
        frame = event.frame
        if (
            frame.kind is FrameKind.DATA
            and frame.src is not NodeId.RELAY
            and event.outcome is DeliveryOutcome.DELIVERED
        ):
            state.store.store(frame.payload)
            state.pending_direct = frame.payload.id
            state.phase = Phase.AWAIT_CFC
            return _NO_ACTIONS
        if frame.kind is FrameKind.CFC and frame.dst is state.role:
            stored = state.store.lookup(state.pending_direct) if state.pending_direct else None
            if stored is None:
                raise ProtocolViolationError(
                    "relay asked to cooperate without a buffered copy of the direct packet"
                )
            state.retx_frame = data_frame(params, state.role, frame.src, stored)
            state.attempt_count = 0
            state.phase = Phase.COOPERATING
            return _relay_retransmit(state, params, params.difs_us)
        if frame.kind is FrameKind.ACK:
            acked = frame.carries[0]
            state.store.release(acked)
            state.acked.add(acked)
            if state.pending_direct in state.acked:
                state.phase = Phase.IDLE
            return _NO_ACTIONS
        return _NO_ACTIONS
    if type(event) is TxFeedback:
        if state.phase is not Phase.COOPERATING:
            return _NO_ACTIONS
        if event.outcome is DeliveryOutcome.CORRUPTED:
            return _relay_retransmit(state, params, 0.0)
        return _NO_ACTIONS
    return _NO_ACTIONS


def step(
    state: NodeState, event: ProtocolEvent, params: SystemParameters
) -> tuple[NodeState, list[Action]]:
    """Dispatch to the station's protocol variant."""
    if state.variant is ProtocolVariant.NCC_ARQ:
        return ncc_step(state, event, params)
    return carq_step(state, event, params)


def transmission_count(trace, kinds=None) -> int:
    """Count transmissions in an engine trace, optionally filtered by frame kind.

    `kinds` may be a single FrameKind or any collection of them.
    """
    if kinds is not None and isinstance(kinds, FrameKind):
        kinds = {kinds}
    total = 0
    for record in trace:
        if record.action != "TX":
            continue
        if kinds is None or record.frame_kind in kinds:
            total += 1
    return total
