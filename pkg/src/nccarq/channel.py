"""Per-link frame delivery outcomes, scripted or drawn from a seeded RNG.

The direct link between the endpoint pair is structurally bad: data frames
on it are always received in error, which is what triggers cooperation.
Control frames are always received correctly. Relay-adjacent data legs are
the only lossy ones; they either replay a scripted number of failures per
cooperation cycle (deterministic mode) or draw Bernoulli outcomes from a
seeded Mersenne Twister stream (stochastic mode).
"""
from __future__ import annotations

import random
from enum import Enum
from typing import Optional

from .core import FrameKind
from .netcode import NodeId

Link = tuple[NodeId, NodeId]


class ChannelMode(Enum):
    DETERMINISTIC = "deterministic"
    STOCHASTIC = "stochastic"


class DeliveryOutcome(Enum):
    DELIVERED = "delivered"
    CORRUPTED = "corrupted"


class UnknownLinkError(LookupError):
    """A delivery outcome was requested for a link the model does not configure."""


_ENDPOINTS = (NodeId.SOURCE, NodeId.DESTINATION)


class LinkErrorModel:
    """Decides whether each frame reception succeeds.

    `scripted_failures` maps a relay data leg to the number of initial
    failures it replays in every cooperation cycle, so attempts per cycle are
    exactly `scripted_failures + 1`. `per` maps a leg to its packet error
    rate for stochastic draws. With `coded_both_legs` the relay-to-source leg
    of the coded multicast is also drawn; by default it always succeeds and
    only the relay-to-destination leg decides the attempt.
    """

    def __init__(
        self,
        mode: ChannelMode,
        per: Optional[dict[Link, float]] = None,
        scripted_failures: Optional[dict[Link, int]] = None,
        rng_seed: int = 0,
        coded_both_legs: bool = False,
    ) -> None:
        self.mode = mode
        self.per = dict(per or {})
        self.scripted_failures = dict(scripted_failures or {})
        self.rng_seed = rng_seed
        self.coded_both_legs = coded_both_legs
        self._rng = random.Random(rng_seed)
        self._cycle_attempts: dict[Link, int] = {}

    @classmethod
    def deterministic(cls, scripted_failures: dict[Link, int]) -> "LinkErrorModel":
        return cls(ChannelMode.DETERMINISTIC, scripted_failures=scripted_failures)

    @classmethod
    def for_retransmissions(cls, retx: int) -> "LinkErrorModel":
        """Deterministic model whose relay legs each need exactly `retx` attempts."""
        if retx < 1:
            raise ValueError(f"retransmission count must be >= 1, got {retx}")
        failures = retx - 1
        return cls.deterministic(
            {
                (NodeId.RELAY, NodeId.DESTINATION): failures,
                (NodeId.RELAY, NodeId.SOURCE): failures,
            }
        )

    @classmethod
    def stochastic(
        cls,
        per: dict[Link, float],
        rng_seed: int,
        coded_both_legs: bool = False,
    ) -> "LinkErrorModel":
        return cls(
            ChannelMode.STOCHASTIC,
            per=per,
            rng_seed=rng_seed,
            coded_both_legs=coded_both_legs,
        )

    def deliver_outcome(
        self,
        src: NodeId,
        dst: NodeId,
        frame_kind: FrameKind,
        attempt_index: Optional[int] = None,
        addressed: bool = True,
    ) -> DeliveryOutcome:
        """Outcome of `dst` receiving a `frame_kind` frame transmitted by `src`.

        `addressed` is False when `dst` merely overhears a unicast meant for
        another station. `attempt_index` is the 1-based attempt number of a
        relay data leg; when omitted, an internal per-cycle counter is used.
        """
        if frame_kind in (FrameKind.CFC, FrameKind.ACK):
            return DeliveryOutcome.DELIVERED
        if frame_kind is FrameKind.CFC_PIGGYBACK:
            # The piggybacked data unit is only decodable by the addressed
            # relay; third parties hear it over the bad direct channel.
            return DeliveryOutcome.DELIVERED if addressed else DeliveryOutcome.CORRUPTED
        if frame_kind is FrameKind.CODED:
            if src is not NodeId.RELAY:
                raise UnknownLinkError(f"coded frames originate at the relay, not {src}")
            if dst is NodeId.DESTINATION:
                return self._leg_outcome((src, dst), attempt_index)
            if not self.coded_both_legs:
                return DeliveryOutcome.DELIVERED
            return self._leg_outcome((src, dst), attempt_index)
        # DATA
        if src in _ENDPOINTS and dst in _ENDPOINTS:
            # Direct transmissions always arrive in error.
            return DeliveryOutcome.CORRUPTED
        if src in _ENDPOINTS and dst is NodeId.RELAY:
            # Overhearing on a relay-adjacent link succeeds.
            return DeliveryOutcome.DELIVERED
        if src is NodeId.RELAY:
            if not addressed:
                # Overheard relay retransmission of the receiver's own packet.
                return DeliveryOutcome.DELIVERED
            return self._leg_outcome((src, dst), attempt_index)
        raise UnknownLinkError(f"no delivery rule for {src.value}->{dst.value} {frame_kind.value}")

    def _leg_outcome(self, link: Link, attempt_index: Optional[int]) -> DeliveryOutcome:
        if self.mode is ChannelMode.DETERMINISTIC:
            try:
                failures = self.scripted_failures[link]
            except KeyError:
                raise UnknownLinkError(
                    f"no scripted failure count for link {link[0].value}->{link[1].value}"
                ) from None
            if attempt_index is None:
                attempt_index = self._cycle_attempts.get(link, 0) + 1
                self._cycle_attempts[link] = attempt_index
            if attempt_index <= failures:
                return DeliveryOutcome.CORRUPTED
            return DeliveryOutcome.DELIVERED
        try:
            per = self.per[link]
        except KeyError:
            raise UnknownLinkError(
                f"no PER configured for link {link[0].value}->{link[1].value}"
            ) from None
        if self._rng.random() < per:
            return DeliveryOutcome.CORRUPTED
        return DeliveryOutcome.DELIVERED

    def reset_cycle(self) -> None:
        """Start a new cooperation cycle.

        Deterministic per-cycle attempt counters return to zero so every
        cycle replays its scripted failures; the stochastic stream position
        is deliberately left untouched.
        """
        self._cycle_attempts.clear()
