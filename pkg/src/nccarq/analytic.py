"""Closed-form delay and throughput of one bidirectional packet exchange.

The coded scheme completes both directions in a single cooperation phase:
direct transmission, piggybacked call for cooperation, a number of coded
multicast attempts, and two acknowledgments. The plain cooperative baseline
runs one full unidirectional cooperation cycle per direction. Both models
count two delivered payloads per exchange.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import ParameterError, SystemParameters, frame_airtime


@dataclass(frozen=True, slots=True)
class CycleBreakdown:
    """Delay decomposition of one coded exchange."""

    t_a_us: float          # initial direct data transmission
    t_coop_us: float       # cooperation phase
    total_us: float
    expected_retx: float


@dataclass(frozen=True, slots=True)
class SweepRow:
    """Both schemes evaluated at one retransmission count."""

    retx: float
    ncc_delay_us: float
    carq_delay_us: float
    ncc_throughput_bps: float
    carq_throughput_bps: float
    gain_ratio: float


def expected_retransmissions(per_rd: float) -> float:
    """Mean relay transmissions until the receiver decodes, 1/(1 - PER)."""
    if not 0.0 <= per_rd < 1.0:
        raise ParameterError(f"relay-link PER must be in [0, 1), got {per_rd}")
    return 1.0 / (1.0 - per_rd)


def direct_data_airtime_us(params: SystemParameters) -> float:
    """Airtime of a full data frame on the direct endpoint-to-endpoint link."""
    return frame_airtime(params.data_frame_bytes, params.source_data_rate_bps, params)


def relay_data_airtime_us(params: SystemParameters) -> float:
    """Airtime of a full data or coded frame on a relay-adjacent link."""
    return frame_airtime(params.data_frame_bytes, params.relay_data_rate_bps, params)


def control_airtime_us(params: SystemParameters) -> float:
    """Airtime of a control frame (CFC or ACK) sent by an endpoint."""
    return frame_airtime(params.ctrl_packet_bytes, params.source_control_rate_bps, params)


def _require_retx(e_r: float) -> None:
    if e_r < 1.0:
        raise ParameterError(f"expected retransmissions must be >= 1, got {e_r}")


def ncc_cooperation_delay(params: SystemParameters, e_r: float) -> float:
    """Cooperation-phase duration of the coded scheme, in microseconds.

    SIFS, piggybacked CFC, DIFS plus coding overhead, `e_r` back-to-back
    coded multicasts, then the two acknowledgments separated by SIFS.
    """
    _require_retx(e_r)
    t_cfc = control_airtime_us(params)
    t_ack = control_airtime_us(params)
    t_b = relay_data_airtime_us(params)
    t_coded = relay_data_airtime_us(params)
    return (
        params.sifs_us
        + t_cfc
        + t_b
        + params.difs_us
        + params.t_onc_us
        + e_r * t_coded
        + params.sifs_us
        + t_ack
        + params.sifs_us
        + t_ack
    )


def ncc_cycle_delay(params: SystemParameters, e_r: float) -> CycleBreakdown:
    """Total time for one coded bidirectional exchange."""
    t_a = direct_data_airtime_us(params)
    t_coop = ncc_cooperation_delay(params, e_r)
    return CycleBreakdown(
        t_a_us=t_a, t_coop_us=t_coop, total_us=t_a + t_coop, expected_retx=e_r
    )


def ncc_throughput(params: SystemParameters, e_r: float) -> float:
    """Aggregated throughput in b/s: two payloads delivered per exchange."""
    total_us = ncc_cycle_delay(params, e_r).total_us
    return 2.0 * params.payload_bits / total_us * 1e6


def carq_cycle_delay(params: SystemParameters, e_r: float) -> float:
    """Total time for a bidirectional exchange under the plain cooperative baseline.

    Two identical unidirectional cycles, each: direct data, SIFS, plain CFC,
    DIFS, `e_r` relay retransmissions, SIFS, ACK.
    """
    _require_retx(e_r)
    one_direction = (
        direct_data_airtime_us(params)
        + params.sifs_us
        + control_airtime_us(params)
        + params.difs_us
        + e_r * relay_data_airtime_us(params)
        + params.sifs_us
        + control_airtime_us(params)
    )
    return 2.0 * one_direction


def carq_throughput(params: SystemParameters, e_r: float) -> float:
    """Baseline throughput in b/s over the two-packet exchange."""
    return 2.0 * params.payload_bits / carq_cycle_delay(params, e_r) * 1e6


def sweep(params: SystemParameters, retx_values: Iterable[float]) -> list[SweepRow]:
    """Evaluate both schemes over a sequence of retransmission counts."""
    rows = []
    for e_r in retx_values:
        ncc_thr = ncc_throughput(params, e_r)
        carq_thr = carq_throughput(params, e_r)
        rows.append(
            SweepRow(
                retx=float(e_r),
                ncc_delay_us=ncc_cycle_delay(params, e_r).total_us,
                carq_delay_us=carq_cycle_delay(params, e_r),
                ncc_throughput_bps=ncc_thr,
                carq_throughput_bps=carq_thr,
                gain_ratio=ncc_thr / carq_thr,
            )
        )
    return rows


def ncc_expected_tx_counts(e_r: float) -> dict[str, float]:
    """Per-exchange transmission counts of the coded scheme."""
    _require_retx(e_r)
    return {"data": 1.0, "cfc": 1.0, "coded": e_r, "ack": 2.0}


def carq_expected_tx_counts(e_r: float) -> dict[str, float]:
    """Per-exchange transmission counts of the baseline (totals 6 + 2*e_r)."""
    _require_retx(e_r)
    return {"data": 2.0 + 2.0 * e_r, "cfc": 2.0, "coded": 0.0, "ack": 2.0}
