"""Command-line harness: scenario config, sweep execution, CSV/JSON output.

Config files are flat `key = value` text. Blank lines and lines starting
with `#` are ignored. Unknown keys are rejected. Keys and defaults:

    mac_header_bytes=34  phy_header_us=96  data_payload_bytes=1500
    ctrl_packet_bytes=14  sifs_us=10  difs_us=50
    source_control_rate_bps=6e6  source_data_rate_bps=6e6
    relay_control_rate_bps=6e6  relay_data_rate_bps=54e6
    t_onc_us=0  per_sd=0  per_rd=0  per_rs=0
    variant=both  mode=both  cycles=10000  seed=1  format=csv
    coded_both_legs=false  retx_list=1,2,3,4,5  (or per_rd_list=...)
    out=<path>  (optional)

Exactly one of `retx_list` (deterministic sweep) and `per_rd_list`
(stochastic sweep) may be given; with neither, the deterministic sweep over
1..5 retransmissions is used.

Output is a long-form table, one row per (sweep point, scheme, source) with
columns: retx, variant, source, throughput_mbps, delay_ms, gain, tx_data,
tx_cfc, tx_coded, tx_ack. `gain` is the coded-over-baseline throughput ratio
for that sweep point and source, present only when both schemes ran.

Exit codes: 0 success / all checks passed, 1 tolerance violation or aborted
simulation, 2 configuration error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import analytic, engine
from .channel import LinkErrorModel
from .core import FrameKind, SystemParameters, validate_parameters
from .netcode import NodeId
from .protocol import ProtocolVariant


class ConfigError(ValueError):
    """A scenario configuration could not be parsed or validated."""


_PARAM_FIELDS = {f.name: f.type for f in dataclasses.fields(SystemParameters)}
_INT_PARAMS = {"mac_header_bytes", "data_payload_bytes", "ctrl_packet_bytes"}

DEFAULT_RETX_LIST = [1, 2, 3, 4, 5]

# Reference targets for the default scenario, used by check mode.
SIM_VS_ANALYTIC_REL_TOL = 1e-9
NCC_THROUGHPUT_TARGET_BPS = 7.52e6   # at one retransmission, +-5%
CARQ_THROUGHPUT_TARGET_BPS = 4.3e6   # at one retransmission, +-5%
NCC_DELAY_TARGETS_MS = {1: 3.0, 5: 4.4}      # +-10%
CARQ_DELAY_TARGETS_MS = {1: 5.6, 5: 8.0}     # +-10%
THROUGHPUT_TARGET_REL_TOL = 0.05
DELAY_TARGET_REL_TOL = 0.10
GAIN_BAND = (1.70, 1.85)   # coded-over-baseline ratio across 1..5 retransmissions


@dataclass
class ScenarioConfig:
    params: SystemParameters = SystemParameters()
    variant: str = "both"        # ncc | carq | both
    mode: str = "both"           # analytic | sim | both
    retx_list: Optional[list[int]] = None
    per_rd_list: Optional[list[float]] = None
    cycles: int = 10_000
    seed: int = 1
    fmt: str = "csv"             # csv | json
    out: Optional[str] = None
    coded_both_legs: bool = False

    def effective_retx_list(self) -> Optional[list[int]]:
        if self.per_rd_list is not None:
            return None
        return self.retx_list if self.retx_list is not None else list(DEFAULT_RETX_LIST)

    def variants(self) -> list[ProtocolVariant]:
        if self.variant == "both":
            return [ProtocolVariant.NCC_ARQ, ProtocolVariant.C_ARQ]
        return [ProtocolVariant.NCC_ARQ if self.variant == "ncc" else ProtocolVariant.C_ARQ]

    def sources(self) -> list[str]:
        if self.mode == "both":
            return ["analytic", "sim"]
        return [self.mode]


def _parse_bool(value: str, key: str, line: int) -> bool:
    lowered = value.lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise ConfigError(f"line {line}: key '{key}' expects a boolean, got '{value}'")


def _parse_number(value: str, key: str, line: int, want_int: bool):
    try:
        return int(value) if want_int else float(value)
    except ValueError:
        kind = "an integer" if want_int else "a number"
        raise ConfigError(f"line {line}: key '{key}' expects {kind}, got '{value}'") from None


def _parse_list(value: str, key: str, line: int, want_int: bool) -> list:
    items = [item.strip() for item in value.split(",") if item.strip()]
    if not items:
        raise ConfigError(f"line {line}: key '{key}' expects a non-empty list")
    return [_parse_number(item, key, line, want_int) for item in items]


def load_config(path: Optional[str] = None) -> ScenarioConfig:
    """Load a scenario config file, or the defaults when `path` is None."""
    entries: list[tuple[str, str, int]] = []
    if path is not None:
        text = Path(path).read_text()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value', got '{raw}'")
            key, _, value = line.partition("=")
            entries.append((key.strip(), value.strip(), lineno))
    return _build_config(entries)


def _build_config(entries: list[tuple[str, str, int]]) -> ScenarioConfig:
    param_overrides: dict = {}
    config = ScenarioConfig()
    seen: set[str] = set()
    for key, value, lineno in entries:
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        seen.add(key)
        if key in _PARAM_FIELDS:
            want_int = key in _INT_PARAMS
            param_overrides[key] = _parse_number(value, key, lineno, want_int)
        elif key == "variant":
            if value not in ("ncc", "carq", "both"):
                raise ConfigError(f"line {lineno}: variant must be ncc, carq, or both")
            config.variant = value
        elif key == "mode":
            if value not in ("analytic", "sim", "both"):
                raise ConfigError(f"line {lineno}: mode must be analytic, sim, or both")
            config.mode = value
        elif key == "retx_list":
            config.retx_list = _parse_list(value, key, lineno, want_int=True)
        elif key == "per_rd_list":
            config.per_rd_list = _parse_list(value, key, lineno, want_int=False)
        elif key == "cycles":
            config.cycles = _parse_number(value, key, lineno, want_int=True)
        elif key == "seed":
            config.seed = _parse_number(value, key, lineno, want_int=True)
        elif key == "format":
            if value not in ("csv", "json"):
                raise ConfigError(f"line {lineno}: format must be csv or json")
            config.fmt = value
        elif key == "out":
            config.out = value
        elif key == "coded_both_legs":
            config.coded_both_legs = _parse_bool(value, key, lineno)
        else:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
    config.params = dataclasses.replace(SystemParameters(), **param_overrides)
    _validate_config(config)
    return config


def _validate_config(config: ScenarioConfig) -> None:
    problems = validate_parameters(config.params)
    if config.retx_list is not None and config.per_rd_list is not None:
        problems.append("retx_list and per_rd_list are mutually exclusive")
    if config.retx_list is not None and any(r < 1 for r in config.retx_list):
        problems.append("retx_list values must be >= 1")
    if config.per_rd_list is not None and any(not 0.0 <= p < 1.0 for p in config.per_rd_list):
        problems.append("per_rd_list values must be in [0, 1)")
    if config.cycles < 1:
        problems.append("cycles must be >= 1")
    if problems:
        raise ConfigError("; ".join(problems))


def dump_config(config: ScenarioConfig) -> str:
    """Serialize a config in the same flat key=value format `load_config` reads."""
    lines = []
    for name in _PARAM_FIELDS:
        lines.append(f"{name} = {getattr(config.params, name)!r}")
    lines.append(f"variant = {config.variant}")
    lines.append(f"mode = {config.mode}")
    if config.per_rd_list is not None:
        lines.append("per_rd_list = " + ",".join(repr(p) for p in config.per_rd_list))
    elif config.retx_list is not None:
        lines.append("retx_list = " + ",".join(str(r) for r in config.retx_list))
    lines.append(f"cycles = {config.cycles}")
    lines.append(f"seed = {config.seed}")
    lines.append(f"format = {config.fmt}")
    if config.out is not None:
        lines.append(f"out = {config.out}")
    lines.append(f"coded_both_legs = {str(config.coded_both_legs).lower()}")
    return "\n".join(lines) + "\n"


CSV_COLUMNS = (
    "retx",
    "variant",
    "source",
    "throughput_mbps",
    "delay_ms",
    "gain",
    "tx_data",
    "tx_cfc",
    "tx_coded",
    "tx_ack",
)


def _analytic_row(params: SystemParameters, variant: ProtocolVariant, e_r: float) -> dict:
    if variant is ProtocolVariant.NCC_ARQ:
        delay_us = analytic.ncc_cycle_delay(params, e_r).total_us
        thr = analytic.ncc_throughput(params, e_r)
        counts = analytic.ncc_expected_tx_counts(e_r)
    else:
        delay_us = analytic.carq_cycle_delay(params, e_r)
        thr = analytic.carq_throughput(params, e_r)
        counts = analytic.carq_expected_tx_counts(e_r)
    return {
        "variant": variant.value,
        "source": "analytic",
        "throughput_mbps": thr / 1e6,
        "delay_ms": delay_us / 1e3,
        "tx_data": counts["data"],
        "tx_cfc": counts["cfc"],
        "tx_coded": counts["coded"],
        "tx_ack": counts["ack"],
    }


def _sim_row(
    config: ScenarioConfig,
    variant: ProtocolVariant,
    channel: LinkErrorModel,
) -> dict:
    stats, _ = engine.run(config.params, variant, channel, config.cycles)
    cycles = stats.cycles_completed
    counts = stats.tx_counts
    cfc = counts.get(FrameKind.CFC, 0) + counts.get(FrameKind.CFC_PIGGYBACK, 0)
    return {
        "variant": variant.value,
        "source": "sim",
        "throughput_mbps": engine.throughput(stats) / 1e6,
        "delay_ms": engine.mean_delay(stats) / 1e3,
        "tx_data": counts.get(FrameKind.DATA, 0) / cycles,
        "tx_cfc": cfc / cycles,
        "tx_coded": counts.get(FrameKind.CODED, 0) / cycles,
        "tx_ack": counts.get(FrameKind.ACK, 0) / cycles,
    }


def _sweep_channels(config: ScenarioConfig) -> list[tuple[float, Optional[LinkErrorModel]]]:
    """One (expected retransmissions, channel) pair per sweep point."""
    points = []
    retx_list = config.effective_retx_list()
    if retx_list is not None:
        for r in retx_list:
            channel = None
            if config.mode in ("sim", "both"):
                channel = LinkErrorModel.for_retransmissions(r)
            points.append((float(r), channel))
        return points
    for index, per in enumerate(config.per_rd_list):
        e_r = analytic.expected_retransmissions(per)
        channel = None
        if config.mode in ("sim", "both"):
            channel = LinkErrorModel.stochastic(
                per={
                    (NodeId.RELAY, NodeId.DESTINATION): per,
                    (NodeId.RELAY, NodeId.SOURCE): config.params.per_rs,
                },
                rng_seed=config.seed + index,
                coded_both_legs=config.coded_both_legs,
            )
        points.append((e_r, channel))
    return points


def run_comparison(config: ScenarioConfig) -> list[dict]:
    """Evaluate the configured sweep; returns one row dict per (point, scheme, source)."""
    rows = []
    for e_r, channel in _sweep_channels(config):
        point_rows = []
        for variant in config.variants():
            for source in config.sources():
                if source == "analytic":
                    row = _analytic_row(config.params, variant, e_r)
                else:
                    row = _sim_row(config, variant, channel)
                row["retx"] = e_r
                point_rows.append(row)
        for source in config.sources():
            by_variant = {
                row["variant"]: row for row in point_rows if row["source"] == source
            }
            gain = None
            if "ncc" in by_variant and "carq" in by_variant:
                gain = by_variant["ncc"]["throughput_mbps"] / by_variant["carq"]["throughput_mbps"]
            for row in point_rows:
                if row["source"] == source:
                    row["gain"] = gain
        rows.extend(point_rows)
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return f"{value:.6g}"


def render_csv(rows: list[dict]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(row[column]) for column in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def render_json(rows: list[dict]) -> str:
    ordered = [{column: row[column] for column in CSV_COLUMNS} for row in rows]
    return json.dumps(ordered, indent=2) + "\n"


def _rel_diff(measured: float, reference: float) -> float:
    return abs(measured - reference) / abs(reference)


def check_rows(rows: list[dict]) -> list[str]:
    """Validate a BOTH/BOTH deterministic sweep against all built-in tolerances."""
    problems = []
    points: dict[tuple[float, str], dict[str, dict]] = {}
    for row in rows:
        points.setdefault((row["retx"], row["variant"]), {})[row["source"]] = row

    for (retx, variant), sources in sorted(points.items()):
        analytic_row = sources.get("analytic")
        sim_row = sources.get("sim")
        if analytic_row and sim_row:
            for metric in ("throughput_mbps", "delay_ms", "tx_data", "tx_cfc", "tx_coded", "tx_ack"):
                diff = _rel_diff(sim_row[metric], analytic_row[metric])
                if diff > SIM_VS_ANALYTIC_REL_TOL:
                    problems.append(
                        f"r={retx:g} {variant}: sim {metric} deviates from analytic "
                        f"by {diff:.3e} (> {SIM_VS_ANALYTIC_REL_TOL})"
                    )
        for source, row in sources.items():
            problems.extend(_check_reference_targets(retx, variant, source, row))
            if row["gain"] is not None and 1 <= retx <= 5:
                low, high = GAIN_BAND
                if not low <= row["gain"] <= high:
                    problems.append(
                        f"r={retx:g} {source}: gain {row['gain']:.4f} outside [{low}, {high}]"
                    )
    return problems


def _check_reference_targets(retx: float, variant: str, source: str, row: dict) -> list[str]:
    problems = []
    if variant == "ncc":
        delay_targets = NCC_DELAY_TARGETS_MS
        thr_target = NCC_THROUGHPUT_TARGET_BPS
    else:
        delay_targets = CARQ_DELAY_TARGETS_MS
        thr_target = CARQ_THROUGHPUT_TARGET_BPS
    if retx == 1.0:
        diff = _rel_diff(row["throughput_mbps"] * 1e6, thr_target)
        if diff > THROUGHPUT_TARGET_REL_TOL:
            problems.append(
                f"r=1 {variant} {source}: throughput {row['throughput_mbps']:.4f} Mb/s "
                f"off reference {thr_target / 1e6:.2f} Mb/s by {diff:.1%}"
            )
    target = delay_targets.get(int(retx)) if retx == int(retx) else None
    if target is not None:
        diff = _rel_diff(row["delay_ms"], target)
        if diff > DELAY_TARGET_REL_TOL:
            problems.append(
                f"r={retx:g} {variant} {source}: delay {row['delay_ms']:.4f} ms "
                f"off reference {target} ms by {diff:.1%}"
            )
    return problems


def _parse_retx_argument(text: str) -> list[int]:
    try:
        if ".." in text:
            low, _, high = text.partition("..")
            start, stop = int(low), int(high)
            if stop < start:
                raise ValueError
            return list(range(start, stop + 1))
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise ConfigError(f"--retx expects 'A..B' or a comma list, got '{text}'") from None


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nccarq",
        description=(
            "Compare the network-coding cooperative ARQ scheme with its plain "
            "cooperative baseline, by closed-form analysis and discrete-event simulation."
        ),
    )
    parser.add_argument("--config", metavar="PATH", help="scenario config file")
    parser.add_argument("--mode", choices=("analytic", "sim", "both"))
    parser.add_argument("--variant", choices=("ncc", "carq", "both"))
    parser.add_argument("--retx", metavar="A..B", help="deterministic sweep, range or comma list")
    parser.add_argument("--per", type=float, metavar="X", help="single stochastic sweep point")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--cycles", type=int)
    parser.add_argument("--out", metavar="PATH", help="write the table here instead of stdout")
    parser.add_argument("--format", choices=("csv", "json"), dest="fmt")
    parser.add_argument(
        "--check",
        action="store_true",
        help="run a BOTH/BOTH sweep and exit 1 if any tolerance is violated",
    )
    parser.add_argument(
        "--dump-config", action="store_true", help="print the effective config and exit"
    )
    return parser


def _apply_overrides(config: ScenarioConfig, args: argparse.Namespace) -> None:
    if args.mode:
        config.mode = args.mode
    if args.variant:
        config.variant = args.variant
    if args.retx is not None and args.per is not None:
        raise ConfigError("--retx and --per are mutually exclusive")
    if args.retx is not None:
        config.retx_list = _parse_retx_argument(args.retx)
        config.per_rd_list = None
    if args.per is not None:
        config.per_rd_list = [args.per]
        config.retx_list = None
    if args.seed is not None:
        config.seed = args.seed
    if args.cycles is not None:
        config.cycles = args.cycles
    if args.out is not None:
        config.out = args.out
    if args.fmt is not None:
        config.fmt = args.fmt
    _validate_config(config)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        _apply_overrides(config, args)
        if args.check:
            if config.per_rd_list is not None:
                raise ConfigError("--check needs a deterministic retransmission sweep")
            config.mode = "both"
            config.variant = "both"
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2

    if args.dump_config:
        sys.stdout.write(dump_config(config))
        return 0

    try:
        rows = run_comparison(config)
    except engine.SimulationError as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return 1

    text = render_csv(rows) if config.fmt == "csv" else render_json(rows)
    if config.out:
        Path(config.out).write_text(text)
    else:
        sys.stdout.write(text)

    if args.check:
        problems = check_rows(rows)
        if problems:
            for problem in problems:
                print(f"check failed: {problem}", file=sys.stderr)
            return 1
        print(f"all checks passed over {len(rows)} rows", file=sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
