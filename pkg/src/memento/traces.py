"""Trace ingestion, synthetic generation and flood injection.

The on-disk format is CSV, one packet per line: `src_ip[,dst_ip][,flood]`
with dotted-quad addresses, an optional 0/1 flood tag on generated
traces, and `#` comment lines ignored. In memory a trace is a plain list
of flow keys (int for 1-D, (src, dst) pairs for 2-D) so the per-packet
loops stay cheap; `TraceRecord` carries the parsed form at the file
boundary.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .hierarchy import format_ip, parse_ip


@dataclass(frozen=True)
class TraceRecord:
    src: int
    dst: int | None = None
    is_flood: bool = False

    @property
    def key(self):
        return self.src if self.dst is None else (self.src, self.dst)

    def to_line(self) -> str:
        parts = [format_ip(self.src)]
        if self.dst is not None:
            parts.append(format_ip(self.dst))
        return ",".join(parts)


class TraceParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def parse_line(line: str, line_no: int = 0) -> TraceRecord | None:
    """Parse one CSV line; None for blanks and comments."""
    text = line.strip()
    if not text or text.startswith("#"):
        return None
    fields = [f.strip() for f in text.split(",")]
    if len(fields) > 3:
        raise TraceParseError(line_no, f"too many fields in {text!r}")
    try:
        src = parse_ip(fields[0])
    except ValueError as exc:
        raise TraceParseError(line_no, str(exc)) from None
    dst = None
    flood = "0"
    if len(fields) == 2:
        # a second field with dots is a destination, otherwise a flood tag
        if "." in fields[1]:
            dst = fields[1]
        else:
            flood = fields[1]
    elif len(fields) == 3:
        dst, flood = fields[1], fields[2]
    if dst is not None:
        try:
            dst = parse_ip(dst)
        except ValueError as exc:
            raise TraceParseError(line_no, str(exc)) from None
    if flood not in ("0", "1"):
        raise TraceParseError(line_no, f"bad flood tag {flood!r}")
    return TraceRecord(src=src, dst=dst, is_flood=flood == "1")


def load_trace(path):
    """Lazily yield TraceRecord per packet line of a CSV trace."""
    with open(path, "r", encoding="ascii") as handle:
        for line_no, line in enumerate(handle, start=1):
            record = parse_line(line, line_no)
            if record is not None:
                yield record


def save_trace(path, keys, flood_flags=None) -> None:
    """Write keys as CSV; flood_flags adds the third column."""
    with open(path, "w", encoding="ascii") as handle:
        for i, key in enumerate(keys):
            if isinstance(key, tuple):
                line = f"{format_ip(key[0])},{format_ip(key[1])}"
            else:
                line = format_ip(key)
            if flood_flags is not None:
                line += f",{1 if flood_flags[i] else 0}"
            handle.write(line + "\n")


def trace_keys(records) -> list:
    return [r.key for r in records]


def _flow_ips(num_flows: int) -> np.ndarray:
    """Deterministic pseudo-random IP per flow index. The odd multiplier
    is a bijection mod 2^32, so distinct flows never collide."""
    idx = np.arange(num_flows, dtype=np.uint64)
    out = (idx * np.uint64(2654435761)) & np.uint64(0xFFFFFFFF)
    return out.astype(np.uint32)


def gen_zipf_trace(num_packets: int, num_flows: int, alpha: float,
                   seed: int, dim: int = 1) -> list:
    """Sample keys i.i.d. from a Zipf(alpha) law over num_flows flows
    mapped to deterministic pseudo-random IPs. alpha = 0 is uniform.
    Reproducible per seed."""
    if alpha < 0:
        raise ConfigError("alpha must be non-negative")
    if num_flows < 1 or num_packets < 0:
        raise ConfigError("need num_flows >= 1 and num_packets >= 0")
    rng = np.random.default_rng(seed)
    weights = 1.0 / np.arange(1, num_flows + 1, dtype=np.float64) ** alpha
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    ranks = np.searchsorted(cdf, rng.random(num_packets), side="right")
    ips = _flow_ips(num_flows)
    srcs = ips[ranks]
    if dim == 1:
        return srcs.tolist()
    dst_ips = _flow_ips(2 * num_flows)[num_flows:]
    dsts = dst_ips[ranks]
    return list(zip(srcs.tolist(), dsts.tolist()))


@dataclass(frozen=True)
class FloodSpec:
    """Flood injection parameters: distinct random subnets that take over
    a fraction of the traffic from a random start line on."""
    num_subnets: int = 50
    subnet_mask_bits: int = 8
    flood_prob: float = 0.7
    start_range: tuple[int, int] = (0, 10 ** 6)
    seed: int = 0


@dataclass
class FloodTrace:
    keys: list
    flood_flags: list[bool]
    subnets: list[int]  # subnet values, i.e. the masked high bits
    start_line: int


def inject_flood(keys: list, spec: FloodSpec) -> FloodTrace:
    """Overlay a flood on a trace.

    Before a uniformly chosen start line the trace passes through
    unchanged. From there on, each output line is a flood packet from a
    uniformly chosen flood subnet with probability flood_prob, else the
    next original line. Output length equals input length, so the tail of
    the original trace may go unused.
    """
    lo, hi = spec.start_range
    if len(keys) <= hi:
        raise ConfigError("trace shorter than the flood start range")
    rng = random.Random(spec.seed)
    subnet_space = 1 << spec.subnet_mask_bits
    if spec.num_subnets > subnet_space:
        raise ConfigError("more subnets requested than the mask allows")
    subnets = rng.sample(range(subnet_space), spec.num_subnets)
    start = rng.randrange(lo + 1, hi) if hi > lo + 1 else lo + 1
    host_bits = 32 - spec.subnet_mask_bits
    two_dim = isinstance(keys[0], tuple)

    out = list(keys[:start])
    flags = [False] * start
    next_orig = start
    total = len(keys)
    while len(out) < total:
        if rng.random() < spec.flood_prob:
            subnet = subnets[rng.randrange(spec.num_subnets)]
            src = (subnet << host_bits) | rng.randrange(1 << host_bits)
            out.append((src, rng.randrange(1 << 32)) if two_dim else src)
            flags.append(True)
        else:
            if next_orig >= total:
                break
            out.append(keys[next_orig])
            flags.append(False)
            next_orig += 1
    return FloodTrace(keys=out, flood_flags=flags, subnets=subnets,
                      start_line=start)
