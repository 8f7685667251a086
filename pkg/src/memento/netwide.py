"""Network-wide measurement: budgeted reporting points and a controller.

Measurement points observe their share of the traffic and report under a
hard per-packet byte budget, enforced as a token bucket that may never be
overdrawn. Three reporting methods exist: per-sample reports, batched
sample reports, and full-table snapshots (the aggregation baseline). The
controller replays reports into a sliding-window sketch: one Full update
per sample, then a Window update for every unreported packet the message
vouches for, which keeps the controller window aligned with the number of
packets observed network-wide.

Reports cross an in-process transport in their wire form so byte layouts
are exercised end to end; the modeled per-message overhead is an
accounting parameter and is not serialized.
"""

from __future__ import annotations

import math
import random
import struct
from collections import Counter, deque
from dataclasses import dataclass, field
from enum import IntEnum

from .errors import (BadMagic, ConfigError, TruncatedReport,
                     VersionMismatch)
from .hhh import HHHState
from .sketch import MementoSketch

MAGIC = 0x4D4D
WIRE_VERSION = 1
_HEADER = struct.Struct("<HBBIII")


class ReportKind(IntEnum):
    SAMPLE = 1
    BATCH = 2
    AGGREGATION = 3


@dataclass
class Report:
    point_id: int
    kind: ReportKind
    observed_count: int
    samples: list = field(default_factory=list)
    snapshot: list | None = None  # (key, count) pairs, aggregation only

    def byte_cost(self, overhead_bytes: float, sample_bytes: float) -> float:
        """Modeled transport cost of this report."""
        if self.kind is ReportKind.AGGREGATION:
            return overhead_bytes + (sample_bytes + 4) * len(self.snapshot)
        return overhead_bytes + sample_bytes * len(self.samples)


def _pack_key(key, dim: int) -> bytes:
    if dim == 1:
        return struct.pack("<I", key)
    return struct.pack("<II", key[0], key[1])


def serialize_report(report: Report, dim: int = 1) -> bytes:
    """Little-endian wire form; see `deserialize_report` for the layout."""
    if report.kind is ReportKind.AGGREGATION:
        count = len(report.snapshot)
        body = b"".join(_pack_key(k, dim) + struct.pack("<I", c)
                        for k, c in report.snapshot)
    else:
        count = len(report.samples)
        body = b"".join(_pack_key(k, dim) for k in report.samples)
    header = _HEADER.pack(MAGIC, WIRE_VERSION, int(report.kind),
                          report.point_id, report.observed_count, count)
    return header + body


def deserialize_report(buf: bytes, dim: int = 1) -> Report:
    """Parse a report: 16-byte header (magic, version, kind, point id,
    observed count, item count), then fixed-size keys, or key/count pairs
    for aggregation snapshots. The key dimensionality is deployment-wide
    and is not carried on the wire."""
    if len(buf) < _HEADER.size:
        raise TruncatedReport(
            f"need {_HEADER.size} header bytes, got {len(buf)}")
    magic, version, kind_raw, point_id, observed, count = \
        _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise BadMagic(f"bad magic 0x{magic:04X}")
    if version != WIRE_VERSION:
        raise VersionMismatch(f"unsupported version {version}")
    try:
        kind = ReportKind(kind_raw)
    except ValueError:
        raise TruncatedReport(f"unknown report kind {kind_raw}") from None
    key_bytes = 4 * dim
    item_bytes = key_bytes + (4 if kind is ReportKind.AGGREGATION else 0)
    expected = _HEADER.size + item_bytes * count
    if len(buf) != expected:
        raise TruncatedReport(
            f"expected {expected} bytes for {count} items, got {len(buf)}")
    offset = _HEADER.size
    if kind is ReportKind.AGGREGATION:
        snapshot = []
        for _ in range(count):
            if dim == 1:
                key, cnt = struct.unpack_from("<II", buf, offset)
            else:
                s, d, cnt = struct.unpack_from("<III", buf, offset)
                key = (s, d)
            snapshot.append((key, cnt))
            offset += item_bytes
        return Report(point_id=point_id, kind=kind,
                      observed_count=observed, snapshot=snapshot)
    samples = []
    for _ in range(count):
        if dim == 1:
            samples.append(struct.unpack_from("<I", buf, offset)[0])
        else:
            samples.append(struct.unpack_from("<II", buf, offset))
        offset += item_bytes
    return Report(point_id=point_id, kind=kind, observed_count=observed,
                  samples=samples)


class MeasurementPoint:
    """One traffic-observing element reporting under a byte budget.

    Sample and Batch points sample packets with probability tau and emit
    a report once the batch fills (budget permitting) or unconditionally
    once ceil(batch_size / tau) packets have passed since the previous
    report, whichever comes first. The forced cadence keeps every point's
    unreported backlog below batch_size / tau packets, and at any tau not
    exceeding budget * b / (overhead + sample_bytes * b) the earned bytes
    provably cover the forced report. Reports carry at most batch_size
    samples; overflow samples roll into the next report.

    Aggregation points keep exact per-key counts and snapshot the whole
    table whenever the token bucket can pay for it.
    """

    def __init__(self, point_id: int, method: ReportKind, tau: float,
                 batch_size: int, budget: float, overhead_bytes: float = 64,
                 sample_bytes: float = 4, seed: int | None = None):
        if method is ReportKind.SAMPLE:
            batch_size = 1
        if batch_size < 1:
            raise ConfigError("batch size must be at least 1")
        if not 0 < tau <= 1:
            raise ConfigError("tau must be in (0, 1]")
        self.point_id = point_id
        self.method = method
        self.tau = tau
        self.batch_size = batch_size
        self.budget = budget
        self.overhead_bytes = overhead_bytes
        self.sample_bytes = sample_bytes
        self.cadence = math.ceil(batch_size / tau)
        self.rng = random.Random(seed)
        self.pending: deque = deque()
        self.observed_since_report = 0
        self.earned_bytes = 0.0
        self.spent_bytes = 0.0
        self.table: Counter = Counter()
        self.deferred_packets = 0  # packets of delay forced by the budget
        self.reports_sent = 0
        self.packets_seen = 0

    # -- helpers ----------------------------------------------------------

    def _emit(self, samples: list) -> Report:
        kind = self.method
        report = Report(point_id=self.point_id, kind=kind,
                        observed_count=self.observed_since_report,
                        samples=samples)
        cost = report.byte_cost(self.overhead_bytes, self.sample_bytes)
        assert self.spent_bytes + cost <= self.earned_bytes + 1e-9, \
            "budget overdraft"
        self.spent_bytes += cost
        self.observed_since_report = 0
        self.reports_sent += 1
        return report

    def observe(self, key) -> Report | None:
        """Process one packet; returns a report when one is emitted."""
        if self.method is ReportKind.AGGREGATION:
            return self._observe_aggregation(key)
        self.packets_seen += 1
        self.observed_since_report += 1
        self.earned_bytes += self.budget
        if self.rng.random() < self.tau:
            self.pending.append(key)
        bank = self.earned_bytes - self.spent_bytes
        full_cost = (self.overhead_bytes
                     + self.sample_bytes * self.batch_size)
        if len(self.pending) >= self.batch_size:
            if bank >= full_cost:
                take = [self.pending.popleft()
                        for _ in range(self.batch_size)]
                return self._emit(take)
            self.deferred_packets += 1
        if self.observed_since_report >= self.cadence:
            take_n = min(self.batch_size, len(self.pending))
            cost = self.overhead_bytes + self.sample_bytes * take_n
            if bank >= cost:
                take = [self.pending.popleft() for _ in range(take_n)]
                return self._emit(take)
            self.deferred_packets += 1
        return None

    def _observe_aggregation(self, key) -> Report | None:
        self.packets_seen += 1
        self.observed_since_report += 1
        self.earned_bytes += self.budget
        self.table[key] += 1
        cost = (self.overhead_bytes
                + (self.sample_bytes + 4) * len(self.table))
        if self.earned_bytes - self.spent_bytes >= cost:
            report = Report(point_id=self.point_id,
                            kind=ReportKind.AGGREGATION,
                            observed_count=self.observed_since_report,
                            snapshot=sorted(self.table.items()))
            self.spent_bytes += cost
            self.observed_since_report = 0
            self.reports_sent += 1
            self.table = Counter()
            return report
        return None

    @property
    def unreported(self) -> int:
        return self.observed_since_report

    @property
    def bytes_per_packet(self) -> float:
        if self.packets_seen == 0:
            return 0.0
        return self.spent_bytes / self.packets_seen


class AggregateWindow:
    """Idealized exact sliding window fed by snapshot reports: unlimited
    controller space, lossless merging. Serves as the aggregation
    baseline; also tracks per-/8-source mass for subnet queries."""

    def __init__(self, window: int):
        self.window = window
        self._queue: deque = deque()
        self.counts: Counter = Counter()
        self.subnet_counts: Counter = Counter()

    @staticmethod
    def _subnet(key) -> int:
        src = key[0] if isinstance(key, tuple) else key
        return src >> 24

    def _push(self, key) -> None:
        self._queue.append(key)
        self.counts[key] += 1
        self.subnet_counts[self._subnet(key)] += 1
        if len(self._queue) > self.window:
            old = self._queue.popleft()
            self.counts[old] -= 1
            if not self.counts[old]:
                del self.counts[old]
            sub = self._subnet(old)
            self.subnet_counts[sub] -= 1
            if not self.subnet_counts[sub]:
                del self.subnet_counts[sub]

    def merge_snapshot(self, snapshot) -> None:
        for key, count in snapshot:
            for _ in range(count):
                self._push(key)

    def query(self, key) -> int:
        return self.counts.get(key, 0)

    def subnet_share(self, subnet: int) -> float:
        return self.subnet_counts.get(subnet, 0) / self.window


class Controller:
    """Replays reports into a network-wide sliding-window detector.

    mode "hh" drives a plain sketch keyed by flow; mode "hhh" draws one
    uniformly random prefix level per sampled packet at ingestion, which
    matches sampling prefixes at the edge in distribution while keeping
    sample payloads at one key each. mode "aggregation" maintains the
    idealized exact baseline window.
    """

    def __init__(self, mode: str, window: int, tau: float,
                 eps_a: float = 0.01, dim: int = 1, seed: int | None = None,
                 hhh_state: HHHState | None = None):
        self.mode = mode
        self.window = window
        self.tau = tau
        self.dim = dim
        self.rejected = 0
        self.packets_ingested = 0
        if mode == "hh":
            self.sketch = MementoSketch(window, eps_a, tau=tau, seed=seed)
        elif mode == "hhh":
            if hhh_state is None:
                raise ConfigError("hhh mode needs an HHHState")
            self.state = hhh_state
        elif mode == "aggregation":
            self.aggregate = AggregateWindow(window)
        else:
            raise ConfigError(f"unknown controller mode {mode!r}")

    def ingest(self, report: Report) -> bool:
        """Apply one report; False when rejected as malformed."""
        if report.kind is ReportKind.AGGREGATION:
            if self.mode != "aggregation" or report.snapshot is None:
                self.rejected += 1
                return False
            total = sum(c for _, c in report.snapshot)
            if report.observed_count != total:
                self.rejected += 1
                return False
            self.aggregate.merge_snapshot(report.snapshot)
            self.packets_ingested += report.observed_count
            return True
        if report.observed_count < len(report.samples):
            self.rejected += 1
            return False
        if self.mode == "hh":
            for key in report.samples:
                self.sketch.full_update(key)
            for _ in range(report.observed_count - len(report.samples)):
                self.sketch.window_update()
        elif self.mode == "hhh":
            for key in report.samples:
                self.state.ingest_sampled(key)
            for _ in range(report.observed_count - len(report.samples)):
                self.state.advance_window()
        else:
            self.rejected += 1
            return False
        self.packets_ingested += report.observed_count
        return True

    def query(self, key) -> float:
        if self.mode == "hh":
            return self.sketch.query(key)
        if self.mode == "aggregation":
            return float(self.aggregate.query(key))
        return self.state.f_hat((32, key) if self.dim == 1 else
                                (32, key[0], 32, key[1]))


class NetworkSimulator:
    """Deterministic in-process deployment: m points, one controller.

    Packets are assigned round-robin by default. Every emitted report is
    serialized and parsed again so the wire format is exercised on the
    live path. With assert_staleness on, the combined unreported backlog
    is checked against points * ceil(batch / tau) after every packet.
    """

    def __init__(self, points: list[MeasurementPoint],
                 controller: Controller, dim: int = 1,
                 assert_staleness: bool = False):
        self.points = points
        self.controller = controller
        self.dim = dim
        self.assert_staleness = assert_staleness
        self.max_unreported = 0
        self.packets = 0

    def staleness_limit(self) -> int:
        return sum(p.cadence for p in self.points
                   if p.method is not ReportKind.AGGREGATION)

    def process(self, key) -> Report | None:
        point = self.points[self.packets % len(self.points)]
        self.packets += 1
        report = point.observe(key)
        if report is not None:
            wire = serialize_report(report, self.dim)
            self.controller.ingest(deserialize_report(wire, self.dim))
        backlog = sum(p.unreported for p in self.points)
        if backlog > self.max_unreported:
            self.max_unreported = backlog
        if self.assert_staleness:
            limit = self.staleness_limit()
            assert backlog <= limit, \
                f"unreported backlog {backlog} exceeds bound {limit}"
        return report

    def run(self, keys) -> None:
        for key in keys:
            self.process(key)
