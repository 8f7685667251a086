"""Sliding-window frequency sketch with decoupled update paths.

The stream is split into frames of W packets, each frame into k blocks.
An approximate in-frame count is kept in a Space Saving table; whenever a
key's in-frame estimate crosses a multiple of the overflow unit, the event
is logged in a per-block queue and tallied in the overflow table B. Window
expiry is de-amortized: each update retires at most one logged overflow
from the oldest block, so every update touches O(1) state.

Two update paths exist: a Full update inserts the key and advances the
window, a Window update only advances the window. `update` picks the Full
path with probability tau, which is where the speedup at tau < 1 comes
from. Estimates are scaled back by 1/tau and therefore may be fractional.

A sketch instance is single-writer: callers must serialize updates and
queries externally. Independent instances may run in parallel.
"""

from __future__ import annotations

import math
import random
from collections import deque

from .errors import ConfigError
from .spacesaving import SpaceSavingTable


class MementoSketch:
    """Windowed heavy-hitter sketch over the last `window` updates.

    Args:
        window: window size in packets. Rounded down to a multiple of the
            block count; the effective value is exposed as `.window`.
        eps_a: additive error fraction of the window, in (0, 1). The block
            count is ceil(4 / eps_a).
        tau: probability that `update` takes the Full path, in (0, 1].
        seed: seed for the per-sketch RNG; the Bernoulli(tau) draw consumes
            exactly one output per `update` call.
        debug_checks: when True, structural invariants are verified after
            every update (size bounds, queue accounting). Slows updates.
    """

    def __init__(self, window: int, eps_a: float, tau: float = 1.0,
                 seed: int | None = None, debug_checks: bool = False):
        if not 0.0 < eps_a < 1.0:
            raise ConfigError(f"eps_a must be in (0, 1), got {eps_a}")
        if not 0.0 < tau <= 1.0:
            raise ConfigError(f"tau must be in (0, 1], got {tau}")
        k = math.ceil(4.0 / eps_a)
        if window < 4 * k:
            raise ConfigError(
                f"window too small for requested accuracy: need at least "
                f"{4 * k} packets for eps_a={eps_a}, got {window}")
        self.requested_window = window
        self.window = window - window % k  # block-aligned
        self.k = k
        self.block_packets = self.window // k
        self.tau = tau
        # Overflow unit in Space Saving counts. With sampling, inserts per
        # frame concentrate around tau*W, so the unit is scaled to the
        # insert rate (plus three-sigma headroom that keeps the per-frame
        # overflow quota at k in practice). At tau=1 it equals the block
        # length and the sketch degenerates to the unsampled algorithm.
        if tau >= 1.0:
            self.overflow_unit = self.block_packets
        else:
            slack = 3.0 * math.sqrt(self.window * tau * (1.0 - tau))
            self.overflow_unit = max(
                1, math.ceil((tau * self.window + slack) / k))
        self.table = SpaceSavingTable(k)
        self.overflows: dict = {}  # key -> live overflow count (B)
        self.block_queues: deque[deque] = deque(
            deque() for _ in range(k + 1))  # oldest on the left
        self.packets_into_frame = 0  # M in [0, window)
        self.rng = random.Random(seed)
        self.debug_checks = debug_checks
        self._queued_total = 0
        # Cumulative operation counters; per-update deltas are bounded by
        # constants, which the test suite asserts.
        self.op_counts = {
            "updates": 0, "full_updates": 0, "ss_adds": 0,
            "key_pushes": 0, "key_pops": 0, "flushes": 0, "rotations": 0,
            "rotated_nonempty": 0,
        }

    @property
    def eps_a(self) -> float:
        return 4.0 / self.k

    def window_update(self) -> None:
        """Advance the window by one packet without inserting anything."""
        ops = self.op_counts
        ops["updates"] += 1
        m = self.packets_into_frame + 1
        if m == self.window:
            m = 0
            self.table.flush()
            ops["flushes"] += 1
        self.packets_into_frame = m
        if m % self.block_packets == 0:
            retired = self.block_queues.popleft()
            if retired:  # de-amortization should have drained it
                ops["rotated_nonempty"] += 1
                self._queued_total -= len(retired)
            self.block_queues.append(deque())
            ops["rotations"] += 1
        tail = self.block_queues[0]
        if tail:
            old = tail.popleft()
            self._queued_total -= 1
            ops["key_pops"] += 1
            remaining = self.overflows[old] - 1
            if remaining:
                self.overflows[old] = remaining
            else:
                del self.overflows[old]
        if self.debug_checks:
            self._check_invariants()

    def full_update(self, key) -> None:
        """Advance the window and insert key."""
        self.window_update()
        ops = self.op_counts
        ops["full_updates"] += 1
        ops["ss_adds"] += 1
        count = self.table.add(key)
        if count % self.overflow_unit == 0:
            self.block_queues[-1].append(key)
            self._queued_total += 1
            ops["key_pushes"] += 1
            self.overflows[key] = self.overflows.get(key, 0) + 1
        if self.debug_checks:
            self._check_invariants()

    def update(self, key) -> None:
        """Process one packet: Full update with probability tau, else a
        Window update."""
        if self.rng.random() < self.tau:
            self.full_update(key)
        else:
            self.window_update()

    def raw_query(self, key) -> int:
        """Window estimate in Space Saving count units, before the 1/tau
        scale-up. Includes the two-unit correction that keeps the
        unsampled estimate one-sided above the true count."""
        unit = self.overflow_unit
        hits = self.overflows.get(key)
        if hits is not None:
            return unit * (hits + 2) + self.table.query(key) % unit
        return 2 * unit + self.table.query(key)

    def raw_uncorrected(self, key) -> int:
        """As `raw_query` without the one-sided correction term."""
        unit = self.overflow_unit
        hits = self.overflows.get(key)
        if hits is not None:
            return unit * hits + self.table.query(key) % unit
        return self.table.query(key)

    def query(self, key) -> float:
        """Estimated number of occurrences of key in the current window."""
        return self.raw_query(key) / self.tau

    def heavy_hitters(self, theta: float) -> list[tuple]:
        """Keys whose estimate reaches theta * window, with estimates.

        Only keys with a live overflow record can qualify; any flow above
        the threshold necessarily overflowed within the window.
        """
        cutoff = theta * self.window
        out = []
        for key in self.overflows:
            est = self.query(key)
            if est >= cutoff:
                out.append((key, est))
        return out

    def entry_count(self) -> int:
        """Total stored entries: counters, overflow tallies, queued keys."""
        return len(self.table) + len(self.overflows) + self._queued_total

    def _check_invariants(self) -> None:
        assert len(self.block_queues) == self.k + 1
        assert 0 <= self.packets_into_frame < self.window
        assert len(self.table) <= self.k
        assert self.op_counts["rotated_nonempty"] == 0, \
            "a block queue was rotated out before it drained"
        assert self.entry_count() <= 5 * self.k, (
            f"entry count {self.entry_count()} exceeds 5k={5 * self.k}")
