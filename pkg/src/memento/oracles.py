"""Exact reference computations for window verification.

Everything here counts exactly and is deliberately independent of the
sketch implementations: rolling window counters, point-in-time window
frequencies, conditioned frequencies by direct summation over the key
domain, and the exact bottom-up hierarchical heavy hitter set.

Warm-up convention: while fewer than `window` packets have arrived the
window is the whole stream prefix, so early queries stay comparable with
the sketches. Thresholds always use the nominal window size.
"""

from __future__ import annotations

from collections import Counter, deque

from . import hierarchy as hi


class RollingWindow:
    """Exact counts over the last `window` pushed keys, O(1) per op."""

    def __init__(self, window: int):
        self.window = window
        self._queue: deque = deque()
        self.counts: Counter = Counter()

    def push(self, key) -> None:
        self._queue.append(key)
        self.counts[key] += 1
        if len(self._queue) > self.window:
            old = self._queue.popleft()
            left = self.counts[old] - 1
            if left:
                self.counts[old] = left
            else:
                del self.counts[old]

    def query(self, key) -> int:
        return self.counts.get(key, 0)

    def update(self, key) -> None:  # sketch-compatible alias
        self.push(key)

    def __len__(self) -> int:
        return len(self._queue)


def window_frequency(stream, window: int, t: int, key) -> int:
    """Exact occurrences of key among stream positions (t - window, t],
    counting from the stream start while t < window."""
    if t > len(stream):
        raise ValueError("t exceeds the stream length")
    lo = max(0, t - window)
    segment = stream[lo:t]
    try:
        return segment.count(key)
    except AttributeError:
        return sum(1 for x in segment if x == key)


def window_counts(stream, window: int, t: int | None = None) -> Counter:
    """Exact per-key counts of the window ending at position t."""
    t = len(stream) if t is None else t
    lo = max(0, t - window)
    return Counter(stream[lo:t])


def conditioned_frequency(p: tuple, chosen, counts: Counter) -> int:
    """Mass under prefix p not already covered by the `chosen` prefixes,
    by direct summation over distinct keys."""
    dim = hi.prefix_dim(p)
    chosen = set(chosen)
    total = 0
    for key, freq in counts.items():
        kp = hi.key_prefix(key, dim)
        if not hi.generalizes(p, kp):
            continue
        if any(hi.generalizes(h, kp) for h in chosen):
            continue
        total += freq
    return total


def _depth_shapes(dim: int, depth: int) -> list[tuple]:
    """Mask-length combinations ((src_bits[, dst_bits])) at a depth."""
    if dim == 1:
        return [(32 - 8 * depth,)] if 0 <= depth <= 4 else []
    shapes = []
    for sbits in hi.BYTE_LEVELS:
        dbits = 32 - 8 * (depth - (32 - sbits) // 8)
        if 0 <= dbits <= 32:
            shapes.append((sbits, dbits))
    return shapes


def exact_hhh(stream, window: int, t: int | None, theta: float,
              dim: int = 1) -> set:
    """Exact bottom-up hierarchical heavy hitters of the window at t.

    Level 0 admits fully specified keys with count >= theta * window;
    each higher level admits prefixes whose exact conditioned frequency
    with respect to the set built so far reaches theta * window. Within a
    level, all conditioned frequencies are evaluated against the previous
    levels' set before any admission.
    """
    counts = window_counts(stream, window, t)
    return exact_hhh_from_counts(counts, window, theta, dim)


def exact_hhh_from_counts(counts: Counter, window: int, theta: float,
                          dim: int = 1) -> set:
    cutoff = theta * window
    hier = hi.Hierarchy(dim)
    chosen: set = set()
    keys = list(counts.items())
    for level in range(hier.max_depth + 1):
        if level == 0:
            additions = {hi.key_prefix(key, dim)
                         for key, freq in keys if freq >= cutoff}
            chosen |= additions
            continue
        # uncovered mass per key is fixed for the whole level
        residual = []
        for key, freq in keys:
            kp = hi.key_prefix(key, dim)
            if not any(hi.generalizes(h, kp) for h in chosen):
                residual.append((key, freq))
        additions = set()
        for shape in _depth_shapes(dim, level):
            sums: Counter = Counter()
            if dim == 1:
                bits = shape[0]
                for key, freq in residual:
                    sums[(bits, key & hi._MASK[bits])] += freq
            else:
                sbits, dbits = shape
                for key, freq in residual:
                    sums[(sbits, key[0] & hi._MASK[sbits],
                          dbits, key[1] & hi._MASK[dbits])] += freq
            additions.update(p for p, c in sums.items() if c >= cutoff)
        chosen |= additions
    return chosen


def coverage_audit(chosen: set, counts: Counter, window: int, theta: float,
                   dim: int = 1) -> list[tuple]:
    """Prefixes outside `chosen` whose exact conditioned frequency still
    reaches theta * window. Empty for a sound exact HHH set."""
    cutoff = theta * window
    candidates = set()
    for key in counts:
        candidates.update(hi.all_prefixes(key, dim))
    offenders = []
    for p in sorted(candidates - chosen):
        if conditioned_frequency(p, chosen, counts) >= cutoff:
            offenders.append(p)
    return offenders
