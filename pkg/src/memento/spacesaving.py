"""Space Saving counter table with O(1) worst-case operations.

Counters are grouped into buckets of equal count, kept in a doubly linked
list sorted by count. Incrementing a key moves it to the adjacent bucket,
so add/query/min are all constant time regardless of capacity. When the
table is full, the arriving key takes over the minimum counter and its
value is bumped by one, which makes every estimate a one-sided
overestimate of the true count.
"""

from __future__ import annotations

from .errors import ConfigError


class _Bucket:
    __slots__ = ("count", "keys", "prev", "next")

    def __init__(self, count: int):
        self.count = count
        # dict used as an ordered set: first key entered this bucket
        # longest ago, i.e. is the least recently updated at this count.
        self.keys: dict = {}
        self.prev: _Bucket | None = None
        self.next: _Bucket | None = None


class SpaceSavingTable:
    """Fixed-capacity counter table for approximate frequency counting.

    Eviction tie-break: among minimum-count entries the least recently
    updated key is replaced. Not thread-safe; callers serialize access.
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigError("capacity must be at least 1")
        self.capacity = capacity
        self._entries: dict = {}  # key -> _Bucket holding it
        self._head: _Bucket | None = None  # minimum-count bucket

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key) -> bool:
        return key in self._entries

    def items(self):
        """Iterate (key, count) pairs in unspecified order."""
        bucket = self._head
        while bucket is not None:
            for key in bucket.keys:
                yield key, bucket.count
            bucket = bucket.next

    def _unlink_if_empty(self, bucket: _Bucket) -> None:
        if bucket.keys:
            return
        if bucket.prev is not None:
            bucket.prev.next = bucket.next
        else:
            self._head = bucket.next
        if bucket.next is not None:
            bucket.next.prev = bucket.prev

    def _place_after(self, bucket: _Bucket | None, key, count: int) -> None:
        """Put key into the count-valued bucket located after `bucket`
        (before head when None), creating the bucket if needed."""
        nxt = self._head if bucket is None else bucket.next
        if nxt is not None and nxt.count == count:
            target = nxt
        else:
            target = _Bucket(count)
            target.prev = bucket
            target.next = nxt
            if bucket is None:
                self._head = target
            else:
                bucket.next = target
            if nxt is not None:
                nxt.prev = target
        target.keys[key] = None
        self._entries[key] = target

    def add(self, key) -> int:
        """Count an occurrence of key; returns its updated estimate."""
        bucket = self._entries.get(key)
        if bucket is not None:
            new_count = bucket.count + 1
            del bucket.keys[key]
            self._place_after(bucket, key, new_count)
            self._unlink_if_empty(bucket)
            return new_count
        if len(self._entries) < self.capacity:
            if self._head is not None and self._head.count == 1:
                self._head.keys[key] = None
                self._entries[key] = self._head
            else:
                self._place_after(None, key, 1)
            return 1
        # full: take over the least recently updated minimum counter
        victim_bucket = self._head
        victim = next(iter(victim_bucket.keys))
        del victim_bucket.keys[victim]
        del self._entries[victim]
        new_count = victim_bucket.count + 1
        self._place_after(victim_bucket, key, new_count)
        self._unlink_if_empty(victim_bucket)
        return new_count

    def query(self, key) -> int:
        """Estimate for key: its counter if present, else the minimum
        counter value (0 on an empty table)."""
        bucket = self._entries.get(key)
        if bucket is not None:
            return bucket.count
        if self._head is None:
            return 0
        return self._head.count

    def min_count(self) -> int:
        return 0 if self._head is None else self._head.count

    def flush(self) -> None:
        """Drop every entry; capacity is preserved."""
        self._entries.clear()
        self._head = None
