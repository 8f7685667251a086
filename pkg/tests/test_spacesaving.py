import random
from collections import Counter

import pytest

from memento.errors import ConfigError
from memento.spacesaving import SpaceSavingTable


def test_init_empty():
    t = SpaceSavingTable(8)
    assert len(t) == 0
    assert t.capacity == 8


def test_capacity_from_error_target():
    # capacity chosen as ceil(4 / 0.5) counters
    import math
    t = SpaceSavingTable(math.ceil(4 / 0.5))
    assert t.capacity == 8


def test_zero_capacity_rejected():
    with pytest.raises(ConfigError):
        SpaceSavingTable(0)


def test_single_counter_absorbs_distinct_keys():
    t = SpaceSavingTable(1)
    for key in ("a", "b", "c"):
        t.add(key)
    assert len(t) == 1
    assert dict(t.items()) == {"c": 3}


def test_replacement_bumps_min_counter():
    # counter at 4 is taken over and bumped to 5
    t = SpaceSavingTable(1)
    for _ in range(4):
        t.add("x")
    t.add("y")
    assert dict(t.items()) == {"y": 5}
    assert t.query("x") == 5  # x now reported via the minimum


def test_insert_into_free_slot():
    t = SpaceSavingTable(4)
    assert t.add("x") == 1
    assert t.query("x") == 1


def test_eviction_tie_break_least_recently_updated():
    t = SpaceSavingTable(2)
    for key in ("a", "a", "b", "b"):
        t.add(key)
    # a reached count 2 before b did, so a is the stale minimum
    t.add("c")
    assert dict(t.items()) == {"b": 2, "c": 3}


def test_query_present_absent_empty():
    t = SpaceSavingTable(4)
    assert t.query("z") == 0
    for _ in range(4):
        t.add("x")
    for _ in range(7):
        t.add("y")
    assert t.query("x") == 4
    assert t.query("z") == 4  # minimum counter stands in


def test_flush_resets_and_is_idempotent():
    t = SpaceSavingTable(4)
    for _ in range(4):
        t.add("x")
    t.flush()
    assert len(t) == 0
    assert t.capacity == 4
    t.flush()
    assert len(t) == 0
    assert t.query("x") == 0


def test_capacity_never_exceeded_and_sum_matches_adds():
    rng = random.Random(5)
    t = SpaceSavingTable(16)
    adds = 0
    for _ in range(5000):
        t.add(rng.randrange(200))
        adds += 1
        assert len(t) <= 16
    assert sum(c for _, c in t.items()) == adds
    t.flush()
    for _ in range(37):
        t.add(rng.randrange(200))
    assert sum(c for _, c in t.items()) == 37


def test_one_sided_overestimate():
    rng = random.Random(11)
    t = SpaceSavingTable(32)
    truth = Counter()
    for _ in range(20000):
        key = rng.randrange(500)
        t.add(key)
        truth[key] += 1
    for key, true_count in truth.items():
        assert t.query(key) >= true_count
