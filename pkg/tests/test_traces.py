import math

import numpy as np
import pytest

from memento.errors import ConfigError
from memento.traces import (FloodSpec, TraceParseError, gen_zipf_trace,
                            inject_flood, load_trace, parse_line,
                            save_trace)


def test_parse_two_dim():
    rec = parse_line("1.2.3.4,5.6.7.8", 1)
    assert rec.dst is not None
    assert rec.key == (0x01020304, 0x05060708)


def test_parse_one_dim():
    rec = parse_line("1.2.3.4", 1)
    assert rec.dst is None
    assert rec.key == 0x01020304


def test_parse_flood_tags():
    assert parse_line("1.2.3.4,1", 1).is_flood
    assert not parse_line("1.2.3.4,5.6.7.8,0", 1).is_flood
    assert parse_line("1.2.3.4,5.6.7.8,1", 1).is_flood


def test_parse_bad_ip_reports_line():
    with pytest.raises(TraceParseError) as err:
        parse_line("1.2.3.999", 17)
    assert "line 17" in str(err.value)


def test_parse_comment_and_blank():
    assert parse_line("# comment", 1) is None
    assert parse_line("   ", 2) is None


def test_load_save_round_trip(tmp_path):
    keys = gen_zipf_trace(500, 50, 1.0, seed=0)
    path = tmp_path / "trace.csv"
    save_trace(path, keys)
    assert [r.key for r in load_trace(path)] == keys


def test_load_save_round_trip_2d_with_flags(tmp_path):
    keys = gen_zipf_trace(200, 50, 0.5, seed=1, dim=2)
    flags = [i % 3 == 0 for i in range(len(keys))]
    path = tmp_path / "trace2.csv"
    save_trace(path, keys, flags)
    records = list(load_trace(path))
    assert [r.key for r in records] == keys
    assert [r.is_flood for r in records] == flags


def test_load_missing_file():
    with pytest.raises(OSError):
        list(load_trace("/nonexistent/trace.csv"))


def test_zipf_alpha_zero_uniform():
    keys = gen_zipf_trace(100_000, 100, 0.0, seed=2)
    top_share = max(keys.count(k) for k in set(keys)) / len(keys)
    assert top_share == pytest.approx(1 / 100, abs=0.005)


def test_zipf_rank_frequency_slope():
    keys = gen_zipf_trace(200_000, 10_000, 1.0, seed=3)
    counts = {}
    for k in keys:
        counts[k] = counts.get(k, 0) + 1
    freqs = sorted(counts.values(), reverse=True)[:100]
    ranks = np.arange(1, len(freqs) + 1)
    slope = np.polyfit(np.log(ranks), np.log(freqs), 1)[0]
    assert abs(slope + 1.0) < 0.1


def test_zipf_deterministic_per_seed():
    a = gen_zipf_trace(1000, 100, 1.0, seed=4)
    b = gen_zipf_trace(1000, 100, 1.0, seed=4)
    c = gen_zipf_trace(1000, 100, 1.0, seed=5)
    assert a == b
    assert a != c


def test_zipf_validation():
    with pytest.raises(ConfigError):
        gen_zipf_trace(10, 10, -1.0, seed=0)
    with pytest.raises(ConfigError):
        gen_zipf_trace(10, 0, 1.0, seed=0)


def test_flood_prob_zero_is_identity():
    keys = gen_zipf_trace(5000, 100, 1.0, seed=6)
    flood = inject_flood(keys, FloodSpec(flood_prob=0.0,
                                         start_range=(0, 1000), seed=6))
    assert flood.keys == keys
    assert not any(flood.flood_flags)


def test_flood_prefix_passthrough():
    keys = gen_zipf_trace(20_000, 500, 1.0, seed=7)
    flood = inject_flood(keys, FloodSpec(start_range=(0, 5000), seed=7))
    s = flood.start_line
    assert flood.keys[:s] == keys[:s]
    assert not any(flood.flood_flags[:s])
    assert len(flood.keys) == len(keys)


def test_flood_share_and_subnets():
    keys = gen_zipf_trace(250_000, 2000, 1.0, seed=8)
    spec = FloodSpec(num_subnets=50, flood_prob=0.7,
                     start_range=(0, 10_000), seed=8)
    flood = inject_flood(keys, spec)
    s = flood.start_line
    tail = flood.flood_flags[s:]
    share = sum(tail) / len(tail)
    assert share == pytest.approx(0.70, abs=0.01)
    assert len(set(flood.subnets)) == 50  # drawn without replacement
    # every flood packet falls in a flood subnet
    flood_sources = {k >> 24 for k, f in zip(flood.keys, flood.flood_flags)
                     if f}
    assert flood_sources <= set(flood.subnets)


def test_flood_per_subnet_share():
    keys = gen_zipf_trace(400_000, 2000, 1.0, seed=9)
    spec = FloodSpec(start_range=(0, 5000), seed=9)
    flood = inject_flood(keys, spec)
    s = flood.start_line
    per_subnet = {}
    tail_len = len(flood.keys) - s
    for k, f in zip(flood.keys[s:], flood.flood_flags[s:]):
        if f:
            per_subnet[k >> 24] = per_subnet.get(k >> 24, 0) + 1
    expected = 0.7 / 50
    sd = math.sqrt(tail_len * expected)
    for subnet in flood.subnets:
        count = per_subnet.get(subnet, 0)
        assert abs(count - expected * tail_len) < 5 * sd


def test_flood_requires_long_trace():
    with pytest.raises(ConfigError):
        inject_flood([1, 2, 3], FloodSpec(start_range=(0, 10)))
