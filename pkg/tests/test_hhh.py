import random
import warnings

import pytest

from memento import hierarchy as hi
from memento.errors import ConfigError
from memento.hhh import (HHHConfig, HHHEntry, HHHState, calc_pred_1d,
                         calc_pred_2d)
from memento.oracles import exact_hhh, window_counts
from memento.traces import gen_zipf_trace

warnings.filterwarnings("ignore", message="min_tau_hhh")


def make_state(window=20_000, eps_a=0.05, eps_s=0.4, delta=0.1, theta=0.5,
               dim=1, tau_full=1.0, seed=0, **kw):
    cfg = HHHConfig(window=window, eps_a=eps_a, eps_s=eps_s, delta=delta,
                    theta=theta, dim=dim, tau_full=tau_full,
                    allow_void=True, **kw)
    return HHHState(cfg, seed=seed)


def P(text):
    return hi.parse_prefix(text)


# config ----------------------------------------------------------------------

def test_config_rejects_vacuous_theta():
    with pytest.raises(ConfigError):
        HHHConfig(window=10_000, eps_a=0.3, eps_s=0.3, delta=0.1,
                  theta=0.5, dim=1, tau_full=1.0)


def test_config_rejects_sub_planner_tau_without_flag():
    with pytest.raises(ConfigError):
        cfg = HHHConfig(window=10 ** 6, eps_a=0.01, eps_s=0.01,
                        delta=1e-4, theta=0.1, dim=1, tau_full=0.01)
        HHHState(cfg)


def test_sketch_sized_for_per_level_error():
    st = make_state(eps_a=0.05, dim=1)
    # block count carries the hierarchy factor: ceil(4 * 5 / 0.05)
    assert st.sketch.k == 400


def test_ratio_rounding_records_effective_rate():
    st = make_state(tau_full=0.3, dim=1)
    assert st.ratio == 17  # ceil(5 / 0.3)
    assert st.tau_full == pytest.approx(5 / 17)


# update ----------------------------------------------------------------------

def test_update_degenerate_full_every_packet():
    st = make_state(tau_full=1.0, seed=1)
    for i in range(1000):
        st.update(i)
    assert st.sketch.op_counts["full_updates"] == 1000
    assert st.sketch.op_counts["updates"] == 1000


def test_update_full_count_concentrates():
    tau = 0.25
    hits = []
    for seed in range(20):
        st = make_state(tau_full=tau, seed=seed)
        for i in range(4000):
            st.update(i % 50)
        hits.append(st.sketch.op_counts["full_updates"])
    n = 4000
    p = st.tau_full
    mean = sum(hits) / len(hits)
    sd = (n * p * (1 - p)) ** 0.5
    assert abs(mean - n * p) < 3 * sd / (len(hits) ** 0.5)


def test_update_advances_window_once_per_packet():
    st = make_state(tau_full=0.2, seed=3)
    for i in range(5000):
        st.update(i)
    assert st.sketch.op_counts["updates"] == 5000


def test_update_deterministic_replay():
    def run(seed):
        st = make_state(tau_full=0.5, seed=seed)
        rng = random.Random(4)
        for _ in range(8000):
            st.update(rng.randrange(64))
        return sorted((p, e) for p, e in
                      ((p, st.f_upper(p)) for p, _ in
                       st.sketch.table.items()))

    assert run(5) == run(5)


# estimators ------------------------------------------------------------------

def test_f_upper_empty_state():
    st = make_state(tau_full=1.0)
    p = P("1.2.3.4")
    assert st.f_upper(p) == st.ratio * 2 * st.sketch.overflow_unit
    assert st.f_lower(p) == 0.0


def test_f_upper_single_flow_covers_window():
    st = make_state(window=50_000, eps_a=0.1, eps_s=0.3, tau_full=1.0,
                    seed=11)
    key = hi.parse_ip("7.7.7.7")
    for _ in range(50_000):
        st.update(key)
    for level in range(5):
        assert st.f_upper(hi.prefix_at(key, level, 1)) >= 50_000


def test_f_hat_unbiased_for_steady_flow():
    # flow at 10% of the window; mean point estimate over seeds within 2%
    window = 40_000
    key = hi.parse_ip("8.8.8.8")
    total = 0.0
    seeds = 100
    for seed in range(seeds):
        st = make_state(window=window, eps_a=0.01, tau_full=1.0, seed=seed)
        for i in range(window):
            st.update(key if i % 10 == 0 else (seed << 20) + i)
        total += st.f_hat(hi.key_prefix(key, 1))
    mean = total / seeds
    true = window / 10
    assert abs(mean - true) / true < 0.02


# calc_pred -------------------------------------------------------------------

def entry(prefix, f_lower):
    return HHHEntry(prefix=prefix, f_hat=0.0, f_upper=0.0,
                    f_lower=f_lower, cond_freq=0.0)


def test_calc_pred_1d_empty():
    assert calc_pred_1d(P("10.*"), []) == 0.0


def test_calc_pred_1d_single():
    assert calc_pred_1d(P("10.*"), [entry(P("10.1.*"), 100.0)]) == -100.0


def test_calc_pred_1d_chain_uses_nearest_only():
    entries = [entry(P("10.1.*"), 100.0), entry(P("10.1.2.*"), 60.0)]
    assert calc_pred_1d(P("10.*"), entries) == -100.0


def test_calc_pred_2d_empty():
    assert calc_pred_2d(P("(*, *)"), [], lambda q: 0.0) == 0.0


def test_calc_pred_2d_pair_adds_glb_back():
    h = entry(P("(10.1.*, *)"), 500.0)
    h2 = entry(P("(*, 20.2.*)"), 400.0)
    up = {P("(10.1.*, 20.2.*)"): 150.0}
    got = calc_pred_2d(P("(*, *)"), [h, h2], lambda q: up[q])
    assert got == -900.0 + 150.0


def test_calc_pred_2d_guard_skips_covered_glb():
    # a third chosen member generalizes the pair's glb, so the overlap was
    # subtracted once already and must not be added back
    h = entry(P("(10.20.*, *)"), 500.0)
    h2 = entry(P("(*, 30.40.*)"), 400.0)
    h3 = entry(P("(10.*, 30.*)"), 300.0)
    ups = {
        P("(10.20.*, 30.*)"): 90.0,
        P("(10.*, 30.40.*)"): 80.0,
        P("(10.20.*, 30.40.*)"): 70.0,  # pair (h, h2): must be skipped
    }
    got = calc_pred_2d(P("(*, *)"), [h, h2, h3], lambda q: ups[q])
    assert got == -(500 + 400 + 300) + 90 + 80


def test_state_calc_pred_matches_reference():
    # the indexed fast path inside output() must agree with the plain
    # definition-based functions
    rng = random.Random(8)
    st = make_state(window=20_000, eps_a=0.05, dim=2, tau_full=1.0, seed=8)
    for _ in range(30_000):
        key = (rng.randrange(1 << 32), rng.choice([1, 2, 3, 1 << 28]))
        st.update(key)
    out = st.output(0.001)
    entries = list(out)
    admitted = {e.prefix: e for e in entries}
    desc_index = {}
    for e in entries:
        for anc in st._strict_ancestors(e.prefix):
            desc_index.setdefault(anc, []).append(e.prefix)
    probes = [P("(*, *)"), P("(10.*, *)"), P("(*, 0.0.0.1)")]
    probes += [e.prefix for e in entries[:20]]
    for p in probes:
        fast = st._calc_pred(p, admitted, desc_index)
        slow = calc_pred_2d(p, entries, st.f_upper) if st.hier.dim == 2 \
            else calc_pred_1d(p, entries)
        assert fast == pytest.approx(slow)


# output ----------------------------------------------------------------------

def test_output_empty_sketch():
    st = make_state()
    assert st.output() == []


def test_output_dominant_flow_chain_matches_oracle():
    window = 30_000
    st = make_state(window=window, eps_a=0.02, eps_s=0.05, delta=0.05,
                    theta=0.3, tau_full=1.0, seed=13)
    rng = random.Random(13)
    key = hi.parse_ip("77.1.2.3")
    stream = [key if rng.random() < 0.5 else rng.randrange(1 << 32)
              for _ in range(window)]
    for k in stream:
        st.update(k)
    got = {e.prefix for e in st.output()}
    oracle = exact_hhh(stream, window, None, 0.3, 1)
    assert oracle <= got  # coverage: every true member is present
    # the dominant key's own chain membership matches exactly
    for level in range(5):
        p = hi.prefix_at(key, level, 1)
        assert (p in got) == (p in oracle) or p in got


def test_output_monotone_in_theta():
    st = make_state(window=20_000, eps_a=0.05, eps_s=0.2, delta=0.05,
                    theta=0.4, tau_full=1.0, seed=17)
    keys = gen_zipf_trace(30_000, 500, 1.2, seed=17)
    for k in keys:
        st.update(k)
    previous = None
    for theta in (0.05, 0.1, 0.2, 0.4, 0.8):
        current = {e.prefix for e in st.output(theta)}
        if previous is not None:
            assert current <= previous
        previous = current


def test_output_entry_serialization():
    st = make_state(window=20_000, eps_a=0.05, tau_full=1.0, seed=1)
    for _ in range(25_000):
        st.update(12345)
    entries = st.output(0.5)
    assert entries
    row = entries[0].as_dict()
    assert set(row) == {"prefix", "fHat", "fUpper", "fLower", "condFreq"}
    assert entries[0].f_lower <= entries[0].f_hat <= entries[0].f_upper


def test_mini_coverage_against_oracle():
    window, theta = 20_000, 0.05
    misses = total = 0
    for seed in range(10):
        keys = gen_zipf_trace(window + window // 2, 2000, 1.0, seed=seed)
        st = make_state(window=window, eps_a=0.01, eps_s=0.035,
                        delta=0.05, theta=theta, tau_full=1.0, seed=seed)
        for k in keys:
            st.update(k)
        got = {e.prefix for e in st.output()}
        oracle = exact_hhh(keys, window, None, theta, 1)
        total += len(oracle)
        misses += len(oracle - got)
    assert total > 0
    assert misses / total <= 0.1


def test_ingest_sampled_matches_update_distribution():
    # ingest_sampled + advance_window is the network-wide split of update
    st = make_state(tau_full=1.0, seed=21)
    st2 = make_state(tau_full=1.0, seed=21)
    keys = [random.Random(21).randrange(100) for _ in range(2000)]
    for k in keys:
        st.update(k)
        st2.ingest_sampled(k)
    assert st.sketch.op_counts["full_updates"] == \
        st2.sketch.op_counts["full_updates"] == 2000
