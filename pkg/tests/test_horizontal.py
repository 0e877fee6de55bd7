import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from era_st.blockio import PHASE_HORIZONTAL, BlockReader, IoStats
from era_st.errors import BuildError, SkewedInputError
from era_st.horizontal import (
    HorizontalTimers,
    PrepareState,
    get_range_of_symbols,
    locate_occurrences,
    run_horizontal,
    subtree_prepare,
)
from era_st.text import BuildConfig, Text, from_str, generate_random_text
from era_st.vertical import (
    PrefixEntry,
    VirtualTree,
    pack_virtual_trees,
    partition_prefixes,
)
from helpers import brute_arrays, substring_positions


def cfg(m, b, **kw):
    return BuildConfig(memory_budget_m=m, block_size_b=b, **kw)


def reader(text, block=1, worker=0):
    return BlockReader(text, block, IoStats(PHASE_HORIZONTAL, worker))


def sym(text, s):
    return bytes(text.byte_map[ord(c)] for c in s)


def state_with(active):
    return PrepareState(
        sa=[], isa=[], area=[], buf=[], pos_map=[], start=0, range_=0, active_count=active
    )


class TestGetRange:
    def test_floor_within_clamp(self):
        assert get_range_of_symbols(state_with(4), cfg(64, 4)) == 8

    def test_lower_clamp_at_block_size(self):
        assert get_range_of_symbols(state_with(32), cfg(64, 4)) == 4

    def test_upper_clamp_at_half_budget(self):
        assert get_range_of_symbols(state_with(1), cfg(64, 4)) == 32

    def test_requires_active_suffixes(self):
        with pytest.raises(ValueError):
            get_range_of_symbols(state_with(0), cfg(64, 4))


class TestLocate:
    def test_mississippi_single_member(self):
        t = from_str("mississippi$")
        vt = VirtualTree([PrefixEntry(sym(t, "i"), 4)])
        got = locate_occurrences(t, vt, reader(t))
        assert got == {sym(t, "i"): [2, 5, 8, 11]}

    def test_two_members(self):
        t = from_str("banana$")
        vt = VirtualTree([PrefixEntry(sym(t, "b"), 1), PrefixEntry(sym(t, "n"), 2)])
        got = locate_occurrences(t, vt, reader(t))
        assert got == {sym(t, "b"): [1], sym(t, "n"): [3, 5]}

    def test_absent_prefix_yields_empty(self):
        t = from_str("banana$", sigma=26)
        vt = VirtualTree([PrefixEntry(b"\x19\x19", 1)])
        assert locate_occurrences(t, vt, reader(t)) == {b"\x19\x19": []}

    def test_one_scan_per_virtual_tree(self):
        t = generate_random_text(64, 4, 0)
        r = reader(t, block=8)
        vt = VirtualTree([PrefixEntry(b"\x01", 1)])
        locate_occurrences(t, vt, r)
        locate_occurrences(t, vt, r)
        assert r.stats.full_scans == 2
        assert r.stats.blocks_read == 16

    def test_timer_attribution_by_tree_size(self):
        t = from_str("banana$")
        timers = HorizontalTimers()
        locate_occurrences(t, VirtualTree([PrefixEntry(sym(t, "b"), 1)]), reader(t), timers)
        assert timers.cnt1_s > 0 and timers.cnt_star_s == 0
        locate_occurrences(
            t,
            VirtualTree([PrefixEntry(sym(t, "b"), 1), PrefixEntry(sym(t, "n"), 2)]),
            reader(t),
            timers,
        )
        assert timers.cnt_star_s > 0


class TestSubtreePrepare:
    def test_mississippi_i(self):
        t = from_str("mississippi$")
        arrays = subtree_prepare(t, sym(t, "i"), [2, 5, 8, 11], cfg(8, 1), reader(t))
        assert arrays.sa == [11, 8, 5, 2]
        assert [d for _, _, d in arrays.lcp] == [1, 1, 4]
        i, p, s = t.byte_map[ord("i")], t.byte_map[ord("p")], t.byte_map[ord("s")]
        assert arrays.lcp == [(0, p, 1), (p, s, 1), (p, s, 4)]

    def test_banana_a(self):
        t = from_str("banana$")
        arrays = subtree_prepare(t, sym(t, "a"), [2, 4, 6], cfg(8, 1), reader(t))
        assert arrays.sa == [6, 4, 2]
        assert [d for _, _, d in arrays.lcp] == [1, 3]

    def test_single_occurrence_runs_zero_iterations(self):
        t = from_str("banana$")
        arrays = subtree_prepare(t, sym(t, "b"), [1], cfg(8, 1), reader(t))
        assert arrays.sa == [1]
        assert arrays.lcp == []
        assert arrays.iterations == 0

    def test_empty_positions_rejected(self):
        t = from_str("banana$")
        with pytest.raises(ValueError):
            subtree_prepare(t, sym(t, "b"), [], cfg(8, 1), reader(t))

    def test_range_reads_charged_per_round(self):
        t = from_str("banana$")
        r = reader(t, block=1)
        arrays = subtree_prepare(t, sym(t, "a"), [2, 4, 6], cfg(2, 1), r)
        assert arrays.iterations >= 2
        assert r.stats.range_reads > 0

    @settings(max_examples=80)
    @given(
        body=st.binary(min_size=1, max_size=48),
        sigma=st.integers(2, 4),
        plen=st.integers(1, 3),
        m=st.integers(2, 16),
    )
    def test_matches_brute_force(self, body, sigma, plen, m):
        text = Text(bytes(b % sigma + 1 for b in body) + b"\x00", sigma)
        prefix = text.data[:plen]
        if b"\x00" in prefix:
            prefix = prefix.replace(b"\x00", b"\x01")
        positions = substring_positions(text.data, prefix)
        if not positions:
            return
        config = cfg(m, 1)
        got = subtree_prepare(
            text, prefix, positions, config, reader(text), check_invariants=True
        )
        want_sa, want_lcp = brute_arrays(text, prefix)
        assert got.sa == want_sa
        assert got.lcp == want_lcp

    def test_invariant_checks_clean_on_classics(self):
        for s in ("banana$", "mississippi$", "abracadabra$", "aabbaabb$"):
            t = from_str(s)
            for prefix_char in sorted(set(s) - {"$"}):
                prefix = sym(t, prefix_char)
                positions = substring_positions(t.data, prefix)
                subtree_prepare(t, prefix, positions, cfg(2, 1), reader(t), check_invariants=True)

    def test_depths_are_absolute_from_suffix_start(self):
        t = from_str("banana$")
        arrays = subtree_prepare(t, sym(t, "an"), [2, 4], cfg(8, 1), reader(t))
        assert arrays.sa == [4, 2]
        assert arrays.lcp == [(0, sym(t, "n")[0], 3)]

    def test_skew_guard_fires_on_long_ties(self):
        body = generate_random_text(129, 4, 3).data[:-1]
        doubled = Text(body + body + b"\x00", 4)
        prefix = doubled.data[:1]
        positions = substring_positions(doubled.data, prefix)
        with pytest.raises(SkewedInputError) as exc:
            subtree_prepare(doubled, prefix, positions, cfg(8, 2, max_prefix_len=16), reader(doubled))
        assert exc.value.phase == "horizontal"
        assert len(exc.value.prefix) > 16
        assert exc.value.frequency >= 2


class TestRunHorizontal:
    def build_inputs(self, n=512, sigma=4, seed=5, m=32, b=2, p=1):
        text = generate_random_text(n, sigma, seed)
        config = cfg(m, b, workers_p=p)
        part = partition_prefixes(text, config)
        vtrees = pack_virtual_trees(part.entries, config)
        return text, config, vtrees

    def test_output_independent_of_worker_count(self):
        text, config1, vtrees = self.build_inputs(p=1)
        res1 = run_horizontal(text, vtrees, config1)
        config4 = cfg(32, 2, workers_p=4)
        res4 = run_horizontal(text, vtrees, config4)
        key = lambda a: a.prefix
        assert sorted(res1.subtrees, key=key) == sorted(res4.subtrees, key=key)

    def test_every_member_processed_exactly_once(self):
        text, config, vtrees = self.build_inputs(p=2)
        res = run_horizontal(text, vtrees, config)
        expected = sorted(e.prefix for vt in vtrees for e in vt.members)
        assert sorted(r.prefix for r in res.records) == expected

    def test_three_vtrees_two_workers(self):
        t = from_str("banana$")
        config = cfg(2, 1, workers_p=2)
        vtrees = [
            VirtualTree([PrefixEntry(sym(t, "an"), 2)]),
            VirtualTree([PrefixEntry(sym(t, "n"), 2)]),
            VirtualTree([PrefixEntry(sym(t, "b"), 1)]),
        ]
        res = run_horizontal(t, vtrees, config)
        assert len(res.records) == 3
        assert sorted(r.prefix for r in res.records) == sorted(
            [sym(t, "an"), sym(t, "n"), sym(t, "b")]
        )

    def test_blocks_read_totals_conserved_across_p(self):
        from era_st.blockio import total_counters

        text, _, vtrees = self.build_inputs(n=1024, m=64, b=4)
        totals = {}
        for p in (1, 4):
            res = run_horizontal(text, vtrees, cfg(64, 4, workers_p=p))
            totals[p] = total_counters(s.io for s in res.worker_stats)["blocks_read"]
        assert totals[1] == totals[4]

    def test_worker_failure_names_the_prefix(self, monkeypatch):
        text, config, vtrees = self.build_inputs(p=1)
        import era_st.horizontal as hz

        def boom(*args, **kwargs):
            raise RuntimeError("synthetic fault")

        monkeypatch.setattr(hz, "subtree_prepare", boom)
        with pytest.raises(BuildError) as exc:
            run_horizontal(text, vtrees, config)
        assert exc.value.prefix == vtrees[0].members[0].prefix

    def test_zero_occurrence_member_skipped(self):
        t = from_str("banana$", sigma=26)
        vtrees = [VirtualTree([PrefixEntry(b"\x19", 1)])]
        res = run_horizontal(t, vtrees, cfg(8, 1))
        assert res.records == []
        assert res.subtrees == []

    def test_iteration_counts_recorded(self):
        text, config, vtrees = self.build_inputs()
        res = run_horizontal(text, vtrees, config)
        assert all(r.iterations >= 1 for r in res.records if r.occurrences >= 2)

    def test_iteration_bound_on_uniform_text(self):
        import math

        text = generate_random_text(2**16, 4, 17)
        config = cfg(1024, 16)  # M/B = 64
        part = partition_prefixes(text, config)
        vtrees = pack_virtual_trees(part.entries, config)
        res = run_horizontal(text, vtrees, config)
        m_work = config.work_buffer_m
        for rec in res.records:
            if rec.occurrences < 2:
                continue
            rng = min(m_work, max(16, m_work // rec.occurrences))
            bound = math.ceil(math.log(rec.occurrences, 4) / rng) + 1
            assert rec.iterations <= bound

    def test_parallel_skew_surfaces_deterministically(self):
        body = generate_random_text(257, 4, 9).data[:-1]
        doubled = Text(body + body + b"\x00", 4)
        config = cfg(16, 2, workers_p=2, max_prefix_len=24)
        part = partition_prefixes(doubled, config)
        vtrees = pack_virtual_trees(part.entries, config)
        with pytest.raises(SkewedInputError):
            run_horizontal(doubled, vtrees, config)
