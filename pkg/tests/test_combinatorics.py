import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nadecomplete import combinatorics as cb


class TestObservedSet:
    def test_normalizes_and_validates(self):
        s = cb.ObservedSet(5, (3, 1))
        assert s.members == (1, 3)
        assert s.missing() == (0, 2, 4)
        assert np.array_equal(s.indicator(), [0, 1, 0, 1, 0])
        with pytest.raises(ValueError):
            cb.ObservedSet(3, (0, 0))
        with pytest.raises(ValueError):
            cb.ObservedSet(3, (3,))

    def test_with_added(self):
        s = cb.ObservedSet(4, (2,)).with_added(0)
        assert s.members == (0, 2)


class TestOrdering:
    def test_validates_permutation(self):
        with pytest.raises(ValueError):
            cb.Ordering(3, (0, 1, 1))

    def test_inverse_composition_is_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            D = int(rng.integers(1, 9))
            perm = tuple(int(i) for i in rng.permutation(D))
            o = cb.Ordering(D, perm)
            inv = o.inverse()
            composed = tuple(inv.perm[o.perm[i]] for i in range(D))
            assert composed == tuple(range(D))

    def test_sort_missing(self):
        o = cb.Ordering(4, (2, 0, 3, 1))
        assert o.sort_missing(cb.ObservedSet(4, (0,))) == (2, 3, 1)


class TestSampleOrderingSet:
    def test_deterministic(self):
        a = cb.sample_ordering_set(4, 1, seed=9)
        b = cb.sample_ordering_set(4, 1, seed=9)
        assert a.orderings == b.orderings

    def test_exhausts_all_orderings(self):
        os = cb.sample_ordering_set(3, 6, seed=0)
        assert {o.perm for o in os.orderings} == set(itertools.permutations(range(3)))

    def test_pigeonhole(self):
        with pytest.raises(ValueError):
            cb.sample_ordering_set(3, 7, seed=0)

    def test_distinct(self):
        os = cb.sample_ordering_set(5, 24, seed=1)
        assert len({o.perm for o in os.orderings}) == 24

    def test_file_round_trip(self, tmp_path):
        os1 = cb.sample_ordering_set(6, 3, seed=42)
        path = tmp_path / "orderings.txt"
        cb.save_ordering_set(os1, path)
        os2 = cb.load_ordering_set(path)
        assert os2.orderings == os1.orderings
        assert os2.seed == 42


class TestQueryDistributions:
    def test_point_mass_empty(self):
        rng = np.random.default_rng(0)
        for _ in range(5):
            assert cb.sample_query(cb.EmptyQueries(), 7, rng).members == ()

    def test_fixed_size_always_that_size(self):
        # the evaluation protocol's half-observed queries
        rng = np.random.default_rng(1)
        dist = cb.FixedSizeQueries(56)
        for _ in range(20):
            assert len(cb.sample_query(dist, 112, rng)) == 56

    def test_fixed_size_full_set_rejected(self):
        with pytest.raises(ValueError):
            cb.sample_query(cb.FixedSizeQueries(4), 4, np.random.default_rng(0))

    def test_fixed_set(self):
        dist = cb.FixedSetQueries((1, 3))
        got = cb.sample_query(dist, 5, np.random.default_rng(0))
        assert got.members == (1, 3)

    def test_uniform_two_stage_frequencies(self):
        # D=3: each size in {0,1,2} has probability 1/3, subsets within a
        # size are equiprobable -> check empirical counts at 3 sigma
        D, n = 3, 30000
        rng = np.random.default_rng(7)
        counts = Counter()
        for _ in range(n):
            counts[cb.sample_query(cb.UniformQueries(), D, rng).members] += 1
        expected = {}
        for s in range(D):
            for members in itertools.combinations(range(D), s):
                expected[members] = (1 / 3) / math.comb(D, s)
        assert set(counts) <= set(expected)
        for members, p in expected.items():
            sigma = math.sqrt(n * p * (1 - p))
            assert abs(counts[members] - n * p) <= 3 * sigma, members

    @given(st.integers(min_value=1, max_value=8), st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=60, deadline=None)
    def test_never_full_set(self, D, seed):
        rng = np.random.default_rng(seed)
        for dist in (cb.UniformQueries(), cb.FixedSizeQueries(D - 1), cb.EmptyQueries()):
            assert len(cb.sample_query(dist, D, rng)) < D

    def test_support_probabilities_sum_to_one(self):
        for dist in (cb.UniformQueries(), cb.FixedSizeQueries(2), cb.EmptyQueries(),
                     cb.FixedSetQueries((0, 2))):
            support = dist.support(5)
            assert math.isclose(sum(p for _, p in support), 1.0, rel_tol=1e-12)

    def test_support_capacity_guard(self):
        with pytest.raises(cb.EnumerationLimitError):
            cb.UniformQueries().support(12)
        with pytest.raises(cb.EnumerationLimitError):
            cb.FixedSizeQueries(6).support(14)

    def test_parse_specs(self):
        assert isinstance(cb.parse_query_dist("uniform"), cb.UniformQueries)
        assert isinstance(cb.parse_query_dist("empty"), cb.EmptyQueries)
        assert cb.parse_query_dist("fixed-size:3").size == 3
        assert cb.parse_query_dist("fixed-size:half", D=9).size == 4
        assert cb.parse_query_dist("fixed-set:2,0").members == (2, 0)
        with pytest.raises(ValueError):
            cb.parse_query_dist("bogus")
        with pytest.raises(ValueError):
            cb.parse_query_dist("fixed-size:half")


class TestCounting:
    def test_small_cases_by_enumeration(self):
        # (conditioning set, target) pairs at D=3: sizes 1 and 2
        assert cb.count_conditionals_of_size(3, 1) == 3   # (empty, target)
        assert cb.count_conditionals_of_size(3, 2) == 6   # ({i}, target != i)

    def test_sum_identity(self):
        for D in range(1, 11):
            total = sum(cb.count_conditionals_of_size(D, d) for d in range(1, D + 1))
            assert total == D * 2 ** (D - 1)

    def test_brute_force_match(self):
        for D in range(1, 5):
            per_size = Counter()
            for s in range(D):
                for subset in itertools.combinations(range(D), s):
                    for t in range(D):
                        if t not in subset:
                            per_size[s + 1] += 1
            for d in range(1, D + 1):
                assert per_size[d] == cb.count_conditionals_of_size(D, d)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            cb.count_conditionals_of_size(3, 0)
        with pytest.raises(ValueError):
            cb.count_conditionals_of_size(3, 4)

    def test_oapp_count(self):
        assert cb.count_trained_conditionals_oapp(3, 1) == 7
        assert cb.count_trained_conditionals_oapp(3, 1) == sum(
            math.comb(3, d - 1) for d in range(1, 4)
        )
        assert cb.count_trained_conditionals_oapp(3, 1) < 3 * 2**2
        assert cb.count_trained_conditionals_oapp(3, 2) == 2 * cb.count_trained_conditionals_oapp(3, 1)


class TestAudit:
    def test_empty_log(self):
        assert cb.audit_conditional_usage([], 5) == Counter()

    def test_histogram_from_masks(self):
        events = [cb.ObservedSet(4, ()), cb.ObservedSet(4, (1,)), cb.ObservedSet(4, (0, 2))]
        hist = cb.audit_conditional_usage(events, 4)
        assert hist == Counter({1: 1, 2: 1, 3: 1})
