import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from framerag.errors import BudgetExceedsGroup
from framerag.grouping import (
    SHIFT_EPS,
    ScoreVector,
    Segmentation,
    Stage,
    adjacent_dissimilarity,
    allocate_budget,
    grouped_sample,
    grouped_sample_detail,
    its_sample,
    temporal_cluster,
)
from oracles import budget_oracle, cut_oracle, grouped_oracle, its_oracle


def unit_rows(rng, n, d):
    rows = rng.standard_normal((n, d))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True)


class TestSegmentation:
    def test_groups_tile_range(self):
        seg = Segmentation(n=6, boundaries=(2, 5))
        assert seg.groups == [(0, 2), (2, 5), (5, 6)]
        assert seg.group_sizes == [2, 3, 1]

    def test_rejects_unsorted_boundaries(self):
        with pytest.raises(ValueError):
            Segmentation(n=6, boundaries=(5, 2))

    def test_rejects_out_of_range_cut(self):
        with pytest.raises(ValueError):
            Segmentation(n=4, boundaries=(4,))

    def test_budget_arity_checked(self):
        with pytest.raises(ValueError):
            Segmentation(n=4, boundaries=(2,), budgets=(1,))


class TestTemporalCluster:
    def test_orthogonal_blocks_force_the_cut(self):
        features = np.array([(1, 0), (1, 0), (0, 1), (0, 1)], dtype=float)
        seg = temporal_cluster(features, g=2)
        assert seg.boundaries == (2,)
        assert seg.groups == [(0, 2), (2, 4)]

    def test_single_group_identity(self):
        features = np.random.default_rng(0).standard_normal((5, 3))
        seg = temporal_cluster(features, g=1)
        assert seg.boundaries == ()
        assert seg.groups == [(0, 5)]

    def test_matches_exhaustive_cut_oracle(self):
        rng = np.random.default_rng(42)
        features = unit_rows(rng, 8, 4)
        seg = temporal_cluster(features, g=3)
        assert list(seg.boundaries) == cut_oracle(features, 3)

    def test_ties_break_toward_earlier_position(self):
        # alternating orthogonal vectors: every adjacent dissimilarity is 1
        features = np.array([(1, 0), (0, 1), (1, 0), (0, 1)], dtype=float)
        seg = temporal_cluster(features, g=3)
        assert seg.boundaries == (1, 2)

    def test_zero_vector_inherits_previous_neighbor(self):
        features = np.array([(1, 0), (0, 0), (0, 1)], dtype=float)
        d = adjacent_dissimilarity(features)
        assert d[0] == pytest.approx(0.0)  # zero row copies its predecessor
        assert d[1] == pytest.approx(1.0)

    def test_leading_zero_vector_inherits_next(self):
        features = np.array([(0, 0), (1, 0), (0, 1)], dtype=float)
        d = adjacent_dissimilarity(features)
        assert d[0] == pytest.approx(0.0)

    def test_too_few_frames(self):
        with pytest.raises(ValueError):
            temporal_cluster(np.ones((2, 2)), g=3)

    def test_l1_metric(self):
        features = np.array([(0.9, 0.1), (0.8, 0.2), (0.1, 0.9)], dtype=float)
        d = adjacent_dissimilarity(features, metric="l1")
        assert d == pytest.approx([0.2, 1.4])

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 24), st.integers(1, 8), st.integers(0, 2**31 - 1))
    def test_cut_dominance_property(self, n, g, seed):
        g = min(g, n)
        rng = np.random.default_rng(seed)
        features = unit_rows(rng, n, 5)
        seg = temporal_cluster(features, g)
        d = adjacent_dissimilarity(features)
        cut_values = [d[b - 1] for b in seg.boundaries]
        within = [d[i - 1] for i in range(1, n) if i not in seg.boundaries]
        if cut_values and within:
            assert max(within) <= min(cut_values) + 1e-12


class TestAllocateBudget:
    def test_symmetric_split(self):
        assert allocate_budget([2, 2], 2) == [1, 1]

    def test_largest_remainder_with_earlier_tie(self):
        # raw shares [1.5, 0.5]: both remainders tie, earlier group wins
        assert allocate_budget([3, 1], 2) == [2, 0]
        assert allocate_budget([3, 1], 2) == budget_oracle([3, 1], 2)

    def test_conservation_at_paper_scale(self):
        sizes = [3 if g % 2 else 2 for g in range(52)]
        budgets = allocate_budget(sizes, 128)
        assert sum(budgets) == 128
        assert all(0 <= b <= s for b, s in zip(budgets, sizes))

    def test_infeasible_budget_rejected(self):
        with pytest.raises(ValueError):
            allocate_budget([1, 1], 3)
        with pytest.raises(ValueError):
            allocate_budget([2, 0], 1)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(1, 9), min_size=1, max_size=6), st.data())
    def test_matches_min_l1_oracle(self, sizes, data):
        m = data.draw(st.integers(1, sum(sizes)))
        assert allocate_budget(sizes, m) == budget_oracle(sizes, m)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(1, 40), min_size=1, max_size=30), st.data())
    def test_conservation_and_proportionality(self, sizes, data):
        n = sum(sizes)
        m = data.draw(st.integers(1, n))
        budgets = allocate_budget(sizes, m)
        assert sum(budgets) == m
        for budget, size in zip(budgets, sizes):
            assert 0 <= budget <= size
            assert abs(budget - size * m / n) < 1.0 + 1e-9


class TestItsSample:
    def test_equal_scores_hand_cdf(self):
        # CDF (0.25, 0.5, 0.75, 1.0); quantiles 0.5 and 1.0 land on 1 and 3
        assert its_sample([1, 1, 1, 1], 2) == [1, 3]

    def test_peaked_scores_dedupe_and_backfill(self):
        # both quantiles hit the mass at 2; backfill adds the earliest tie
        assert its_sample([0, 0, 10, 0], 2) == [0, 2]
        assert its_sample([0, 0, 10, 0], 2) == its_oracle([0, 0, 10, 0], 2)

    def test_full_budget_returns_all(self):
        assert its_sample([3.5] * 6, 6) == list(range(6))

    def test_zero_mass_uniform_stride(self):
        assert its_sample([0, 0, 0, 0], 2) == its_oracle([0, 0, 0, 0], 2) == [1, 3]

    def test_budget_exceeds_group(self):
        with pytest.raises(BudgetExceedsGroup):
            its_sample([1.0], 2)

    def test_zero_budget(self):
        assert its_sample([1.0, 2.0], 0) == []

    def test_rejects_negative_scores(self):
        with pytest.raises(ValueError):
            its_sample([-0.1, 1.0], 1)

    @settings(max_examples=120, deadline=None)
    @given(st.integers(1, 40), st.data(), st.integers(0, 2**31 - 1))
    def test_oracle_equivalence(self, n, data, seed):
        m = data.draw(st.integers(0, n))
        scores = np.random.default_rng(seed).uniform(0.0, 1.0, size=n)
        assert its_sample(scores, m) == its_oracle(scores, m)

    @settings(max_examples=80, deadline=None)
    @given(st.integers(2, 30), st.data(), st.integers(0, 2**31 - 1))
    def test_monotone_mass_pigeonhole(self, n, data, seed):
        # a frame holding at least 1/m of the total group mass is always selected
        m = data.draw(st.integers(1, n))
        rng = np.random.default_rng(seed)
        scores = rng.uniform(0.0, 1.0, size=n)
        heavy = int(rng.integers(n))
        if m == 1:
            scores[:] = 0.0
            scores[heavy] = 1.0
        else:
            rest = scores.sum() - scores[heavy]
            scores[heavy] = 1.01 * rest / (m - 1)
        assert scores[heavy] >= scores.sum() / m
        assert heavy in its_sample(scores, m)

    @settings(max_examples=80, deadline=None)
    @given(st.integers(1, 30), st.data(),
           st.sampled_from([2, 3, 10, 64, 1000]), st.integers(0, 2**31 - 1))
    def test_scale_invariance(self, n, data, c, seed):
        # integer-valued scores make both cumsums exact, so invariance is
        # bit-for-bit rather than approximate
        m = data.draw(st.integers(0, n))
        scores = np.random.default_rng(seed).integers(0, 50, size=n).astype(float)
        assert its_sample(scores, m) == its_sample(scores * c, m)


class TestGroupedSample:
    def test_single_group_uniform_scores_even_stride(self):
        features = np.ones((8, 3))
        picked = grouped_sample(features, [1.0] * 8, g=1, m=4)
        assert picked == [1, 3, 5, 7]

    def test_two_blocks_one_pick_each(self):
        rng = np.random.default_rng(5)
        features = np.vstack([
            np.tile([1.0, 0.0], (4, 1)) + rng.normal(0, 1e-3, (4, 2)),
            np.tile([0.0, 1.0], (4, 1)) + rng.normal(0, 1e-3, (4, 2)),
        ])
        scores = [0.1, 0.9, 0.1, 0.1, 0.1, 0.1, 0.9, 0.1]
        picked = grouped_sample(features, scores, g=2, m=2)
        assert picked == grouped_oracle(features, scores, 2, 2)
        assert len([i for i in picked if i < 4]) == 1
        assert len([i for i in picked if i >= 4]) == 1

    def test_full_budget_identity(self):
        rng = np.random.default_rng(11)
        features = unit_rows(rng, 10, 4)
        scores = rng.uniform(size=10)
        assert grouped_sample(features, scores, g=3, m=10) == list(range(10))

    def test_accepts_score_vector(self):
        features = np.ones((4, 2))
        sv = ScoreVector(values=(0.1, 0.2, 0.3, 0.4), stage=Stage.PREFILTER)
        assert grouped_sample(features, sv, g=1, m=2) == grouped_sample(
            features, [0.1, 0.2, 0.3, 0.4], g=1, m=2
        )

    def test_detail_exposes_segmentation(self):
        rng = np.random.default_rng(3)
        features = unit_rows(rng, 12, 4)
        detail = grouped_sample_detail(features, rng.uniform(size=12), g=4, m=6)
        seg = detail.segmentation
        assert sum(seg.budgets) == 6
        assert len(seg.budgets) == 4
        assert len(detail.indices) == 6

    def test_negative_scores_handled_by_shift(self):
        features = np.ones((5, 2))
        picked = grouped_sample(features, [-0.9, -0.5, -0.1, -0.7, -0.3], g=1, m=2)
        assert len(picked) == 2

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 40), st.data(), st.integers(0, 2**31 - 1))
    def test_conservation_property(self, n, data, seed):
        g = data.draw(st.integers(1, n))
        m = data.draw(st.integers(1, n))
        rng = np.random.default_rng(seed)
        features = unit_rows(rng, n, 4)
        scores = rng.uniform(-1.0, 1.0, size=n)
        picked = grouped_sample(features, scores, g=g, m=m)
        assert len(picked) == m == len(set(picked))
        assert picked == sorted(picked)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(4, 24), st.data(), st.integers(0, 2**31 - 1))
    def test_matches_composed_oracle(self, n, data, seed):
        g = data.draw(st.integers(1, min(n, 6)))
        m = data.draw(st.integers(1, n))
        rng = np.random.default_rng(seed)
        features = unit_rows(rng, n, 3)
        scores = rng.uniform(0.0, 1.0, size=n)
        assert grouped_sample(features, scores, g=g, m=m) == grouped_oracle(
            features, scores, g, m
        )

    def test_shift_epsilon_keeps_constant_groups_uniform(self):
        features = np.ones((6, 2))
        picked = grouped_sample(features, [0.4] * 6, g=1, m=3)
        assert picked == [1, 3, 5]
        assert SHIFT_EPS > 0
