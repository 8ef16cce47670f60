import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from framerag.backends import MockBackend, TokenDistribution
from framerag.core import Query, ScoreStrategy
from framerag.errors import BackendUnavailable, ScoringDegraded, TokensAbsent
from framerag.manifest import synthetic_frames
from framerag.score import is_degenerate, relevance_score, score_frames


class FailingScorer:
    def __init__(self, fail_on=None, error=TokensAbsent):
        self.fail_on = fail_on  # None means fail on everything
        self.error = error
        self.inner = MockBackend(seed=0)

    def score_relevance(self, frame, query, template_id):
        if self.fail_on is None or frame.index in self.fail_on:
            raise self.error(f"frame {frame.index}")
        return self.inner.score_relevance(frame, query, template_id)


class JitteryScorer:
    """Wraps the mock with per-frame sleeps so completion order scrambles."""

    def __init__(self, seed=0):
        self.inner = MockBackend(seed=seed)

    def score_relevance(self, frame, query, template_id):
        time.sleep(0.001 * ((frame.index * 13) % 7))
        return self.inner.score_relevance(frame, query, template_id)


class TestScoreFrames:
    def test_one_call_per_frame(self):
        mock = MockBackend(seed=1)
        frames = synthetic_frames(128)
        dists = score_frames(frames, Query(text="q", id="1"), mock)
        assert len(dists) == 128
        assert mock.calls["score"] == 128

    def test_deterministic_across_runs(self):
        frames = synthetic_frames(16)
        query = Query(text="q", id="1")
        a = score_frames(frames, query, MockBackend(seed=3))
        b = score_frames(frames, query, MockBackend(seed=3))
        assert [(d.p_yes, d.p_no) for d in a] == [(d.p_yes, d.p_no) for d in b]

    def test_output_order_independent_of_completion_order(self):
        frames = synthetic_frames(24)
        query = Query(text="q", id="1")
        jittered = score_frames(frames, query, JitteryScorer(seed=3), max_in_flight=8)
        plain = score_frames(frames, query, MockBackend(seed=3), max_in_flight=1)
        assert [(d.p_yes, d.p_no) for d in jittered] == [(d.p_yes, d.p_no) for d in plain]

    def test_all_frames_failing_aborts(self):
        with pytest.raises(ScoringDegraded):
            score_frames(synthetic_frames(8), Query(text="q"), FailingScorer())

    def test_majority_failure_aborts(self):
        scorer = FailingScorer(fail_on=set(range(5)), error=BackendUnavailable)
        with pytest.raises(ScoringDegraded):
            score_frames(synthetic_frames(8), Query(text="q"), scorer)

    def test_minority_failures_become_zero_distributions(self):
        scorer = FailingScorer(fail_on={1, 3})
        dists = score_frames(synthetic_frames(8), Query(text="q"), scorer)
        assert len(dists) == 8
        assert is_degenerate(dists[1]) and is_degenerate(dists[3])
        assert not is_degenerate(dists[0])

    def test_empty_frames_rejected(self):
        with pytest.raises(ValueError):
            score_frames([], Query(text="q"), MockBackend())

    def test_non_backend_errors_propagate(self):
        scorer = FailingScorer(error=RuntimeError)
        with pytest.raises(RuntimeError):
            score_frames(synthetic_frames(4), Query(text="q"), scorer)


class TestRelevanceScore:
    def test_two_word_paper_example_exact(self):
        dist = TokenDistribution(p_yes=0.6, p_no=0.2)
        assert relevance_score(dist, ScoreStrategy.TWO_WORD) == 0.75

    def test_one_word_passthrough(self):
        dist = TokenDistribution(p_yes=0.6, p_no=0.2)
        assert relevance_score(dist, ScoreStrategy.ONE_WORD) == 0.6

    def test_degenerate_zero(self):
        dist = TokenDistribution.zero()
        assert relevance_score(dist, ScoreStrategy.TWO_WORD) == 0.0
        assert is_degenerate(dist)

    def test_pure_yes_maxes_out(self):
        dist = TokenDistribution(p_yes=0.4, p_no=0.0)
        assert relevance_score(dist, ScoreStrategy.TWO_WORD) == 1.0

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_monotone_in_p_yes_and_p_no(self, seed):
        rng = np.random.default_rng(seed)
        p_yes = float(rng.uniform(0.05, 0.6))
        p_no = float(rng.uniform(0.05, 0.35))
        delta = float(rng.uniform(1e-6, 0.04))
        base = relevance_score(TokenDistribution(p_yes, p_no), ScoreStrategy.TWO_WORD)
        more_yes = relevance_score(TokenDistribution(p_yes + delta, p_no), ScoreStrategy.TWO_WORD)
        more_no = relevance_score(TokenDistribution(p_yes, p_no + delta), ScoreStrategy.TWO_WORD)
        assert more_yes > base
        assert more_no < base

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_both_strategies_bounded(self, seed):
        rng = np.random.default_rng(seed)
        p_yes = float(rng.uniform(0, 1))
        p_no = float(rng.uniform(0, 1)) * (1 - p_yes)
        dist = TokenDistribution(p_yes, p_no)
        for strategy in ScoreStrategy:
            assert 0.0 <= relevance_score(dist, strategy) <= 1.0
