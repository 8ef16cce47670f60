import numpy as np
import pytest

from framerag.backends import EmbeddingResult, MockBackend
from framerag.core import PipelineConfig, Query
from framerag.decompose import CaptionSet, decompose_query
from framerag.errors import DimensionMismatch
from framerag.grouping import Stage
from framerag.manifest import synthetic_frames
from framerag.prefilter import caption_frame_similarity, prefilter
from oracles import mean_similarity_oracle


def embs(rows):
    rows = np.asarray(rows, dtype=float)
    return EmbeddingResult(vectors=rows, dim=rows.shape[1])


class TestCaptionFrameSimilarity:
    def test_identical_unit_vectors_score_one(self):
        sv = caption_frame_similarity(embs([[1, 0]]), embs([[1, 0]]))
        assert sv.values == pytest.approx((1.0,))
        assert sv.stage is Stage.PREFILTER

    def test_orthogonal_captions_average(self):
        sv = caption_frame_similarity(embs([[1, 0], [0, 1]]), embs([[1, 0]]))
        assert sv.values == pytest.approx((0.5,))

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(17)
        captions = rng.standard_normal((3, 8))
        captions /= np.linalg.norm(captions, axis=1, keepdims=True)
        frames = rng.standard_normal((5, 8))
        frames /= np.linalg.norm(frames, axis=1, keepdims=True)
        sv = caption_frame_similarity(embs(captions), embs(frames))
        assert sv.values == pytest.approx(mean_similarity_oracle(captions, frames), abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            caption_frame_similarity(embs([[1, 0]]), embs([[1, 0, 0]]))

    def test_caption_order_irrelevant(self):
        rng = np.random.default_rng(3)
        captions = rng.standard_normal((4, 6))
        frames = rng.standard_normal((7, 6))
        forward = caption_frame_similarity(embs(captions), embs(frames))
        backward = caption_frame_similarity(embs(captions[::-1]), embs(frames))
        assert forward.values == pytest.approx(backward.values)

    def test_values_within_cosine_range(self):
        rng = np.random.default_rng(23)
        sv = caption_frame_similarity(
            embs(rng.standard_normal((6, 5))), embs(rng.standard_normal((40, 5)))
        )
        assert all(-1.0 - 1e-9 <= v <= 1.0 + 1e-9 for v in sv.values)


class TestPrefilterStage:
    def test_reduces_to_budget_in_temporal_order(self, backends, small_cfg):
        frames = synthetic_frames(24)
        captions = CaptionSet(entity=("a busy street",))
        result = prefilter(frames, captions, small_cfg, backends)
        assert len(result.survivors) == small_cfg.m_prefilter
        indices = [f.index for f in result.survivors]
        assert indices == sorted(indices)
        assert len(set(indices)) == len(indices)
        assert sum(result.segmentation.budgets) == small_cfg.m_prefilter

    def test_paper_scale_counts(self, backends):
        cfg = PipelineConfig()
        frames = synthetic_frames(256)
        captions = CaptionSet(entity=("a busy street",))
        result = prefilter(frames, captions, cfg, backends)
        assert len(result.survivors) == 128

    def test_short_video_identity_pass(self, backends, small_cfg):
        frames = synthetic_frames(small_cfg.m_prefilter)
        captions = CaptionSet(entity=("a busy street",))
        result = prefilter(frames, captions, small_cfg, backends)
        assert result.survivors == tuple(frames)
        assert result.segmentation is None
        assert len(result.scores.values) == len(frames)  # trace still scored

    def test_deterministic_survivors(self, small_cfg):
        from framerag.backends import Backends

        def bundle():
            mock = MockBackend(seed=9)
            return Backends(text_embedder=mock, frame_embedder=mock,
                            generator=mock, scorer=mock)

        frames = synthetic_frames(24)
        query = Query(text="who opens the door?", id="q")
        captions = decompose_query(query, MockBackend(seed=9))
        first = prefilter(frames, captions, small_cfg, bundle())
        second = prefilter(frames, captions, small_cfg, bundle())
        assert first.positions == second.positions
        assert first.scores.values == second.scores.values

    def test_trace_shape(self, backends, small_cfg):
        frames = synthetic_frames(24)
        captions = CaptionSet(entity=("a busy street", "a red car"))
        trace = prefilter(frames, captions, small_cfg, backends).trace()
        assert len(trace["scores"]) == 24
        assert len(trace["budgets"]) == small_cfg.g_prefilter
        assert len(trace["survivor_indices"]) == small_cfg.m_prefilter
