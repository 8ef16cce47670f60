"""Stage 1: caption-frame similarity pre-filter.

Embeds the decomposed captions and the candidate frames once, scores every
frame by its mean cosine similarity to the captions, and keeps the prefilter
budget via grouped sampling over the same frame embeddings. One embedding
pass serves both the scoring and the clustering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backends import Backends, EmbeddingResult
from .core import FrameRecord, PipelineConfig
from .decompose import CaptionSet
from .errors import DimensionMismatch
from .grouping import ScoreVector, Segmentation, Stage, grouped_sample_detail


def caption_frame_similarity(
    caption_embs: EmbeddingResult, frame_embs: EmbeddingResult
) -> ScoreVector:
    """Per-frame mean cosine similarity over all captions; values in [-1, 1]."""
    if caption_embs.dim != frame_embs.dim:
        raise DimensionMismatch(
            f"caption dim {caption_embs.dim} != frame dim {frame_embs.dim}"
        )
    captions = caption_embs.vectors
    frames = frame_embs.vectors
    if captions.shape[0] < 1 or frames.shape[0] < 1:
        raise ValueError("need at least one caption and one frame")
    captions = captions / np.linalg.norm(captions, axis=1, keepdims=True)
    frames = frames / np.linalg.norm(frames, axis=1, keepdims=True)
    values = frames @ captions.T
    return ScoreVector(
        values=tuple(float(v) for v in values.mean(axis=1)), stage=Stage.PREFILTER
    )


@dataclass(frozen=True)
class PrefilterResult:
    survivors: tuple[FrameRecord, ...]
    positions: tuple[int, ...]
    scores: ScoreVector
    segmentation: Segmentation | None  # None when the stage was an identity pass

    def trace(self) -> dict:
        seg = self.segmentation
        return {
            "scores": list(self.scores.values),
            "cuts": list(seg.boundaries) if seg else [],
            "budgets": list(seg.budgets) if seg else [],
            "survivor_positions": list(self.positions),
            "survivor_indices": [f.index for f in self.survivors],
        }


def prefilter(
    frames: list[FrameRecord],
    captions: CaptionSet,
    cfg: PipelineConfig,
    backends: Backends,
) -> PrefilterResult:
    """Reduce the candidates to ``cfg.m_prefilter`` survivors in temporal order.

    Short videos (at or under the budget) pass through unfiltered; embeddings
    are still computed so the run trace and cache stay complete.
    """
    if not frames:
        raise ValueError("candidate frame list must be nonempty")
    caption_texts = captions.all_captions()
    if not caption_texts:
        raise ValueError("caption set must hold at least one caption")
    caption_embs = backends.text_embedder.embed_texts(caption_texts)
    frame_embs = backends.frame_embedder.embed_frames(frames)
    scores = caption_frame_similarity(caption_embs, frame_embs)

    if len(frames) <= cfg.m_prefilter:
        positions = tuple(range(len(frames)))
        return PrefilterResult(
            survivors=tuple(frames), positions=positions, scores=scores, segmentation=None
        )

    detail = grouped_sample_detail(
        frame_embs.vectors, scores, g=cfg.g_prefilter, m=cfg.m_prefilter
    )
    survivors = tuple(frames[i] for i in detail.indices)
    return PrefilterResult(
        survivors=survivors,
        positions=detail.indices,
        scores=scores,
        segmentation=detail.segmentation,
    )
