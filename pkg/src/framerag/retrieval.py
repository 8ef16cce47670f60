"""Stage 2b: distribution-grouped retrieval of the final frame budget.

Frames whose answer-token distributions look alike are likely redundant, so
grouping runs over those distributions rather than over visual features, and
each group is ITS-sampled on the scalar relevance scores. A plain Top-K
selection over the same scores is computed alongside for the run trace; the
contrast between the two is the point of the stage.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .backends import TokenDistribution
from .core import FrameRecord, PipelineConfig, RetrievalFeature
from .grouping import ScoreVector, Segmentation, Stage, grouped_sample_detail
from .score import is_degenerate, relevance_scores


def distribution_features(
    dists: Sequence[TokenDistribution],
    mode: RetrievalFeature = RetrievalFeature.YES_NO,
) -> np.ndarray:
    """Per-frame feature vectors for distribution-similarity grouping.

    ``yes_no`` uses the (p_yes, p_no) pair renormalized to sum one — the
    sufficient statistic of a binary judgment and stable across servers.
    ``top_k`` spans the union vocabulary of the returned top tokens, for
    fidelity experiments against richer payloads. Degenerate rows are all
    zero and inherit a neighbor's feature inside the grouping engine.
    """
    if mode is RetrievalFeature.YES_NO:
        rows = []
        for dist in dists:
            total = dist.p_yes + dist.p_no
            rows.append((dist.p_yes / total, dist.p_no / total) if total > 0 else (0.0, 0.0))
        return np.asarray(rows, dtype=float)
    vocab = sorted({token for dist in dists for token, _ in dist.top_tokens})
    index = {token: i for i, token in enumerate(vocab)}
    features = np.zeros((len(dists), max(1, len(vocab))))
    for row, dist in enumerate(dists):
        for token, prob in dist.top_tokens:
            features[row, index[token]] = prob
    return features


def top_k_select(scores: Sequence[float], k: int) -> list[int]:
    """Baseline: positions of the k highest scores (ties toward earlier)."""
    scores = np.asarray(scores, dtype=float)
    order = np.lexsort((np.arange(scores.size), -scores))
    return sorted(int(i) for i in order[:k])


@dataclass(frozen=True)
class RetrievalResult:
    retrieved: tuple[FrameRecord, ...]
    positions: tuple[int, ...]
    topk_positions: tuple[int, ...]
    scores: ScoreVector
    degenerate: tuple[bool, ...]
    segmentation: Segmentation

    def trace(self) -> dict:
        return {
            "scores": list(self.scores.values),
            "degenerate": [int(d) for d in self.degenerate],
            "cuts": list(self.segmentation.boundaries),
            "budgets": list(self.segmentation.budgets),
            "selected_positions": list(self.positions),
            "selected_indices": [f.index for f in self.retrieved],
            "topk_positions": list(self.topk_positions),
        }


def retrieve(
    frames: Sequence[FrameRecord],
    dists: Sequence[TokenDistribution],
    cfg: PipelineConfig,
) -> RetrievalResult:
    """Exactly ``cfg.m_retrieve`` frames in temporal order."""
    if len(frames) != len(dists):
        raise ValueError("one distribution per frame required")
    if len(frames) < cfg.m_retrieve:
        raise ValueError(
            f"cannot retrieve {cfg.m_retrieve} frames from {len(frames)}"
        )
    values = relevance_scores(dists, cfg.score_strategy)
    scores = ScoreVector(values=tuple(values), stage=Stage.RETRIEVAL)
    features = distribution_features(dists, cfg.retrieval_feature)
    # L1 on renormalized (p_yes, p_no); cosine is ill-conditioned near (0, 0).
    metric = "l1" if cfg.retrieval_feature is RetrievalFeature.YES_NO else "cosine"
    detail = grouped_sample_detail(
        features, scores, g=cfg.g_retrieve, m=cfg.m_retrieve, metric=metric
    )
    return RetrievalResult(
        retrieved=tuple(frames[i] for i in detail.indices),
        positions=detail.indices,
        topk_positions=tuple(top_k_select(values, cfg.m_retrieve)),
        scores=scores,
        degenerate=tuple(is_degenerate(d) for d in dists),
        segmentation=detail.segmentation,
    )
