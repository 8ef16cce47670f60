"""Stage 2a: per-frame relevance scoring with the lightweight scorer backend.

Each surviving frame is paired with the query for one binary-judgment call.
Requests fan out concurrently but results are aggregated by frame index, so
the stage output is independent of completion order. Individual failures
degrade to a zero distribution instead of aborting a 128-frame stage; only a
majority of failures aborts.
"""

from __future__ import annotations

import logging
from fractions import Fraction
from typing import Sequence

from .backends import RelevanceScorer, TokenDistribution, fan_out
from .core import FrameRecord, Query, ScoreStrategy
from .errors import BackendError, ScoringDegraded

log = logging.getLogger(__name__)


def score_frames(
    frames: Sequence[FrameRecord],
    query: Query,
    scorer: RelevanceScorer,
    template_id: str = "relevance_v1",
    max_in_flight: int = 8,
) -> list[TokenDistribution]:
    """One scorer call per frame; returns distributions aligned to frame order."""
    if not frames:
        raise ValueError("frames must be nonempty")
    settled = fan_out(
        lambda frame: scorer.score_relevance(frame, query, template_id),
        list(frames),
        max_in_flight=max_in_flight,
        settle=True,
    )
    dists: list[TokenDistribution] = []
    failures = 0
    for frame, (dist, exc) in zip(frames, settled):
        if exc is None:
            dists.append(dist)
        elif isinstance(exc, BackendError):
            log.warning("scoring frame %d failed: %s", frame.index, exc)
            dists.append(TokenDistribution.zero())
            failures += 1
        else:
            raise exc
    if 2 * failures > len(frames):
        raise ScoringDegraded(f"{failures} of {len(frames)} frames failed scoring")
    return dists


def is_degenerate(dist: TokenDistribution) -> bool:
    """True when the distribution carries no yes/no mass at all."""
    return dist.p_yes + dist.p_no == 0.0


def relevance_score(dist: TokenDistribution, strategy: ScoreStrategy) -> float:
    """Scalar relevance in [0, 1] for one frame.

    ``one_word`` is the yes probability alone; ``two_word`` renormalizes yes
    against yes+no. The two-word ratio is computed in exact rational
    arithmetic and rounded once, so e.g. (0.6, 0.2) gives exactly 0.75
    instead of picking up a double rounding from the float sum.
    """
    if strategy is ScoreStrategy.ONE_WORD:
        return dist.p_yes
    if is_degenerate(dist):
        return 0.0
    return float(Fraction(dist.p_yes) / (Fraction(dist.p_yes) + Fraction(dist.p_no)))


def relevance_scores(
    dists: Sequence[TokenDistribution], strategy: ScoreStrategy
) -> list[float]:
    return [relevance_score(d, strategy) for d in dists]
