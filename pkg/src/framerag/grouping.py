"""Shared sampling engine: temporal clustering, budget allocation, and
inverse transform sampling (ITS).

Both reduction stages use the same machinery: cut the frame list into
contiguous temporal groups at the largest adjacent dissimilarities, give each
group a budget proportional to its size, then sample each group at uniform
quantiles of its score CDF. Everything here is a pure function of its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .errors import BudgetExceedsGroup

# Within-group shift applied before ITS so scores form a nonnegative measure
# (cosine scores may be negative). Preserves ordering and scale invariance.
SHIFT_EPS = 1e-6


class Stage(str, Enum):
    PREFILTER = "prefilter"
    RETRIEVAL = "retrieval"


@dataclass(frozen=True, slots=True)
class ScoreVector:
    """Per-frame scalar scores for one stage, aligned to that stage's frame list."""

    values: tuple[float, ...]
    stage: Stage

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.values)):
            raise ValueError("scores must be finite")


@dataclass(frozen=True, slots=True)
class Segmentation:
    """A partition of ``[0, n)`` into contiguous groups.

    ``boundaries`` are cut positions: a cut at position ``i`` separates index
    ``i - 1`` from ``i``. ``budgets``, once set, gives the per-group sample
    counts and sums to the stage budget.
    """

    n: int
    boundaries: tuple[int, ...]
    budgets: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("segmentation over an empty frame list")
        if any(b < 1 or b >= self.n for b in self.boundaries):
            raise ValueError(f"cut positions must lie in [1, {self.n - 1}]")
        if list(self.boundaries) != sorted(set(self.boundaries)):
            raise ValueError("boundaries must be sorted and unique")
        if self.budgets is not None and len(self.budgets) != len(self.boundaries) + 1:
            raise ValueError("one budget per group required")

    @property
    def groups(self) -> list[tuple[int, int]]:
        """Half-open ``(start, end)`` index ranges tiling ``[0, n)``."""
        edges = [0, *self.boundaries, self.n]
        return list(zip(edges[:-1], edges[1:]))

    @property
    def group_sizes(self) -> list[int]:
        return [end - start for start, end in self.groups]

    def with_budgets(self, budgets: Sequence[int]) -> "Segmentation":
        return replace(self, budgets=tuple(int(b) for b in budgets))


# --- dissimilarity metrics --------------------------------------------------

Metric = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _cosine_dissimilarity(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
    sims = np.where(norms > 0, np.einsum("ij,ij->i", a, b) / np.where(norms > 0, norms, 1.0), 1.0)
    return 1.0 - sims


def _l1_dissimilarity(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.abs(a - b).sum(axis=1)


_METRICS: dict[str, Metric] = {
    "cosine": _cosine_dissimilarity,
    "l1": _l1_dissimilarity,
}


def _fill_degenerate(features: np.ndarray) -> np.ndarray:
    """Replace all-zero vectors by the previous frame's feature (next at the start).

    Degenerate frames (black frames, empty distributions) inherit their
    neighborhood's grouping instead of producing undefined cosines.
    """
    norms = np.linalg.norm(features, axis=1)
    nonzero = np.flatnonzero(norms > 0)
    if nonzero.size in (0, features.shape[0]):
        return features
    filled = features.copy()
    last = -1
    for i in range(filled.shape[0]):
        if norms[i] > 0:
            last = i
        elif last >= 0:
            filled[i] = filled[last]
    filled[: nonzero[0]] = filled[nonzero[0]]
    return filled


def adjacent_dissimilarity(features: np.ndarray, metric: str | Metric = "cosine") -> np.ndarray:
    """Dissimilarity between each consecutive frame pair; length ``n - 1``."""
    features = np.asarray(features, dtype=float)
    if features.ndim != 2:
        raise ValueError("features must be an (n, d) array")
    fn = _METRICS[metric] if isinstance(metric, str) else metric
    filled = _fill_degenerate(features)
    return fn(filled[:-1], filled[1:])


# --- operations --------------------------------------------------------------


def temporal_cluster(
    features: np.ndarray, g: int, metric: str | Metric = "cosine"
) -> Segmentation:
    """Partition frames into ``g`` contiguous groups, cutting where adjacent
    frames are least similar (ties broken toward the earlier position).

    Only temporally adjacent frames can share a group, and within-group
    adjacent dissimilarity never exceeds any cut's dissimilarity.
    """
    features = np.asarray(features, dtype=float)
    n = features.shape[0]
    if g < 1:
        raise ValueError(f"group count must be >= 1, got {g}")
    if n < g:
        raise ValueError(f"cannot split {n} frames into {g} groups")
    if g == 1:
        return Segmentation(n=n, boundaries=())
    d = adjacent_dissimilarity(features, metric)
    # d[k] sits between indices k and k+1, i.e. cut position k + 1.
    order = np.lexsort((np.arange(d.size), -d))
    cuts = np.sort(order[: g - 1] + 1)
    return Segmentation(n=n, boundaries=tuple(int(c) for c in cuts))


def allocate_budget(group_sizes: Sequence[int], m: int) -> list[int]:
    """Split a sample budget of ``m`` across groups proportionally to size.

    Largest-remainder rounding: floor every proportional share, then hand the
    leftover units to the largest fractional parts (ties toward the earlier
    group). Integer arithmetic throughout, so results are exact. A unit that
    would overflow a full group rolls to the next-largest remainder.
    """
    sizes = [int(s) for s in group_sizes]
    if any(s < 1 for s in sizes):
        raise ValueError("group sizes must be positive")
    n = sum(sizes)
    if not 1 <= m <= n:
        raise ValueError(f"budget m={m} must satisfy 1 <= m <= {n}")
    floors = [(s * m) // n for s in sizes]
    remainders = [(s * m) % n for s in sizes]
    budgets = list(floors)
    leftover = m - sum(floors)
    for g in sorted(range(len(sizes)), key=lambda g: (-remainders[g], g)):
        if leftover == 0:
            break
        if budgets[g] < sizes[g]:
            budgets[g] += 1
            leftover -= 1
    assert leftover == 0, "remainder distribution must terminate"
    return budgets


def its_sample(scores: Sequence[float] | np.ndarray, m_g: int) -> list[int]:
    """Select ``m_g`` indices at uniform quantiles of the score CDF.

    With normalized cumulative scores ``cdf``, quantile ``j / m_g`` maps to
    the smallest index whose ``cdf`` reaches it (the generalized inverse CDF),
    for ``j = 1..m_g``. Duplicate picks — peaked score mass hit by several
    quantiles — are backfilled with the highest-scored unselected indices
    (ties toward the earlier index). Zero total mass falls back to uniform
    weights, i.e. an even stride.
    """
    scores = np.asarray(scores, dtype=float)
    n = scores.size
    if m_g > n:
        raise BudgetExceedsGroup(f"budget {m_g} exceeds group size {n}")
    if m_g < 0:
        raise ValueError("budget must be nonnegative")
    if m_g == 0:
        return []
    if not np.all(np.isfinite(scores)) or np.any(scores < 0):
        raise ValueError("scores must be finite and nonnegative")
    weights = scores
    cum = np.cumsum(weights)
    if cum[-1] <= 0:
        weights = np.ones(n)
        cum = np.cumsum(weights)
    cdf = cum / cum[-1]
    quantiles = np.arange(1, m_g + 1) / m_g
    picked = np.searchsorted(cdf, quantiles, side="left")
    unique = np.unique(picked)
    if unique.size < m_g:
        chosen = set(unique.tolist())
        spare = np.array([i for i in range(n) if i not in chosen])
        order = np.lexsort((spare, -weights[spare]))
        fill = spare[order[: m_g - unique.size]]
        unique = np.concatenate([unique, fill])
    return sorted(int(i) for i in unique)


@dataclass(frozen=True, slots=True)
class GroupedSample:
    """Outcome of one grouped-sampling pass, with the data traces need."""

    indices: tuple[int, ...]
    segmentation: Segmentation


def grouped_sample_detail(
    features: np.ndarray,
    scores: ScoreVector | Sequence[float],
    g: int,
    m: int,
    metric: str | Metric = "cosine",
) -> GroupedSample:
    """Cluster, allocate, then ITS-sample each group; global indices ascending."""
    values = np.asarray(scores.values if isinstance(scores, ScoreVector) else scores, dtype=float)
    features = np.asarray(features, dtype=float)
    if features.shape[0] != values.size:
        raise ValueError("features and scores must cover the same frames")
    seg = temporal_cluster(features, g, metric)
    budgets = allocate_budget(seg.group_sizes, m)
    selected: list[int] = []
    for (start, end), budget in zip(seg.groups, budgets):
        group_scores = values[start:end]
        shifted = group_scores - group_scores.min() + SHIFT_EPS
        selected.extend(start + i for i in its_sample(shifted, budget))
    return GroupedSample(indices=tuple(sorted(selected)), segmentation=seg.with_budgets(budgets))


def grouped_sample(
    features: np.ndarray,
    scores: ScoreVector | Sequence[float],
    g: int,
    m: int,
    metric: str | Metric = "cosine",
) -> list[int]:
    """Exactly ``m`` unique frame indices in ascending order."""
    return list(grouped_sample_detail(features, scores, g, m, metric).indices)
