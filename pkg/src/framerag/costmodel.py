"""Analytic compute-cost accounting.

A linear per-frame model: every model role has a TFLOPs-per-frame constant
and a TFLOPs-per-text-call constant, and a stage costs calls x (frames x
per-frame + per-call-text). The shipped constants are a derived calibration
(see ``data/profiles.json``), good for comparing pipeline variants, not for
predicting wall-clock on specific hardware.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .core import PipelineConfig
from .errors import MissingProfile


@dataclass(frozen=True, slots=True)
class ModelProfile:
    """Per-frame and per-text-call forward-pass cost of one model role."""

    name: str
    tf_per_frame: float
    tf_per_call_text: float = 0.0

    def __post_init__(self) -> None:
        if self.tf_per_frame < 0 or self.tf_per_call_text < 0:
            raise ValueError("profile constants must be nonnegative")


def load_profiles(path: str | Path | None = None) -> tuple[dict[str, ModelProfile], float]:
    """Profile registry plus the baseline pipeline total to compare against."""
    if path is not None:
        raw = json.loads(Path(path).read_text())
    else:
        raw = json.loads(
            resources.files("framerag").joinpath("data/profiles.json").read_text()
        )
    profiles = {
        name: ModelProfile(name=name, **constants)
        for name, constants in raw["profiles"].items()
    }
    return profiles, float(raw["baseline_total_tflops"])


def estimate_stage(profile: ModelProfile, n_frames: int, n_calls: int = 1) -> float:
    """TFLOPs for ``n_calls`` forward passes over ``n_frames`` frames each.

    A scoring pass is ``n_frames`` single-frame calls; an answering pass is
    one call carrying all frames, repeated per view.
    """
    if n_frames < 0 or n_calls < 0:
        raise ValueError("frame and call counts must be nonnegative")
    return n_calls * (n_frames * profile.tf_per_frame + profile.tf_per_call_text)


@dataclass(frozen=True, slots=True)
class CostBreakdown:
    decompose: float
    embed: float
    score: float
    answer: float
    baseline_total: float

    @property
    def retrieval_total(self) -> float:
        return self.decompose + self.embed + self.score

    @property
    def answer_total(self) -> float:
        return self.answer

    @property
    def total(self) -> float:
        return self.retrieval_total + self.answer_total

    @property
    def reduction_vs_baseline(self) -> float:
        return 1.0 - self.total / self.baseline_total

    def to_dict(self) -> dict:
        return {
            "decompose_tflops": self.decompose,
            "embed_tflops": self.embed,
            "score_tflops": self.score,
            "answer_tflops": self.answer,
            "retrieval_total_tflops": self.retrieval_total,
            "answer_total_tflops": self.answer_total,
            "total_tflops": self.total,
            "baseline_total_tflops": self.baseline_total,
            "reduction_vs_baseline": self.reduction_vs_baseline,
        }


def estimate_pipeline(
    cfg: PipelineConfig,
    profiles: dict[str, ModelProfile] | None = None,
    baseline_total: float | None = None,
) -> CostBreakdown:
    """Stage-by-stage estimate for one query under the given config."""
    if profiles is None or baseline_total is None:
        shipped, shipped_baseline = load_profiles()
        profiles = profiles or shipped
        baseline_total = baseline_total if baseline_total is not None else shipped_baseline

    def profile(name: str) -> ModelProfile:
        if name not in profiles:
            raise MissingProfile(f"no cost profile named {name!r}")
        return profiles[name]

    decomposer = profile(cfg.profiles.decomposer)
    embedder = profile(cfg.profiles.embedder)
    scorer = profile(cfg.profiles.scorer)
    answerer = profile(cfg.profiles.answerer)
    return CostBreakdown(
        decompose=estimate_stage(decomposer, n_frames=0, n_calls=1),
        embed=estimate_stage(embedder, n_frames=cfg.n_candidates, n_calls=1),
        score=estimate_stage(scorer, n_frames=1, n_calls=cfg.m_prefilter),
        answer=estimate_stage(answerer, n_frames=cfg.m_retrieve, n_calls=cfg.n_views),
        baseline_total=baseline_total,
    )


def format_cost_table(breakdown: CostBreakdown) -> str:
    rows = [
        ("decompose", breakdown.decompose),
        ("embed", breakdown.embed),
        ("score", breakdown.score),
        ("answer", breakdown.answer),
        ("retrieval total", breakdown.retrieval_total),
        ("answer total", breakdown.answer_total),
        ("pipeline total", breakdown.total),
        ("baseline total", breakdown.baseline_total),
    ]
    width = max(len(label) for label, _ in rows)
    lines = [f"{label:<{width}}  {value:10.2f} TFLOPs" for label, value in rows]
    lines.append(
        f"{'reduction':<{width}}  {100 * breakdown.reduction_vs_baseline:9.1f} %"
    )
    return "\n".join(lines)
