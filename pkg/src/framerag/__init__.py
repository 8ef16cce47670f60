"""framerag: efficient frame retrieval-augmented video question answering.

A model-agnostic engine that decomposes a query into matchable captions,
pre-filters candidate frames by embedding similarity, scores survivors with
a lightweight relevance backend, retrieves a frame budget by grouped inverse
transform sampling, and answers through a multi-view QA loop with voting.
All model inference sits behind pluggable backends; compute cost is tracked
by an analytic per-frame model.
"""

from .backends import (
    Backends,
    EmbeddingResult,
    GenerationResult,
    MockBackend,
    TokenDistribution,
    make_backends,
)
from .core import (
    FrameRecord,
    PipelineConfig,
    Query,
    RetrievalFeature,
    ScoreStrategy,
    config_from_json,
    config_to_json,
    load_config,
    validate_config,
)
from .costmodel import CostBreakdown, ModelProfile, estimate_pipeline, estimate_stage, load_profiles
from .decompose import CaptionSet, decompose_query, parse_decomposition
from .grouping import (
    ScoreVector,
    Segmentation,
    Stage,
    allocate_budget,
    grouped_sample,
    grouped_sample_detail,
    its_sample,
    temporal_cluster,
)
from .manifest import (
    EvalItem,
    load_dataset_manifest,
    load_frame_manifest,
    synthetic_frames,
    uniform_candidates,
    write_frame_manifest,
)
from .multiview import QARound, QATrace, run_multiview, should_stop, vote
from .pipeline import evaluate_dataset, run_from_manifest, run_pipeline, write_report
from .prefilter import caption_frame_similarity, prefilter
from .report import emit_report_files, frame_rows
from .retrieval import distribution_features, retrieve, top_k_select
from .score import relevance_score, score_frames

__version__ = "0.1.0"

__all__ = [
    "Backends", "CaptionSet", "CostBreakdown", "EmbeddingResult", "EvalItem",
    "FrameRecord", "GenerationResult", "MockBackend", "ModelProfile",
    "PipelineConfig", "QARound", "QATrace", "Query", "RetrievalFeature",
    "ScoreStrategy", "ScoreVector", "Segmentation", "Stage", "TokenDistribution",
    "allocate_budget", "caption_frame_similarity", "config_from_json",
    "config_to_json", "decompose_query", "distribution_features",
    "emit_report_files", "estimate_pipeline", "estimate_stage",
    "evaluate_dataset", "frame_rows", "grouped_sample", "grouped_sample_detail",
    "its_sample", "load_config", "load_dataset_manifest", "load_frame_manifest",
    "load_profiles", "make_backends", "parse_decomposition", "prefilter",
    "relevance_score", "retrieve", "run_from_manifest", "run_multiview",
    "run_pipeline", "score_frames", "should_stop", "synthetic_frames",
    "temporal_cluster", "top_k_select", "uniform_candidates", "validate_config",
    "vote", "write_frame_manifest", "write_report",
]
