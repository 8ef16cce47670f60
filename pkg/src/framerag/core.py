"""Domain types and pipeline configuration.

All types are immutable values; they can be shared freely between threads.
Frames are identified by their position in the candidate list throughout the
pipeline — timestamps are carried along as metadata only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path

from .errors import BudgetOrderViolation, ConfigError, GroupCountTooLarge


class ScoreStrategy(str, Enum):
    """How a yes/no token distribution becomes a scalar relevance score."""

    ONE_WORD = "one_word"
    TWO_WORD = "two_word"


class RetrievalFeature(str, Enum):
    """Per-frame feature used to group frames in the retrieval stage."""

    YES_NO = "yes_no"
    TOP_K = "top_k"


@dataclass(frozen=True, slots=True)
class FrameRecord:
    """One candidate frame.

    ``index`` is the position in the candidate list (unique, and strictly
    increasing with ``timestamp_s``). ``content_ref`` is an opaque locator
    (file path or URL) for the frame image. ``embedding``, when present, is
    a precomputed feature vector reused instead of an embed call.
    """

    index: int
    timestamp_s: float
    content_ref: str
    embedding: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError(f"frame index must be nonnegative, got {self.index}")
        if self.timestamp_s < 0:
            raise ValueError(f"timestamp_s must be nonnegative, got {self.timestamp_s}")


@dataclass(frozen=True, slots=True)
class Query:
    """A user question, optionally with multiple-choice options."""

    text: str
    options: tuple[str, ...] | None = None
    id: str = ""

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("query text must be nonempty")
        if self.options is not None and len(set(self.options)) != len(self.options):
            raise ValueError("query option labels must be unique")


@dataclass(frozen=True, slots=True)
class BackendEndpoints:
    """URLs for the four model roles. ``mock://<seed>`` selects the seeded mock."""

    embed_text_url: str = "mock://0"
    embed_image_url: str = "mock://0"
    generate_url: str = "mock://0"
    score_url: str = "mock://0"


@dataclass(frozen=True, slots=True)
class ProfileNames:
    """Model-profile names used by the analytic cost model."""

    embedder: str = "embedder-0.3b"
    decomposer: str = "decomposer-1.7b"
    scorer: str = "scorer-2b"
    answerer: str = "answerer-7b"


@dataclass(frozen=True, slots=True)
class PipelineConfig:
    """Stage budgets, group counts, and backend wiring for one pipeline run.

    Defaults give the 256 -> 128 -> 64 reduction with group counts 52/26,
    two-word scoring, and two QA views.
    """

    n_candidates: int = 256
    m_prefilter: int = 128
    m_retrieve: int = 64
    g_prefilter: int = 52
    g_retrieve: int = 26
    score_strategy: ScoreStrategy = ScoreStrategy.TWO_WORD
    n_views: int = 2
    retrieval_feature: RetrievalFeature = RetrievalFeature.YES_NO
    yes_tokens: tuple[str, ...] = ("yes", "Yes")
    no_tokens: tuple[str, ...] = ("no", "No")
    max_in_flight: int = 8
    seed: int = 0
    decompose_template: str = "decompose_v1"
    score_template: str = "relevance_v1"
    backends: BackendEndpoints = field(default_factory=BackendEndpoints)
    profiles: ProfileNames = field(default_factory=ProfileNames)


def validate_config(cfg: PipelineConfig) -> PipelineConfig:
    """Check every config invariant; returns the config unchanged on success."""
    for name in ("n_candidates", "m_prefilter", "m_retrieve", "g_prefilter",
                 "g_retrieve", "n_views", "max_in_flight"):
        value = getattr(cfg, name)
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            raise ConfigError(f"{name} must be a positive integer, got {value!r}")
    if cfg.m_retrieve > cfg.m_prefilter or cfg.m_prefilter > cfg.n_candidates:
        raise BudgetOrderViolation(
            f"budgets must satisfy m_retrieve <= m_prefilter <= n_candidates, "
            f"got {cfg.m_retrieve} / {cfg.m_prefilter} / {cfg.n_candidates}"
        )
    if cfg.g_prefilter > cfg.m_prefilter:
        raise GroupCountTooLarge(
            f"g_prefilter={cfg.g_prefilter} exceeds m_prefilter={cfg.m_prefilter}"
        )
    if cfg.g_retrieve > cfg.m_retrieve:
        raise GroupCountTooLarge(
            f"g_retrieve={cfg.g_retrieve} exceeds m_retrieve={cfg.m_retrieve}"
        )
    if not isinstance(cfg.score_strategy, ScoreStrategy):
        raise ConfigError(f"unknown score_strategy {cfg.score_strategy!r}")
    if not isinstance(cfg.retrieval_feature, RetrievalFeature):
        raise ConfigError(f"unknown retrieval_feature {cfg.retrieval_feature!r}")
    if not cfg.yes_tokens or not cfg.no_tokens:
        raise ConfigError("yes_tokens and no_tokens must be nonempty")
    return cfg


# --- JSON config file ------------------------------------------------------
#
# Fixed key names, unknown keys rejected, so a config file identifies a run
# bit-exactly. serialize -> parse -> serialize is byte-identical.

_NESTED_KEYS = {"backends": BackendEndpoints, "profiles": ProfileNames}


def config_to_dict(cfg: PipelineConfig) -> dict:
    out: dict = {}
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if f.name in _NESTED_KEYS:
            out[f.name] = {g.name: getattr(value, g.name) for g in fields(value)}
        elif isinstance(value, Enum):
            out[f.name] = value.value
        elif isinstance(value, tuple):
            out[f.name] = list(value)
        else:
            out[f.name] = value
    return out


def config_from_dict(data: dict) -> PipelineConfig:
    """Build a validated config from plain JSON data; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ConfigError(f"config must be a JSON object, got {type(data).__name__}")
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs: dict = {}
    for f in fields(PipelineConfig):
        if f.name not in data:
            continue
        value = data[f.name]
        if f.name in _NESTED_KEYS:
            cls = _NESTED_KEYS[f.name]
            sub_known = {g.name for g in fields(cls)}
            sub_unknown = set(value) - sub_known
            if sub_unknown:
                raise ConfigError(f"unknown {f.name} keys: {sorted(sub_unknown)}")
            kwargs[f.name] = cls(**value)
        elif f.name == "score_strategy":
            try:
                kwargs[f.name] = ScoreStrategy(value)
            except ValueError:
                raise ConfigError(f"unknown score_strategy {value!r}") from None
        elif f.name == "retrieval_feature":
            try:
                kwargs[f.name] = RetrievalFeature(value)
            except ValueError:
                raise ConfigError(f"unknown retrieval_feature {value!r}") from None
        elif f.name in ("yes_tokens", "no_tokens"):
            kwargs[f.name] = tuple(value)
        else:
            kwargs[f.name] = value
    try:
        cfg = PipelineConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return validate_config(cfg)


def config_to_json(cfg: PipelineConfig) -> str:
    return json.dumps(config_to_dict(cfg), sort_keys=True, indent=2) + "\n"


def config_from_json(text: str) -> PipelineConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return config_from_dict(data)


def load_config(path: str | Path | None, overrides: dict | None = None) -> PipelineConfig:
    """Load a config file (defaults when ``path`` is None) and apply overrides.

    Overrides use the same key names as the file and take precedence over it.
    """
    cfg = config_from_json(Path(path).read_text()) if path else PipelineConfig()
    if overrides:
        clean = {k: v for k, v in overrides.items() if v is not None}
        if clean:
            base = config_to_dict(cfg)
            for key in clean:
                if key not in base:
                    raise ConfigError(f"unknown config override: {key}")
            base.update(clean)
            cfg = config_from_dict(base)
    return validate_config(cfg)


def with_seed(cfg: PipelineConfig, seed: int) -> PipelineConfig:
    return replace(cfg, seed=seed)
