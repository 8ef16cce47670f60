"""Pluggable clients for the four model roles: text embedder, frame embedder,
text generator, and relevance scorer.

Two implementations ship: a JSON-over-HTTP client speaking the protocol below,
and a seeded deterministic mock (URL scheme ``mock://<seed>``) whose every
operation is a pure function of its inputs — two runs with the same seed are
bit-identical regardless of thread scheduling.

HTTP protocol (all POST, JSON bodies):

    /v1/embed_text   {"texts": [str]}                    -> {"vectors": [[f]], "dim": d}
    /v1/embed_image  {"image_b64": str, "ref": str}      -> {"vector": [f], "dim": d}
    /v1/generate     {"messages": [msg], "max_tokens"?}  -> {"text": str, "finish_reason": str}
    /v1/score        {"messages": [msg], "top_k": int}   -> {"top_logprobs": [{"token", "logprob"}]}

A message is ``{"role": str, "text": str, "images"?: [content_ref]}``. Errors
come back as ``{"error": {"type": str, "message": str}}``; the type
``context_too_long`` (or HTTP 413) maps to :class:`ContextTooLong`.
"""

from __future__ import annotations

import base64
import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Protocol, Sequence
from urllib.parse import urlparse

import httpx
import numpy as np

from .core import FrameRecord, Query
from .errors import (
    BackendUnavailable,
    ContextTooLong,
    DimensionMismatch,
    FrameUnreadable,
    TokensAbsent,
)

Message = dict
DEFAULT_MAX_IN_FLIGHT = 8
DEFAULT_YES_TOKENS = ("yes", "Yes")
DEFAULT_NO_TOKENS = ("no", "No")


# --- result types ------------------------------------------------------------


@dataclass(frozen=True)
class EmbeddingResult:
    """L2-normalized vectors, one per input item."""

    vectors: np.ndarray
    dim: int

    def __post_init__(self) -> None:
        if self.vectors.ndim != 2 or self.vectors.shape[1] != self.dim:
            raise DimensionMismatch(
                f"expected (n, {self.dim}) vectors, got {self.vectors.shape}"
            )


class FinishReason(str, Enum):
    STOP = "stop"
    LENGTH = "length"
    ERROR = "error"


@dataclass(frozen=True, slots=True)
class GenerationResult:
    text: str
    finish_reason: FinishReason = FinishReason.STOP

    def __post_init__(self) -> None:
        if self.finish_reason is FinishReason.STOP and not self.text:
            raise ValueError("stopped generation must carry text")


@dataclass(frozen=True, slots=True)
class TokenDistribution:
    """First-answer-token probabilities restricted to the yes/no entries,
    plus the raw top-K tokens when the server provides them."""

    p_yes: float
    p_no: float
    top_tokens: tuple[tuple[str, float], ...] = ()

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_yes <= 1.0 and 0.0 <= self.p_no <= 1.0):
            raise ValueError("token probabilities must lie in [0, 1]")
        if self.p_yes + self.p_no > 1.0 + 1e-6:
            raise ValueError("p_yes and p_no are entries of one distribution")
        probs = [p for _, p in self.top_tokens]
        if any(not 0.0 <= p <= 1.0 for p in probs) or probs != sorted(probs, reverse=True):
            raise ValueError("top_tokens must be valid probabilities in descending order")

    @classmethod
    def zero(cls) -> "TokenDistribution":
        return cls(p_yes=0.0, p_no=0.0)


# --- role protocols -----------------------------------------------------------


class TextEmbedder(Protocol):
    def embed_texts(self, texts: Sequence[str]) -> EmbeddingResult: ...


class FrameEmbedder(Protocol):
    def embed_frames(self, frames: Sequence[FrameRecord]) -> EmbeddingResult: ...


class Generator(Protocol):
    def generate(self, messages: Sequence[Message]) -> GenerationResult: ...


class RelevanceScorer(Protocol):
    def score_relevance(
        self, frame: FrameRecord, query: Query, template_id: str
    ) -> TokenDistribution: ...


# --- shared helpers -----------------------------------------------------------


def normalize_rows(vectors: np.ndarray) -> np.ndarray:
    vectors = np.asarray(vectors, dtype=float)
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("cannot normalize an all-zero embedding")
    return vectors / norms


def fan_out(
    fn: Callable,
    items: Sequence,
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
    settle: bool = False,
) -> list:
    """Apply ``fn`` to every item concurrently, results in input order.

    With ``settle=True`` each slot holds ``(value, None)`` or
    ``(None, exception)`` instead of raising, so one bad item cannot abort
    a whole stage.
    """
    if not items:
        return []
    with ThreadPoolExecutor(max_workers=max(1, max_in_flight)) as pool:
        futures = [pool.submit(fn, item) for item in items]
        if not settle:
            return [f.result() for f in futures]
        out = []
        for f in futures:
            exc = f.exception()
            out.append((None, exc) if exc is not None else (f.result(), None))
        return out


def messages_text(messages: Sequence[Message]) -> str:
    return "\n".join(str(m.get("text", "")) for m in messages)


def extract_yes_no(
    top_logprobs: Sequence[tuple[str, float]],
    yes_tokens: Sequence[str] = DEFAULT_YES_TOKENS,
    no_tokens: Sequence[str] = DEFAULT_NO_TOKENS,
) -> TokenDistribution:
    """Turn a top-K (token, logprob) payload into a yes/no distribution.

    Matching is case-insensitive over the configured token lists; several
    surface forms of one word ("yes", "Yes") contribute to the same mass.
    Raises :class:`TokensAbsent` when neither word appears, which almost
    always signals a mis-templated prompt.
    """
    yes_set = {t.strip().lower() for t in yes_tokens}
    no_set = {t.strip().lower() for t in no_tokens}
    p_yes = p_no = 0.0
    tokens: list[tuple[str, float]] = []
    seen_yes = seen_no = False
    for token, logprob in top_logprobs:
        prob = min(1.0, math.exp(min(0.0, float(logprob))))
        tokens.append((token, prob))
        lowered = token.strip().lower()
        if lowered in yes_set:
            p_yes += prob
            seen_yes = True
        elif lowered in no_set:
            p_no += prob
            seen_no = True
    if not seen_yes and not seen_no:
        raise TokensAbsent(
            f"no yes/no token among top-{len(tokens)} answer tokens"
        )
    tokens.sort(key=lambda pair: -pair[1])
    total = p_yes + p_no
    if total > 1.0:  # logprobs are per-token; guard against server rounding
        p_yes, p_no = p_yes / total, p_no / total
    return TokenDistribution(p_yes=p_yes, p_no=p_no, top_tokens=tuple(tokens))


class _FrameCacheMixin:
    """Per-client embedding cache keyed by ``content_ref``.

    A frame that carries its own embedding, or whose reference was embedded
    before, never triggers a backend call; fresh embeddings are written back.
    """

    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT

    def __init__(self) -> None:
        self._cache: dict[str, np.ndarray] = {}

    def _embed_one(self, frame: FrameRecord) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def embed_frames(self, frames: Sequence[FrameRecord]) -> EmbeddingResult:
        if not frames:
            raise ValueError("frames must be nonempty")
        slots: list[np.ndarray | None] = []
        misses: list[tuple[int, FrameRecord]] = []
        for i, frame in enumerate(frames):
            if frame.embedding is not None:
                vec = normalize_rows(np.asarray([frame.embedding], dtype=float))[0]
                self._cache[frame.content_ref] = vec
                slots.append(vec)
            elif frame.content_ref in self._cache:
                slots.append(self._cache[frame.content_ref])
            else:
                slots.append(None)
                misses.append((i, frame))
        if misses:
            fetched = fan_out(
                lambda pair: self._embed_one(pair[1]), misses, self.max_in_flight
            )
            for (i, frame), vec in zip(misses, fetched):
                vec = normalize_rows(np.asarray([vec], dtype=float))[0]
                self._cache[frame.content_ref] = vec
                slots[i] = vec
        dims = {v.shape[0] for v in slots}
        if len(dims) != 1:
            raise DimensionMismatch(f"inconsistent embedding dims: {sorted(dims)}")
        return EmbeddingResult(vectors=np.stack(slots), dim=dims.pop())


# --- seeded deterministic mock -------------------------------------------------

_MOCK_VIEWS = ("temporal", "spatial", "causal", "object-level", "narrative")
_MOCK_NOUNS = ("street", "kitchen", "crowd", "river", "stadium", "workshop",
               "forest", "market", "bridge", "classroom")
_MOCK_VERBS = ("opening", "crossing", "assembling", "measuring", "chasing",
               "lifting", "pouring", "repairing")


class MockBackend(_FrameCacheMixin):
    """All four roles behind one seeded deterministic implementation.

    Every method derives a private RNG from a SHA-256 digest of the seed and
    the inputs, so outputs are stable across processes and thread schedules.
    Call counters are kept for tests that pin the number of backend hits.
    """

    def __init__(self, seed: int = 0, dim: int = 32) -> None:
        super().__init__()
        self.seed = seed
        self.dim = dim
        self.calls: dict[str, int] = {"embed_text": 0, "embed_frame": 0,
                                      "generate": 0, "score": 0}

    def _rng(self, *parts: object) -> np.random.Generator:
        digest = hashlib.sha256(
            "\x1f".join([str(self.seed), *map(str, parts)]).encode()
        ).digest()
        return np.random.default_rng(int.from_bytes(digest[:8], "big"))

    def _unit_vector(self, *parts: object) -> np.ndarray:
        vec = self._rng(*parts).standard_normal(self.dim)
        return vec / np.linalg.norm(vec)

    # TextEmbedder
    def embed_texts(self, texts: Sequence[str]) -> EmbeddingResult:
        if not texts or any(not t for t in texts):
            raise ValueError("texts must be a nonempty list of nonempty strings")
        self.calls["embed_text"] += 1
        vectors = np.stack([self._unit_vector("text", t) for t in texts])
        return EmbeddingResult(vectors=vectors, dim=self.dim)

    # FrameEmbedder
    def _embed_one(self, frame: FrameRecord) -> np.ndarray:
        self.calls["embed_frame"] += 1
        return self._unit_vector("image", frame.content_ref)

    # Generator
    def generate(self, messages: Sequence[Message]) -> GenerationResult:
        if not messages:
            raise ValueError("prompt messages must be nonempty")
        self.calls["generate"] += 1
        text = messages_text(messages)
        if '"entity"' in text:
            return GenerationResult(text=self._decomposition_for(text))
        if "ANSWER:" in text:
            return GenerationResult(text=self._qa_round_for(text))
        digest = hashlib.sha256(text.encode()).hexdigest()[:8]
        return GenerationResult(text=f"mock response {digest}")

    def _decomposition_for(self, prompt_text: str) -> str:
        rng = self._rng("decompose", prompt_text)
        question = ""
        for line in prompt_text.splitlines():
            if line.startswith("Question:"):
                question = line.removeprefix("Question:").strip()
                break
        noun = lambda: str(rng.choice(_MOCK_NOUNS))  # noqa: E731
        verb = lambda: str(rng.choice(_MOCK_VERBS))  # noqa: E731
        payload = {
            "entity": [question or f"a {noun()}"],
            "knowledge": [f"a wide shot of a {noun()} near a {noun()}"],
            "causal": [f"a person {verb()} something in a {noun()}"],
        }
        return json.dumps(payload)

    def _qa_round_for(self, prompt_text: str) -> str:
        rng = self._rng("qa", prompt_text)
        letters = [
            line.split(".", 1)[0].strip()
            for line in prompt_text.splitlines()
            if len(line) > 1 and line[1] == "." and line[0].isalpha() and line[0].isupper()
        ]
        if letters:
            answer = str(rng.choice(letters))
        else:
            answer = str(rng.choice(["yes", "no", "two", "a dog", "at night"]))
        view = str(rng.choice(_MOCK_VIEWS))
        return f"REASON: From the {view} view, the frames support this reading.\nANSWER: {answer}"

    # RelevanceScorer
    def score_relevance(
        self, frame: FrameRecord, query: Query, template_id: str
    ) -> TokenDistribution:
        self.calls["score"] += 1
        rng = self._rng("score", frame.index, frame.content_ref,
                        query.id, query.text, template_id)
        p_yes = float(rng.uniform(0.02, 0.95))
        p_no = float(rng.uniform(0.0, 1.0)) * (1.0 - p_yes)
        rest = 1.0 - p_yes - p_no
        tokens = sorted(
            [("Yes", p_yes), ("No", p_no), ("maybe", rest * 0.6), ("unclear", rest * 0.4)],
            key=lambda pair: -pair[1],
        )
        return TokenDistribution(p_yes=p_yes, p_no=p_no, top_tokens=tuple(tokens))


# --- HTTP clients --------------------------------------------------------------


class _HttpClient:
    """Transport shared by the role clients: POST JSON, retry with exponential
    backoff on transport errors and 5xx, map protocol errors to exceptions.

    Retries are safe because every endpoint is a pure inference call; a
    retried request changes no observable result.
    """

    def __init__(
        self,
        base_url: str,
        attempts: int = 3,
        backoff_s: float = 0.05,
        timeout_s: float = 60.0,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.attempts = attempts
        self.backoff_s = backoff_s
        self._sleep = sleep
        self._client = client or httpx.Client(timeout=timeout_s)

    def post(self, path: str, payload: dict) -> dict:
        last: Exception | None = None
        for attempt in range(self.attempts):
            if attempt:
                self._sleep(self.backoff_s * 2 ** (attempt - 1))
            try:
                response = self._client.post(self.base_url + path, json=payload)
            except httpx.HTTPError as exc:
                last = exc
                continue
            if response.status_code >= 500:
                last = BackendUnavailable(
                    f"{path} returned {response.status_code}"
                )
                continue
            return self._decode(path, response)
        raise BackendUnavailable(f"{path} failed after {self.attempts} attempts: {last}")

    def _decode(self, path: str, response: httpx.Response) -> dict:
        try:
            body = response.json()
        except json.JSONDecodeError:
            raise BackendUnavailable(f"{path} returned non-JSON body") from None
        error = body.get("error") if isinstance(body, dict) else None
        if response.status_code == 413 or (error or {}).get("type") == "context_too_long":
            raise ContextTooLong((error or {}).get("message", "prompt too long"))
        if response.status_code >= 400 or error:
            raise BackendUnavailable(
                f"{path} rejected request: {error or response.status_code}"
            )
        return body


class HttpTextEmbedder:
    def __init__(self, http: _HttpClient) -> None:
        self._http = http

    def embed_texts(self, texts: Sequence[str]) -> EmbeddingResult:
        if not texts or any(not t for t in texts):
            raise ValueError("texts must be a nonempty list of nonempty strings")
        body = self._http.post("/v1/embed_text", {"texts": list(texts)})
        vectors = np.asarray(body["vectors"], dtype=float)
        dim = int(body["dim"])
        if vectors.ndim != 2 or vectors.shape != (len(texts), dim):
            raise DimensionMismatch(
                f"server returned {vectors.shape}, expected ({len(texts)}, {dim})"
            )
        return EmbeddingResult(vectors=normalize_rows(vectors), dim=dim)


class HttpFrameEmbedder(_FrameCacheMixin):
    def __init__(self, http: _HttpClient, max_in_flight: int = DEFAULT_MAX_IN_FLIGHT) -> None:
        super().__init__()
        self._http = http
        self.max_in_flight = max_in_flight

    def _embed_one(self, frame: FrameRecord) -> np.ndarray:
        path = Path(frame.content_ref)
        try:
            blob = path.read_bytes()
        except OSError as exc:
            raise FrameUnreadable(f"cannot read frame {frame.content_ref!r}: {exc}") from None
        body = self._http.post(
            "/v1/embed_image",
            {"image_b64": base64.b64encode(blob).decode(), "ref": frame.content_ref},
        )
        return np.asarray(body["vector"], dtype=float)


class HttpGenerator:
    def __init__(self, http: _HttpClient, max_tokens: int | None = None) -> None:
        self._http = http
        self.max_tokens = max_tokens

    def generate(self, messages: Sequence[Message]) -> GenerationResult:
        if not messages:
            raise ValueError("prompt messages must be nonempty")
        payload: dict = {"messages": list(messages)}
        if self.max_tokens is not None:
            payload["max_tokens"] = self.max_tokens
        body = self._http.post("/v1/generate", payload)
        return GenerationResult(
            text=body.get("text", ""),
            finish_reason=FinishReason(body.get("finish_reason", "stop")),
        )


class HttpScorer:
    def __init__(
        self,
        http: _HttpClient,
        yes_tokens: Sequence[str] = DEFAULT_YES_TOKENS,
        no_tokens: Sequence[str] = DEFAULT_NO_TOKENS,
        top_k: int = 20,
    ) -> None:
        self._http = http
        self.yes_tokens = tuple(yes_tokens)
        self.no_tokens = tuple(no_tokens)
        self.top_k = top_k

    def score_relevance(
        self, frame: FrameRecord, query: Query, template_id: str
    ) -> TokenDistribution:
        from .templates import render_score_messages

        messages = render_score_messages(template_id, frame, query)
        body = self._http.post("/v1/score", {"messages": messages, "top_k": self.top_k})
        pairs = [(e["token"], float(e["logprob"])) for e in body.get("top_logprobs", [])]
        return extract_yes_no(pairs, self.yes_tokens, self.no_tokens)


# --- wiring --------------------------------------------------------------------


@dataclass
class Backends:
    """The four role clients a pipeline run needs."""

    text_embedder: TextEmbedder
    frame_embedder: FrameEmbedder
    generator: Generator
    scorer: RelevanceScorer
    mocks: dict[str, MockBackend] = field(default_factory=dict)


def make_backends(
    cfg,
    client: httpx.Client | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> Backends:
    """Build role clients from a :class:`PipelineConfig`.

    ``mock://<seed>`` URLs share one :class:`MockBackend` per seed so the
    frame-embedding cache behaves like a single server. The config seed is
    folded in, letting ``--seed`` vary runs without touching backend URLs.
    """
    mocks: dict[str, MockBackend] = {}

    def resolve(url: str, role: str):
        parsed = urlparse(url)
        if parsed.scheme == "mock":
            key = parsed.netloc or "0"
            if key not in mocks:
                mocks[key] = MockBackend(seed=int(key) + int(cfg.seed))
            return mocks[key]
        if parsed.scheme in ("http", "https"):
            http = _HttpClient(url, client=client, sleep=sleep)
            if role == "text":
                return HttpTextEmbedder(http)
            if role == "frame":
                return HttpFrameEmbedder(http, max_in_flight=cfg.max_in_flight)
            if role == "generate":
                return HttpGenerator(http)
            return HttpScorer(http, cfg.yes_tokens, cfg.no_tokens)
        raise BackendUnavailable(f"unsupported backend URL scheme: {url!r}")

    return Backends(
        text_embedder=resolve(cfg.backends.embed_text_url, "text"),
        frame_embedder=resolve(cfg.backends.embed_image_url, "frame"),
        generator=resolve(cfg.backends.generate_url, "generate"),
        scorer=resolve(cfg.backends.score_url, "score"),
        mocks=mocks,
    )
