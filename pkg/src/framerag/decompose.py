"""Hierarchical query decomposition.

A single generator call turns the query into three caption lists — entities
named outright, knowledge-expanded descriptions, and implied causal events —
that embed like image captions instead of like questions. Parsing is lenient;
when nothing usable comes back the raw query itself becomes the one caption,
so downstream similarity always has at least one caption to average over.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass

from .backends import Generator, Message
from .core import Query
from .errors import Unparseable
from .templates import render_decompose_messages

log = logging.getLogger(__name__)

MAX_CAPTIONS_PER_LEVEL = 5
MAX_CAPTION_WORDS = 64

_LEVELS = ("entity", "knowledge", "causal")


@dataclass(frozen=True, slots=True)
class CaptionSet:
    """The three caption levels. Order everywhere is entity, knowledge, causal."""

    entity: tuple[str, ...] = ()
    knowledge: tuple[str, ...] = ()
    causal: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for caption in self.all_captions():
            if not caption.strip():
                raise ValueError("captions must be nonempty")
            if len(caption.split()) > MAX_CAPTION_WORDS:
                raise ValueError(f"caption exceeds {MAX_CAPTION_WORDS} words")

    @property
    def total(self) -> int:
        return len(self.entity) + len(self.knowledge) + len(self.causal)

    def all_captions(self) -> list[str]:
        return [*self.entity, *self.knowledge, *self.causal]


def build_decomposition_prompt(
    query: Query, template_name: str = "decompose_v1"
) -> list[Message]:
    """One prompt covering all three levels, so decomposition costs one call."""
    if not query.text.strip():
        raise ValueError("query text must be nonempty")
    return render_decompose_messages(template_name, query)


def _first_json_object(text: str) -> dict | None:
    decoder = json.JSONDecoder()
    for start in range(len(text)):
        if text[start] != "{":
            continue
        try:
            obj, _ = decoder.raw_decode(text, start)
        except json.JSONDecodeError:
            continue
        if isinstance(obj, dict):
            return obj
    return None


def _labeled_lists(text: str) -> dict | None:
    """Fallback for generators that ignore the JSON instruction but still
    emit ``entity:`` / ``knowledge:`` / ``causal:`` sections with bullets."""
    found: dict[str, list[str]] = {}
    current: str | None = None
    for line in text.splitlines():
        stripped = line.strip()
        header = re.match(r"[-*\s]*\"?(entity|knowledge|causal)\"?\s*:\s*(.*)", stripped, re.I)
        if header:
            current = header.group(1).lower()
            found.setdefault(current, [])
            rest = header.group(2).strip()
            if rest:
                found[current].extend(p.strip() for p in rest.split(";"))
            continue
        if current and re.match(r"[-*•]\s+", stripped):
            found[current].append(re.sub(r"^[-*•]\s+", "", stripped))
    return found or None


def _clean_level(items: object) -> tuple[str, ...]:
    if not isinstance(items, (list, tuple)):
        return ()
    captions = []
    for item in items:
        if not isinstance(item, str) or not item.strip():
            continue
        words = item.strip().split()
        captions.append(" ".join(words[:MAX_CAPTION_WORDS]))
        if len(captions) == MAX_CAPTIONS_PER_LEVEL:
            break
    return tuple(captions)


def parse_decomposition(response: str) -> CaptionSet:
    """Extract the caption lists from a generator response.

    Missing levels become empty; whitespace-only captions are dropped; each
    level is truncated to :data:`MAX_CAPTIONS_PER_LEVEL` entries.
    """
    data = _first_json_object(response)
    if data is None:
        data = _labeled_lists(response)
    if data is None:
        raise Unparseable("no JSON block or labeled caption lists in response")
    return CaptionSet(**{level: _clean_level(data.get(level)) for level in _LEVELS})


def decompose_query(
    query: Query, generator: Generator, template_name: str = "decompose_v1"
) -> CaptionSet:
    """Build the prompt, call the generator once, and parse the caption levels.

    An unparseable or empty decomposition degrades to plain query-text
    retrieval: the raw query becomes the single entity caption.
    """
    prompt = build_decomposition_prompt(query, template_name)
    response = generator.generate(prompt)
    try:
        captions = parse_decomposition(response.text)
    except Unparseable:
        log.warning("decomposition unparseable for query %r; using raw query", query.id)
        return CaptionSet(entity=(query.text,))
    if captions.total == 0:
        log.warning("decomposition empty for query %r; using raw query", query.id)
        return CaptionSet(entity=(query.text,))
    return captions
