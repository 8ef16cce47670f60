"""Versioned prompt-template assets.

Templates live under ``framerag/data`` as plain text, one file per version
(``decompose_v1``, ``relevance_v1``, ...). A template name containing a path
separator or ending in ``.txt`` is read from the filesystem instead, which is
how configs override the shipped prompts.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .core import Query


def load_template(name: str) -> str:
    if "/" in name or name.endswith(".txt"):
        return Path(name).read_text()
    ref = resources.files("framerag").joinpath(f"data/{name}.txt")
    if not ref.is_file():
        raise KeyError(f"unknown prompt template {name!r}")
    return ref.read_text()


def options_block(query: Query) -> str:
    """Lettered option lines (``A. ...``), or an empty string without options."""
    if not query.options:
        return ""
    lines = [f"{chr(ord('A') + i)}. {opt}" for i, opt in enumerate(query.options)]
    return "Options:\n" + "\n".join(lines)


def render_decompose_messages(template_name: str, query: Query) -> list[dict]:
    text = load_template(template_name).format(
        question=query.text, options_block=options_block(query)
    ).rstrip() + "\n"
    return [{"role": "user", "text": text}]


def render_score_messages(template_id: str, frame, query: Query) -> list[dict]:
    system = load_template(template_id).strip()
    user = query.text if not query.options else f"{query.text}\n{options_block(query)}"
    return [
        {"role": "system", "text": system},
        {"role": "user", "text": user, "images": [frame.content_ref]},
    ]
