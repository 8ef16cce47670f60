"""JSON Lines manifests.

A frame manifest lists one object per line: ``{"index", "timestamp_s",
"path", "embedding"?}``. A dataset manifest lists evaluation items:
``{"id", "manifest", "query", "options"?, "gold"}``, where ``manifest``
points at a frame manifest (relative paths resolve against the dataset
file). Frames arrive as a manifest of images; video decoding is someone
else's job.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import FrameRecord, Query
from .errors import DataError, EmptyDataset


def _parse_lines(path: Path) -> list[tuple[int, dict]]:
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from None
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from None
        if not isinstance(obj, dict):
            raise DataError(f"{path}:{lineno}: expected a JSON object")
        rows.append((lineno, obj))
    return rows


def load_frame_manifest(path: str | Path) -> list[FrameRecord]:
    path = Path(path)
    frames: list[FrameRecord] = []
    for lineno, obj in _parse_lines(path):
        try:
            embedding = obj.get("embedding")
            frames.append(
                FrameRecord(
                    index=int(obj["index"]),
                    timestamp_s=float(obj["timestamp_s"]),
                    content_ref=str(obj["path"]),
                    embedding=tuple(float(x) for x in embedding) if embedding else None,
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: bad frame record: {exc}") from None
    if not frames:
        raise DataError(f"{path}: empty frame manifest")
    for previous, current in zip(frames, frames[1:]):
        if current.index <= previous.index or current.timestamp_s <= previous.timestamp_s:
            raise DataError(
                f"{path}: frame indices and timestamps must be strictly increasing "
                f"(violated at index {current.index})"
            )
    return frames


def write_frame_manifest(path: str | Path, frames: Sequence[FrameRecord]) -> None:
    lines = []
    for frame in frames:
        obj: dict = {
            "index": frame.index,
            "timestamp_s": frame.timestamp_s,
            "path": frame.content_ref,
        }
        if frame.embedding is not None:
            obj["embedding"] = list(frame.embedding)
        lines.append(json.dumps(obj, sort_keys=True))
    Path(path).write_text("\n".join(lines) + "\n")


def uniform_candidates(frames: Sequence[FrameRecord], n: int) -> list[FrameRecord]:
    """Evenly spaced pick of ``n`` candidates; identity when already short enough."""
    if n < 1:
        raise ValueError("candidate count must be positive")
    if len(frames) <= n:
        return list(frames)
    picks = np.round(np.linspace(0, len(frames) - 1, n)).astype(int)
    return [frames[i] for i in picks]


def synthetic_frames(n: int, fps: float = 1.0, prefix: str = "video") -> list[FrameRecord]:
    """A placeholder manifest for demos and mock runs; refs never touch disk."""
    return [
        FrameRecord(index=i, timestamp_s=i / fps, content_ref=f"{prefix}/frame_{i:05d}.jpg")
        for i in range(n)
    ]


@dataclass(frozen=True, slots=True)
class EvalItem:
    id: str
    manifest_path: Path
    query: Query
    gold: str


def load_dataset_manifest(path: str | Path) -> list[EvalItem]:
    path = Path(path)
    items: list[EvalItem] = []
    for lineno, obj in _parse_lines(path):
        try:
            options = obj.get("options")
            item_id = str(obj.get("id", f"item-{lineno}"))
            items.append(
                EvalItem(
                    id=item_id,
                    manifest_path=(path.parent / obj["manifest"]).resolve(),
                    query=Query(
                        text=str(obj["query"]),
                        options=tuple(options) if options else None,
                        id=item_id,
                    ),
                    gold=str(obj["gold"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: bad dataset item: {exc}") from None
    if not items:
        raise EmptyDataset(f"{path}: dataset manifest holds no items")
    return items
