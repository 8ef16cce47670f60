"""End-to-end orchestration: decompose -> prefilter -> score -> retrieve ->
multi-view QA, with a JSON run report collecting every stage trace.

A stage failure stops the run but still yields a report, flagged incomplete
and carrying the failing stage and error; everything computed so far stays
in it. Under mock backends the whole report is a pure function of
(manifest, query, config), so two runs differ only in the ``meta`` block.
"""

from __future__ import annotations

import json
import logging
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from .backends import Backends, make_backends
from .core import FrameRecord, PipelineConfig, Query, config_to_dict, validate_config
from .costmodel import estimate_pipeline
from .decompose import decompose_query
from .errors import FrameragError
from .manifest import EvalItem, load_frame_manifest, uniform_candidates
from .multiview import canonicalize_answer, run_multiview
from .prefilter import prefilter
from .retrieval import retrieve
from .score import is_degenerate, relevance_score, score_frames

log = logging.getLogger(__name__)

REPORT_SCHEMA = "framerag.run_report.v1"


def _frame_dict(frame: FrameRecord) -> dict:
    return {
        "index": frame.index,
        "timestamp_s": frame.timestamp_s,
        "content_ref": frame.content_ref,
    }


def run_pipeline(
    frames: Sequence[FrameRecord],
    query: Query,
    cfg: PipelineConfig,
    backends: Backends | None = None,
) -> dict:
    """Run every stage over an already-loaded candidate list; returns the report."""
    validate_config(cfg)
    backends = backends or make_backends(cfg)
    started = time.monotonic()
    report: dict = {
        "schema": REPORT_SCHEMA,
        "meta": {"created_at": datetime.now(timezone.utc).isoformat()},
        "query": {"id": query.id, "text": query.text,
                  "options": list(query.options) if query.options else None},
        "config": config_to_dict(cfg),
        "stages": {},
        "retrieved": [],
        "answer": None,
        "cost": estimate_pipeline(cfg).to_dict(),
        "complete": False,
        "error": None,
    }
    stage = "decompose"
    try:
        captions = decompose_query(query, backends.generator, cfg.decompose_template)
        report["stages"]["decompose"] = {
            "entity": list(captions.entity),
            "knowledge": list(captions.knowledge),
            "causal": list(captions.causal),
        }

        stage = "prefilter"
        pre = prefilter(list(frames), captions, cfg, backends)
        report["stages"]["prefilter"] = pre.trace()

        stage = "score"
        dists = score_frames(
            pre.survivors, query, backends.scorer,
            template_id=cfg.score_template, max_in_flight=cfg.max_in_flight,
        )
        report["stages"]["score"] = {
            "frame_indices": [f.index for f in pre.survivors],
            "timestamps": [f.timestamp_s for f in pre.survivors],
            "p_yes": [d.p_yes for d in dists],
            "p_no": [d.p_no for d in dists],
            "score": [relevance_score(d, cfg.score_strategy) for d in dists],
            "degenerate": [int(is_degenerate(d)) for d in dists],
        }

        stage = "retrieval"
        result = retrieve(pre.survivors, dists, cfg)
        report["stages"]["retrieval"] = result.trace()
        report["retrieved"] = [_frame_dict(f) for f in result.retrieved]

        stage = "multiview"
        trace = run_multiview(result.retrieved, query, cfg, backends.generator)
        report["stages"]["multiview"] = trace.to_dict()
        report["answer"] = trace.final
        report["complete"] = True
    except FrameragError as exc:
        log.error("stage %s failed: %s", stage, exc)
        report["error"] = {
            "stage": stage,
            "type": type(exc).__name__,
            "message": str(exc),
        }
    report["meta"]["elapsed_s"] = round(time.monotonic() - started, 6)
    return report


def run_from_manifest(
    manifest_path: str | Path,
    query: Query,
    cfg: PipelineConfig,
    backends: Backends | None = None,
) -> dict:
    """Load candidates (uniformly subsampled to ``n_candidates``) and run."""
    frames = uniform_candidates(load_frame_manifest(manifest_path), cfg.n_candidates)
    return run_pipeline(frames, query, cfg, backends)


def report_to_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def write_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(report_to_json(report))


def evaluate_dataset(
    items: Sequence[EvalItem],
    cfg: PipelineConfig,
    parallel: int = 1,
) -> dict:
    """Run the pipeline per item and aggregate accuracy.

    Correctness is canonicalized string match against the gold answer. An
    item that errors out counts as incorrect; the summary records why. Each
    item gets its own backend clients, so items are order-independent and
    safe to run concurrently.
    """
    from .backends import fan_out

    if not items:
        raise FrameragError("evaluate_dataset requires at least one item")

    def run_item(item: EvalItem) -> dict:
        report = run_from_manifest(item.manifest_path, item.query, cfg, make_backends(cfg))
        answer = report.get("answer")
        correct = bool(
            report["complete"]
            and answer is not None
            and canonicalize_answer(answer) == canonicalize_answer(item.gold)
        )
        return {
            "id": item.id,
            "gold": item.gold,
            "answer": answer,
            "correct": correct,
            "complete": report["complete"],
            "error": report["error"],
            "total_tflops": report["cost"]["total_tflops"],
        }

    settled = fan_out(run_item, list(items), max_in_flight=max(1, parallel), settle=True)
    rows = []
    for item, (row, exc) in zip(items, settled):
        if exc is not None:
            log.error("item %s failed: %s", item.id, exc)
            row = {
                "id": item.id, "gold": item.gold, "answer": None, "correct": False,
                "complete": False,
                "error": {"stage": None, "type": type(exc).__name__, "message": str(exc)},
                "total_tflops": None,
            }
        rows.append(row)
    n_correct = sum(r["correct"] for r in rows)
    costs = [r["total_tflops"] for r in rows if r["total_tflops"] is not None]
    return {
        "schema": "framerag.eval_summary.v1",
        "n_items": len(rows),
        "n_correct": n_correct,
        "accuracy": n_correct / len(rows),
        "total_tflops": sum(costs),
        "items": rows,
    }
