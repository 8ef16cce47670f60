"""Plot-ready files from a run report.

``frames.csv`` carries one row per scored frame with the per-frame token
probabilities, the scalar score, and two marker columns: the frames the
grouped sampler retrieved and the frames a plain Top-K would have taken.
Plotting score against the markers reproduces the coverage contrast between
the two selection rules. ``cost.csv`` is the stage cost breakdown.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .errors import IncompleteReport


def _require_stages(report: dict, names: tuple[str, ...]) -> None:
    if not isinstance(report, dict) or "stages" not in report:
        raise IncompleteReport("not a run report")
    missing = [name for name in names if name not in report["stages"]]
    if missing:
        raise IncompleteReport(f"run report lacks stages: {missing}")


def frame_rows(report: dict) -> list[dict]:
    """One dict per scored frame, with ``retrieved`` and ``topk`` markers."""
    _require_stages(report, ("score", "retrieval"))
    score = report["stages"]["score"]
    retrieval = report["stages"]["retrieval"]
    retrieved = set(retrieval["selected_positions"])
    topk = set(retrieval["topk_positions"])
    rows = []
    for position, frame_index in enumerate(score["frame_indices"]):
        rows.append(
            {
                "position": position,
                "frame_index": frame_index,
                "timestamp_s": score["timestamps"][position],
                "p_yes": score["p_yes"][position],
                "p_no": score["p_no"][position],
                "score": score["score"][position],
                "degenerate": score["degenerate"][position],
                "retrieved": int(position in retrieved),
                "topk": int(position in topk),
            }
        )
    return rows


def emit_report_files(report: dict, out_dir: str | Path, stem: str = "report") -> dict:
    """Write ``<stem>_frames.csv`` and ``<stem>_cost.csv``; returns the paths."""
    rows = frame_rows(report)
    if "cost" not in report:
        raise IncompleteReport("run report lacks the cost estimate")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    frames_path = out_dir / f"{stem}_frames.csv"
    with frames_path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)

    cost_path = out_dir / f"{stem}_cost.csv"
    with cost_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["item", "value"])
        for key, value in report["cost"].items():
            writer.writerow([key, value])

    return {"frames_csv": frames_path, "cost_csv": cost_path}
