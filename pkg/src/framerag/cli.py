"""Command-line entry points.

Subcommands: ``run`` (full pipeline over a frame manifest), ``eval``
(accuracy over a dataset manifest), ``report`` (plot-ready CSVs from a run
report), ``estimate-cost`` (analytic breakdown), and the debug helpers
``decompose`` and ``score``. Backend URLs come from the config file, the
``FRAMERAG_*_URL`` environment variables, or ``--backend-url`` (highest
precedence wins in that order).

Exit codes: 0 success, 2 configuration error, 3 backend error, 4 data error,
1 anything else.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .backends import make_backends
from .core import BackendEndpoints, PipelineConfig, Query, load_config
from .costmodel import estimate_pipeline, format_cost_table, load_profiles
from .decompose import decompose_query
from .errors import BackendError, ConfigError, DataError, FrameragError
from .manifest import load_dataset_manifest, load_frame_manifest, uniform_candidates
from .pipeline import evaluate_dataset, report_to_json, run_from_manifest, write_report
from .report import emit_report_files
from .score import is_degenerate, relevance_score, score_frames

log = logging.getLogger("framerag")

_ENV_URLS = {
    "embed_text_url": "FRAMERAG_EMBED_TEXT_URL",
    "embed_image_url": "FRAMERAG_EMBED_IMAGE_URL",
    "generate_url": "FRAMERAG_GENERATE_URL",
    "score_url": "FRAMERAG_SCORE_URL",
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--seed", type=int, help="seed folded into mock backends")
    parser.add_argument(
        "--backend-url",
        action="append",
        default=[],
        metavar="ROLE=URL",
        help="override one backend URL (roles: embed_text, embed_image, generate, score)",
    )
    parser.add_argument("-v", "--verbose", action="store_true")


def _query_from_args(args: argparse.Namespace) -> Query:
    options = tuple(args.option) if args.option else None
    return Query(text=args.query, options=options, id=args.query_id or "")


def _build_config(args: argparse.Namespace) -> PipelineConfig:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    cfg = load_config(args.config, overrides)
    urls = {
        field: os.environ[env] for field, env in _ENV_URLS.items() if env in os.environ
    }
    for item in getattr(args, "backend_url", []):
        role, _, url = item.partition("=")
        field = f"{role}_url"
        if not url or field not in _ENV_URLS:
            raise ConfigError(f"bad --backend-url {item!r}")
        urls[field] = url
    if urls:
        cfg = replace(cfg, backends=replace(cfg.backends, **urls))
    return cfg


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    report = run_from_manifest(args.manifest, _query_from_args(args), cfg)
    if args.out:
        write_report(report, args.out)
        log.info("report written to %s", args.out)
    else:
        sys.stdout.write(report_to_json(report))
    if not report["complete"]:
        raise FrameragError(
            f"run incomplete at stage {report['error']['stage']}: "
            f"{report['error']['message']}"
        )
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    items = load_dataset_manifest(args.dataset)
    summary = evaluate_dataset(items, cfg, parallel=args.parallel)
    text = json.dumps(summary, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(
        f"accuracy {summary['accuracy']:.3f} "
        f"({summary['n_correct']}/{summary['n_items']} correct, "
        f"{summary['total_tflops']:.1f} TFLOPs)\n"
    )
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    try:
        report = json.loads(Path(args.report).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot load run report: {exc}") from None
    paths = emit_report_files(report, args.out_dir, stem=Path(args.report).stem)
    for name, path in paths.items():
        sys.stdout.write(f"{name}: {path}\n")
    return 0


def _cmd_estimate_cost(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    profiles, baseline = load_profiles(args.profiles)
    breakdown = estimate_pipeline(cfg, profiles, baseline)
    if args.json:
        sys.stdout.write(json.dumps(breakdown.to_dict(), sort_keys=True, indent=2) + "\n")
    else:
        sys.stdout.write(format_cost_table(breakdown) + "\n")
    return 0


def _cmd_decompose(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    backends = make_backends(cfg)
    captions = decompose_query(_query_from_args(args), backends.generator,
                               cfg.decompose_template)
    payload = {
        "entity": list(captions.entity),
        "knowledge": list(captions.knowledge),
        "causal": list(captions.causal),
    }
    sys.stdout.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    backends = make_backends(cfg)
    frames = uniform_candidates(load_frame_manifest(args.manifest), cfg.n_candidates)
    query = _query_from_args(args)
    dists = score_frames(frames, query, backends.scorer,
                         template_id=cfg.score_template,
                         max_in_flight=cfg.max_in_flight)
    rows = [
        {
            "index": frame.index,
            "p_yes": dist.p_yes,
            "p_no": dist.p_no,
            "score": relevance_score(dist, cfg.score_strategy),
            "degenerate": int(is_degenerate(dist)),
        }
        for frame, dist in zip(frames, dists)
    ]
    sys.stdout.write(json.dumps(rows, sort_keys=True, indent=2) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="framerag",
        description="Frame retrieval-augmented video QA engine.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full pipeline over a frame manifest")
    run.add_argument("--manifest", required=True)
    run.add_argument("--query", required=True)
    run.add_argument("--option", action="append", help="answer option (repeatable)")
    run.add_argument("--query-id", default="")
    run.add_argument("--out", help="run report path (stdout when omitted)")
    _add_common(run)
    run.set_defaults(handler=_cmd_run)

    ev = sub.add_parser("eval", help="accuracy over a dataset manifest")
    ev.add_argument("--dataset", required=True)
    ev.add_argument("--parallel", type=int, default=4)
    ev.add_argument("--out", help="summary JSON path")
    _add_common(ev)
    ev.set_defaults(handler=_cmd_eval)

    rep = sub.add_parser("report", help="emit plot-ready CSVs from a run report")
    rep.add_argument("--report", required=True)
    rep.add_argument("--out-dir", default=".")
    rep.add_argument("-v", "--verbose", action="store_true")
    rep.set_defaults(handler=_cmd_report)

    cost = sub.add_parser("estimate-cost", help="analytic compute breakdown")
    cost.add_argument("--profiles", help="profile JSON (defaults to the shipped asset)")
    cost.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    _add_common(cost)
    cost.set_defaults(handler=_cmd_estimate_cost)

    dec = sub.add_parser("decompose", help="debug: show the caption decomposition")
    dec.add_argument("--query", required=True)
    dec.add_argument("--option", action="append")
    dec.add_argument("--query-id", default="")
    _add_common(dec)
    dec.set_defaults(handler=_cmd_decompose)

    sco = sub.add_parser("score", help="debug: per-frame relevance scores")
    sco.add_argument("--manifest", required=True)
    sco.add_argument("--query", required=True)
    sco.add_argument("--option", action="append")
    sco.add_argument("--query-id", default="")
    _add_common(sco)
    sco.set_defaults(handler=_cmd_score)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    except BackendError as exc:
        log.error("backend error: %s", exc)
        return 3
    except DataError as exc:
        log.error("data error: %s", exc)
        return 4
    except FrameragError as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
