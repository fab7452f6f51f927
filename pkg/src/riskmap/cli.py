"""Command-line pipeline: riskmap query | score | map | eval.

Exit codes: 0 success, 1 input/config error, 2 backend failure,
3 backend failure with partial outputs preserved.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .catalog import CatalogError, QuestionCatalog, default_catalog, load_catalog
from .evaluation import GroundTruthSet
from .gateway import (
    AnswerRecorder,
    MockOracleBackend,
    RecordedBackend,
    RemoteBackend,
)
from .osm import DEFAULT_MATCH_RADIUS_M, OsmParseError
from .pipeline import (
    InputError,
    load_manifests,
    run_eval,
    run_map,
    run_query,
    run_score,
)
from .risk import WeightConfig, WeightConfigError, load_weight_overrides

BACKEND_URL_ENV = "RISKMAP_BACKEND_URL"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # input errors exit 1, not argparse's 2
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="riskmap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    query = sub.add_parser("query", help="drive the question cascade per image")
    query.add_argument("--manifest", required=True, help="keyframe manifest JSON")
    query.add_argument("--catalog", help="question catalog JSON (default: shipped)")
    query.add_argument(
        "--backend", required=True, choices=("recorded", "mock", "remote")
    )
    query.add_argument("--answers", help="recorded-answers file (backend=recorded)")
    query.add_argument("--gt", help="ground-truth file (backend=mock)")
    query.add_argument("--backend-url", help=f"remote URL (or ${BACKEND_URL_ENV})")
    query.add_argument("--out", required=True, help="output directory")
    query.add_argument("--jobs", type=int, default=1, help="parallel images")
    query.add_argument("--force", action="store_true", help="redo finished images")
    query.add_argument(
        "--record", action="store_true", help="persist remote responses for replay"
    )
    query.add_argument(
        "--lenient", action="store_true", help="degrade backend failures to Unanswered"
    )

    score = sub.add_parser("score", help="compute per-image risks from sessions")
    score.add_argument("sessions", help="directory of session files")
    score.add_argument("--catalog", help="question catalog JSON (default: shipped)")
    score.add_argument("--weights", help="weight override JSON")
    score.add_argument("--out", required=True, help="risks output file")
    score.add_argument("--force", action="store_true", help="recompute existing output")

    map_cmd = sub.add_parser("map", help="render the risk event map")
    map_cmd.add_argument("risks", help="risks file from `riskmap score`")
    map_cmd.add_argument("--manifest", required=True, help="keyframe manifest JSON")
    map_cmd.add_argument("--osm", required=True, help="OSM XML extract")
    map_cmd.add_argument(
        "--radius", type=float, default=DEFAULT_MATCH_RADIUS_M, help="match radius, meters"
    )
    map_cmd.add_argument("--out", required=True, help="GeoJSON output file")
    map_cmd.add_argument("--force", action="store_true", help="recompute existing output")

    eval_cmd = sub.add_parser("eval", help="score predictions against ground truth")
    eval_cmd.add_argument("sessions", help="directory of predicted session files")
    eval_cmd.add_argument("--gt", required=True, help="ground-truth file")
    eval_cmd.add_argument("--catalog", help="question catalog JSON (default: shipped)")
    eval_cmd.add_argument("--weights", help="weight override JSON")
    eval_cmd.add_argument("--out", required=True, help="report output directory")
    eval_cmd.add_argument("--force", action="store_true", help="recompute existing output")

    return parser


def _load_catalog(path: str | None) -> QuestionCatalog:
    return load_catalog(path) if path else default_catalog()


def _load_weights(path: str | None) -> WeightConfig:
    return load_weight_overrides(path) if path else WeightConfig.default()


def _build_backend(args) -> tuple[object, AnswerRecorder | None]:
    if args.backend == "recorded":
        if not args.answers:
            raise UsageError("--backend recorded requires --answers")
        return RecordedBackend.from_file(args.answers), None
    if args.backend == "mock":
        if not args.gt:
            raise UsageError("--backend mock requires --gt")
        return MockOracleBackend(GroundTruthSet.from_file(args.gt).annotations()), None
    url = args.backend_url or os.environ.get(BACKEND_URL_ENV)
    if not url:
        raise UsageError(
            f"--backend remote requires --backend-url or ${BACKEND_URL_ENV}"
        )
    recorder = AnswerRecorder() if args.record else None
    return RemoteBackend(url, recorder=recorder), recorder


def _cmd_query(args) -> int:
    catalog = _load_catalog(args.catalog)
    manifests = load_manifests(args.manifest)
    backend, recorder = _build_backend(args)
    result = run_query(
        manifests,
        catalog,
        backend,
        args.out,
        jobs=args.jobs,
        force=args.force,
        lenient=args.lenient,
        recorder=recorder,
    )
    for failure in result.failures:
        print(f"error: {failure['image_id']}: {failure['error']}", file=sys.stderr)
    if result.failures:
        print(
            f"aborted: {len(result.written)} written, {len(result.failures)} failed "
            f"(partial outputs preserved in {args.out})",
            file=sys.stderr,
        )
        return 3 if (result.written or result.skipped) else 2
    print(f"query: {len(result.written)} written, {len(result.skipped)} skipped")
    return 0


def _skip_existing(args, output: Path) -> bool:
    if output.exists() and not args.force:
        print(f"{args.command}: {output} exists, skipping (use --force to redo)")
        return True
    return False


def _cmd_score(args) -> int:
    if _skip_existing(args, Path(args.out)):
        return 0
    catalog = _load_catalog(args.catalog)
    weights = _load_weights(args.weights)
    risks = run_score(args.sessions, catalog, weights, args.out)
    print(f"score: {len(risks)} images -> {args.out}")
    return 0


def _cmd_map(args) -> int:
    if _skip_existing(args, Path(args.out)):
        return 0
    manifests = load_manifests(args.manifest)
    try:
        osm_text = Path(args.osm).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read OSM file {args.osm}: {exc}") from exc
    summary = run_map(args.risks, manifests, osm_text, args.out, max_radius=args.radius)
    if summary["keyframes"] and not summary["matched_keyframes"]:
        print("warning: no keyframe matched a street segment", file=sys.stderr)
    counts = ", ".join(f"{k}={v}" for k, v in sorted(summary["segments"].items()))
    print(f"map: {counts} -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    if _skip_existing(args, Path(args.out) / "report.json"):
        return 0
    catalog = _load_catalog(args.catalog)
    weights = _load_weights(args.weights)
    doc = run_eval(args.sessions, args.gt, catalog, weights, args.out)
    print(
        f"eval: {doc['n_images']} images, {doc['n_questions_evaluated']} questions, "
        f"risk MAE {doc['mae_risk']} -> {args.out}"
    )
    return 0


_COMMANDS = {
    "query": _cmd_query,
    "score": _cmd_score,
    "map": _cmd_map,
    "eval": _cmd_eval,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InputError, CatalogError, WeightConfigError, OsmParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
