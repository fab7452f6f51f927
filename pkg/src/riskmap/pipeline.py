"""Run orchestration behind the CLI: manifests, staged commands, atomic files.

Each stage reads and writes plain JSON documents so any stage can be replaced
by hand-authored fixtures. Parallelism exists only across images; per-image
cascades are inherently sequential. All outputs are written atomically via
temp-and-rename and are byte-deterministic for identical inputs; the query log
(wall-clock latencies) is diagnostics and lives in a separate logs/ subtree.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path

from .catalog import (
    BinaryAnswer,
    QuerySession,
    QuestionCatalog,
    load_session,
    next_questions,
    record_answer,
    session_to_dict,
)
from .evaluation import GroundTruthSet, build_report, render_report_text, report_to_dict
from .eventmap import Keyframe, assemble_event_map, render_geojson, summarize
from .gateway import AnswerBackend, AnswerRecorder, GatewayError, PromptEnvelope, ask
from .geo import GpsPoint
from .osm import DEFAULT_MATCH_RADIUS_M, parse_osm
from .risk import (
    DEFAULT_THRESHOLDS,
    CategoryAnswers,
    RiskThresholds,
    WeightConfig,
    image_risk,
)


class InputError(ValueError):
    """Bad manifest/config/file content; maps to exit code 1."""


_IMAGE_ID = re.compile(r"^[A-Za-z0-9._-]+$")


@dataclass(frozen=True)
class ManifestImage:
    image_id: str
    source: str
    lat: float
    lon: float
    timestamp: float


@dataclass(frozen=True)
class SequenceManifest:
    sequence_id: str
    city: str
    continent: str
    images: tuple[ManifestImage, ...]

    def __post_init__(self) -> None:
        previous = None
        for image in self.images:
            if not _IMAGE_ID.match(image.image_id):
                raise InputError(
                    f"image id {image.image_id!r} is not filename-safe"
                )
            if previous is not None and image.timestamp < previous:
                raise InputError(
                    f"sequence {self.sequence_id!r}: timestamps must be non-decreasing"
                )
            previous = image.timestamp


def load_manifests(path: str | Path) -> list[SequenceManifest]:
    """Read {"sequences": [...]} (or a single sequence object)."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read manifest {path}: {exc}") from exc
    raw_sequences = doc.get("sequences") if isinstance(doc, dict) else None
    if raw_sequences is None:
        raw_sequences = [doc]
    manifests = []
    seen_ids: set[str] = set()
    for seq in raw_sequences:
        try:
            images = tuple(
                ManifestImage(
                    image_id=str(i["image_id"]),
                    source=str(i.get("path", i.get("source", ""))),
                    lat=float(i["lat"]),
                    lon=float(i["lon"]),
                    timestamp=float(i["timestamp"]),
                )
                for i in seq["images"]
            )
            manifest = SequenceManifest(
                sequence_id=str(seq["sequence_id"]),
                city=str(seq.get("city", "")),
                continent=str(seq.get("continent", "")),
                images=images,
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"bad manifest entry: {exc}") from exc
        for image in manifest.images:
            if image.image_id in seen_ids:
                raise InputError(f"duplicate image id {image.image_id!r} in manifest")
            seen_ids.add(image.image_id)
        manifests.append(manifest)
    return manifests


def keyframes_from_manifests(manifests: list[SequenceManifest]) -> list[Keyframe]:
    return [
        Keyframe(
            image_id=image.image_id,
            position=GpsPoint(image.lat, image.lon),
            timestamp=image.timestamp,
            sequence_id=manifest.sequence_id,
        )
        for manifest in manifests
        for image in manifest.images
    ]


def write_text_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_json_atomic(path: Path, doc: object) -> None:
    write_text_atomic(path, json.dumps(doc, sort_keys=True, indent=2) + "\n")


# --- query stage ---------------------------------------------------------------


@dataclass
class QueryResult:
    written: list[str]
    skipped: list[str]
    failures: list[dict]

    @property
    def ok(self) -> bool:
        return not self.failures


def drive_session(
    image: ManifestImage,
    catalog: QuestionCatalog,
    backend: AnswerBackend,
    lenient: bool = False,
) -> tuple[QuerySession, list[dict]]:
    """Run the cascade to completion for one image: repeatedly answer every
    pending question until none unlock."""
    send_bytes = backend.kind == "remote" and image.source and Path(image.source).is_file()
    image_bytes = Path(image.source).read_bytes() if send_bytes else None
    session = QuerySession(image.image_id, {}, catalog.version)
    log: list[dict] = []
    while True:
        pending = next_questions(session, catalog)
        if not pending:
            return session, log
        for qid in pending:
            envelope = PromptEnvelope(
                question_text=catalog.get(qid).text,
                image_ref=image.image_id,
                image_bytes=image_bytes,
            )
            raw, answer = ask(backend, envelope, qid, lenient=lenient)
            session = record_answer(session, qid, answer, catalog)
            log.append(
                {
                    "image_id": image.image_id,
                    "question_id": qid,
                    "answer": answer.value,
                    "latency_ms": raw.latency_ms,
                }
            )


def run_query(
    manifests: list[SequenceManifest],
    catalog: QuestionCatalog,
    backend: AnswerBackend,
    out_dir: str | Path,
    jobs: int = 1,
    force: bool = False,
    lenient: bool = False,
    recorder: AnswerRecorder | None = None,
) -> QueryResult:
    """Write one session file per image under out_dir/sessions.

    Existing session files are skipped unless force is set. A backend failure
    stops the run; finished session files are preserved and the missing keys
    are listed in out_dir/partial_run.json.
    """
    out = Path(out_dir)
    sessions_dir = out / "sessions"
    sessions_dir.mkdir(parents=True, exist_ok=True)
    images = [image for manifest in manifests for image in manifest.images]

    result = QueryResult(written=[], skipped=[], failures=[])
    log_entries: dict[str, list[dict]] = {}

    def work(image: ManifestImage) -> tuple[str, list[dict]]:
        session, log = drive_session(image, catalog, backend, lenient=lenient)
        write_json_atomic(sessions_dir / f"{image.image_id}.json", session_to_dict(session))
        return image.image_id, log

    todo = []
    for image in images:
        if not force and (sessions_dir / f"{image.image_id}.json").is_file():
            result.skipped.append(image.image_id)
        else:
            todo.append(image)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        futures = {pool.submit(work, image): image for image in todo}
        for future in as_completed(futures):
            image = futures[future]
            try:
                image_id, log = future.result()
            except GatewayError as exc:
                result.failures.append(
                    {"image_id": image.image_id, "error": f"{type(exc).__name__}: {exc}"}
                )
                for pending_future in futures:
                    pending_future.cancel()
            else:
                result.written.append(image_id)
                log_entries[image_id] = log

    result.written.sort()
    result.skipped.sort()
    result.failures.sort(key=lambda f: f["image_id"])

    lines = [
        json.dumps(entry, sort_keys=True)
        for image_id in sorted(log_entries)
        for entry in log_entries[image_id]
    ]
    write_text_atomic(out / "logs" / "query_log.jsonl", "\n".join(lines) + ("\n" if lines else ""))
    if recorder is not None:
        recorder.save(out / "recorded_answers.json")
    marker = out / "partial_run.json"
    if result.failures:
        write_json_atomic(
            marker,
            {"status": "partial", "missing": result.failures},
        )
    elif marker.is_file():
        marker.unlink()  # a resumed run completed; the old abort marker is stale
    return result


# --- score stage ---------------------------------------------------------------


def load_sessions_dir(path: str | Path, catalog: QuestionCatalog) -> dict[str, QuerySession]:
    sessions_dir = Path(path)
    if not sessions_dir.is_dir():
        raise InputError(f"sessions directory {sessions_dir} does not exist")
    sessions: dict[str, QuerySession] = {}
    for file in sorted(sessions_dir.glob("*.json")):
        try:
            session = load_session(file)
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise InputError(f"bad session file {file.name}: {exc}") from exc
        if session.catalog_version != catalog.version:
            raise InputError(
                f"session {file.name} uses catalog {session.catalog_version!r}, "
                f"expected {catalog.version!r}"
            )
        sessions[session.image_id] = session
    return sessions


def run_score(
    sessions_dir: str | Path,
    catalog: QuestionCatalog,
    weights: WeightConfig,
    out_path: str | Path,
) -> dict[str, float]:
    """Write the flat {image_id: risk} document for a directory of sessions."""
    sessions = load_sessions_dir(sessions_dir, catalog)
    risks = {
        image_id: image_risk(CategoryAnswers.from_session(session, catalog), weights)
        for image_id, session in sessions.items()
    }
    write_json_atomic(Path(out_path), risks)
    return risks


# --- map stage -----------------------------------------------------------------


def run_map(
    risks_path: str | Path,
    manifests: list[SequenceManifest],
    osm_text: str,
    out_path: str | Path,
    max_radius: float = DEFAULT_MATCH_RADIUS_M,
    thresholds: RiskThresholds = DEFAULT_THRESHOLDS,
) -> dict:
    """Render the GeoJSON event map plus a category-count summary."""
    try:
        risks = json.loads(Path(risks_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read risks file {risks_path}: {exc}") from exc
    if not isinstance(risks, dict):
        raise InputError("risks file must map image ids to numbers")
    keyframes = keyframes_from_manifests(manifests)
    graph = parse_osm(osm_text)
    try:
        event_map = assemble_event_map(
            keyframes,
            {k: float(v) for k, v in risks.items()},
            graph,
            max_radius,
            thresholds=thresholds,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    out = Path(out_path)
    write_text_atomic(out, render_geojson(event_map) + "\n")
    summary = summarize(event_map)
    write_json_atomic(out.with_suffix(out.suffix + ".summary.json"), summary)
    return summary


# --- eval stage ----------------------------------------------------------------


def run_eval(
    sessions_dir: str | Path,
    gt_path: str | Path,
    catalog: QuestionCatalog,
    weights: WeightConfig,
    out_dir: str | Path,
) -> dict:
    """Write report.json and report.txt for predictions versus ground truth."""
    try:
        gt = GroundTruthSet.from_file(gt_path)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise InputError(f"cannot read ground truth {gt_path}: {exc}") from exc
    if gt.catalog_version != catalog.version:
        raise InputError(
            f"ground truth uses catalog {gt.catalog_version!r}, expected {catalog.version!r}"
        )
    preds = load_sessions_dir(sessions_dir, catalog)
    try:
        report = build_report(gt, preds, catalog, weights)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    out = Path(out_dir)
    doc = report_to_dict(report)
    write_json_atomic(out / "report.json", doc)
    write_text_atomic(out / "report.txt", render_report_text(report))
    return doc
