"""Evaluation against human ground truth: conditional alignment, binary
metrics, risk MAE, and disaggregated reports.

Follow-up questions are scored only where the ground truth actually answered
them, so a false-positive Level-1 prediction cannot cascade extra error rows
into the tables. A predicted Unanswered counts as a negative prediction: a
skipped hazard question registers as a miss when the hazard exists.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .catalog import (
    BinaryAnswer,
    CatalogVersionError,
    HazardCategory,
    QuerySession,
    QuestionCatalog,
)
from .risk import CategoryAnswers, WeightConfig, image_risk

AlignedPair = tuple[str, BinaryAnswer, BinaryAnswer]


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp,
            self.fp + other.fp,
            self.fn + other.fn,
            self.tn + other.tn,
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class MetricSet:
    """Five binary metrics; None marks a zero-denominator (never silently 0)."""

    accuracy: float | None
    precision: float | None
    recall: float | None
    specificity: float | None
    f1: float | None


def align_pairs(
    gt: QuerySession, pred: QuerySession, catalog: QuestionCatalog
) -> list[AlignedPair]:
    """Pair ground-truth and predicted answers question by question.

    All Level-1 questions are included; a Level-2/3 question only when the
    ground truth holds a Yes/No for it. Predictions absent for an included
    question count as Unanswered.
    """
    if gt.catalog_version != pred.catalog_version:
        raise CatalogVersionError(
            f"ground truth ({gt.catalog_version!r}) and prediction "
            f"({pred.catalog_version!r}) use different catalogs"
        )
    if gt.catalog_version != catalog.version:
        raise CatalogVersionError(
            f"sessions use catalog {gt.catalog_version!r}, not {catalog.version!r}"
        )
    pairs: list[AlignedPair] = []
    for q in catalog.questions:
        gt_answer = gt.answers.get(q.id, BinaryAnswer.UNANSWERED)
        if q.level > 1 and gt_answer is BinaryAnswer.UNANSWERED:
            continue
        pairs.append((q.id, gt_answer, pred.answers.get(q.id, BinaryAnswer.UNANSWERED)))
    return pairs


def confusion(pairs: list[AlignedPair]) -> ConfusionCounts:
    """Count with Yes as the positive class.

    Predicted Unanswered is a negative prediction; pairs whose ground truth is
    Unanswered are excluded entirely.
    """
    tp = fp = fn = tn = 0
    for _, gt_answer, pred_answer in pairs:
        if gt_answer is BinaryAnswer.UNANSWERED:
            continue
        predicted_yes = pred_answer is BinaryAnswer.YES
        if gt_answer is BinaryAnswer.YES:
            if predicted_yes:
                tp += 1
            else:
                fn += 1
        else:
            if predicted_yes:
                fp += 1
            else:
                tn += 1
    return ConfusionCounts(tp, fp, fn, tn)


def _ratio(numerator: int, denominator: int) -> float | None:
    return numerator / denominator if denominator else None


def metrics(c: ConfusionCounts) -> MetricSet:
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricSet(
        accuracy=_ratio(c.tp + c.tn, c.total),
        precision=precision,
        recall=recall,
        specificity=_ratio(c.tn, c.tn + c.fp),
        f1=f1,
    )


def mae_risk(gt_risks: list[float], pred_risks: list[float]) -> float:
    """Mean absolute deviation between aligned risk lists."""
    if len(gt_risks) != len(pred_risks):
        raise ValueError(
            f"risk lists differ in length: {len(gt_risks)} vs {len(pred_risks)}"
        )
    if not gt_risks:
        raise ValueError("mae_risk needs at least one image")
    return sum(abs(g - p) for g, p in zip(gt_risks, pred_risks)) / len(gt_risks)


# --- ground-truth file -------------------------------------------------------
#
# {"catalog_version": str,
#  "images": [{"image_id", "city", "continent", "sequence_id", "answers": {...}}]}


@dataclass(frozen=True)
class GroundTruthImage:
    image_id: str
    city: str
    continent: str
    sequence_id: str
    session: QuerySession


@dataclass(frozen=True)
class GroundTruthSet:
    catalog_version: str
    images: tuple[GroundTruthImage, ...]

    @classmethod
    def from_file(cls, path: str | Path) -> "GroundTruthSet":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        version = str(doc["catalog_version"])
        images = []
        for entry in doc["images"]:
            answers = {
                qid: BinaryAnswer(v) for qid, v in entry.get("answers", {}).items()
            }
            images.append(
                GroundTruthImage(
                    image_id=str(entry["image_id"]),
                    city=str(entry.get("city", "")),
                    continent=str(entry.get("continent", "")),
                    sequence_id=str(entry.get("sequence_id", "")),
                    session=QuerySession(str(entry["image_id"]), answers, version),
                )
            )
        return cls(catalog_version=version, images=tuple(images))

    def validate_cascades(self, catalog: QuestionCatalog) -> None:
        """Reject annotations holding an unlocked-follow-up violation."""
        for image in self.images:
            for qid, answer in image.session.answers.items():
                question = catalog.get(qid)
                if question.level == 1 or answer is BinaryAnswer.UNANSWERED:
                    continue
                parent_answer = image.session.answers.get(question.parent)
                if parent_answer is not question.trigger:
                    raise ValueError(
                        f"image {image.image_id!r}: answer for {qid!r} without "
                        f"parent {question.parent!r} = {question.trigger.value!r}"
                    )

    def annotations(self) -> dict[str, dict[str, BinaryAnswer]]:
        """Per-image answer maps, e.g. to feed a mock-oracle backend."""
        return {img.image_id: dict(img.session.answers) for img in self.images}


@dataclass(frozen=True)
class EvalReport:
    overall: MetricSet
    per_category: dict[HazardCategory, MetricSet]
    per_continent: dict[str, MetricSet]
    mae_risk: float
    n_images: int
    n_questions_evaluated: int


def build_report(
    gt: GroundTruthSet,
    preds: dict[str, QuerySession],
    catalog: QuestionCatalog,
    weights: WeightConfig,
) -> EvalReport:
    """Overall, per-category and per-continent metrics plus the risk MAE.

    Per-category tables use Level-1 pairs only; Level-2/3 accuracy folds into
    the overall and per-continent numbers. Ground-truth images missing from
    preds are scored against an empty (all-Unanswered) prediction session.
    """
    if not gt.images:
        raise ValueError("ground-truth set is empty")
    known = {img.image_id for img in gt.images}
    unknown = set(preds) - known
    if unknown:
        raise ValueError(f"predictions for unknown image(s): {', '.join(sorted(unknown))}")
    gt.validate_cascades(catalog)

    level1_category = {q.id: q.category for q in catalog.level1_questions()}
    overall = ConfusionCounts()
    per_category = {c: ConfusionCounts() for c in HazardCategory}
    per_continent: dict[str, ConfusionCounts] = {}
    gt_risks: list[float] = []
    pred_risks: list[float] = []

    for image in gt.images:
        pred = preds.get(
            image.image_id, QuerySession(image.image_id, {}, gt.catalog_version)
        )
        pairs = align_pairs(image.session, pred, catalog)
        counts = confusion(pairs)
        overall = overall + counts
        per_continent[image.continent] = (
            per_continent.get(image.continent, ConfusionCounts()) + counts
        )
        for qid, gt_answer, pred_answer in pairs:
            category = level1_category.get(qid)
            if category is not None:
                per_category[category] = per_category[category] + confusion(
                    [(qid, gt_answer, pred_answer)]
                )
        gt_risks.append(image_risk(CategoryAnswers.from_session(image.session, catalog), weights))
        pred_risks.append(image_risk(CategoryAnswers.from_session(pred, catalog), weights))

    return EvalReport(
        overall=metrics(overall),
        per_category={c: metrics(per_category[c]) for c in HazardCategory},
        per_continent={
            continent: metrics(counts)
            for continent, counts in sorted(per_continent.items())
        },
        mae_risk=mae_risk(gt_risks, pred_risks),
        n_images=len(gt.images),
        n_questions_evaluated=overall.total,
    )


# --- report serialization ----------------------------------------------------


def _round4(value: float | None) -> float | None:
    return None if value is None else round(value, 4)


def _metric_dict(m: MetricSet) -> dict:
    return {
        "accuracy": _round4(m.accuracy),
        "precision": _round4(m.precision),
        "recall": _round4(m.recall),
        "specificity": _round4(m.specificity),
        "f1": _round4(m.f1),
    }


def report_to_dict(report: EvalReport) -> dict:
    return {
        "n_images": report.n_images,
        "n_questions_evaluated": report.n_questions_evaluated,
        "mae_risk": _round4(report.mae_risk),
        "overall": _metric_dict(report.overall),
        "per_category": {
            c.value: _metric_dict(report.per_category[c]) for c in HazardCategory
        },
        "per_continent": {
            continent: _metric_dict(m) for continent, m in report.per_continent.items()
        },
    }


_COLUMNS = ("accuracy", "precision", "recall", "specificity", "f1")


def _format_row(label: str, m: MetricSet) -> str:
    cells = []
    for name in _COLUMNS:
        value = getattr(m, name)
        cells.append(f"{value:.4f}" if value is not None else "   n/a")
    return f"{label:<16}" + "  ".join(f"{c:>8}" for c in cells)


def render_report_text(report: EvalReport) -> str:
    header = f"{'':<16}" + "  ".join(f"{name:>8}" for name in _COLUMNS)
    lines = [
        f"images evaluated : {report.n_images}",
        f"questions scored : {report.n_questions_evaluated}",
        f"risk MAE         : {report.mae_risk:.4f}",
        "",
        "overall",
        header,
        _format_row("all questions", report.overall),
        "",
        "by hazard category (level-1 only)",
        header,
    ]
    for category in HazardCategory:
        lines.append(_format_row(category.value, report.per_category[category]))
    lines += ["", "by continent", header]
    for continent, m in report.per_continent.items():
        lines.append(_format_row(continent or "(none)", m))
    return "\n".join(lines) + "\n"
