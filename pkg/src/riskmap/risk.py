"""Weighted risk scoring: image risk, segment aggregation, classification.

An image's risk is the clamped weighted sum of its Level-1 answer
coefficients, normalized by the total weight mass, so it always lands in
[0, 1]. Segments take the maximum risk of their contributing images
(worst-case aggregation), then discretize into four categories.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

from .catalog import BinaryAnswer, HazardCategory, QuerySession, QuestionCatalog


class Tier(Enum):
    CRITICAL = "critical"
    HIGH = "high"
    LOW = "low"


TIER_WEIGHTS: dict[Tier, float] = {
    Tier.CRITICAL: 1.0,
    Tier.HIGH: 0.6,
    Tier.LOW: 0.3,
}

DEFAULT_TIERS: dict[HazardCategory, Tier] = {
    HazardCategory.CONSTRUCTION: Tier.CRITICAL,
    HazardCategory.SURFACE: Tier.CRITICAL,
    HazardCategory.NON_SIDEWALK: Tier.CRITICAL,
    HazardCategory.CROSSINGS: Tier.HIGH,
    HazardCategory.STAIRS: Tier.HIGH,
    HazardCategory.OBSTACLES: Tier.HIGH,
    HazardCategory.CROWDING: Tier.LOW,
    HazardCategory.VEHICLES: Tier.LOW,
}


class WeightConfigError(ValueError):
    """Raised for a weight table that violates the positivity contract."""


class NoObservationsError(ValueError):
    """Raised when aggregating an empty set of image risks."""


@dataclass(frozen=True)
class WeightConfig:
    """Per-category weights plus the tier each category belongs to."""

    weights: Mapping[HazardCategory, float]
    tiers: Mapping[HazardCategory, Tier]

    def __post_init__(self) -> None:
        for category in HazardCategory:
            if category not in self.weights:
                raise WeightConfigError(f"missing weight for {category.value!r}")
            if not self.weights[category] > 0:
                raise WeightConfigError(
                    f"weight for {category.value!r} must be strictly positive, "
                    f"got {self.weights[category]}"
                )

    @property
    def total_weight(self) -> float:
        return sum(self.weights[c] for c in HazardCategory)

    @classmethod
    def default(cls) -> "WeightConfig":
        return cls(
            weights={c: TIER_WEIGHTS[t] for c, t in DEFAULT_TIERS.items()},
            tiers=dict(DEFAULT_TIERS),
        )

    def with_overrides(self, overrides: Mapping[str, float]) -> "WeightConfig":
        """New config with named categories re-weighted. Tiers are kept."""
        weights = {c: self.weights[c] for c in HazardCategory}
        for name, value in overrides.items():
            try:
                category = HazardCategory(name)
            except ValueError:
                raise WeightConfigError(f"unknown hazard category {name!r}") from None
            if not isinstance(value, (int, float)) or not value > 0:
                raise WeightConfigError(
                    f"weight for {name!r} must be strictly positive, got {value!r}"
                )
            weights[category] = float(value)
        return WeightConfig(weights=weights, tiers=dict(self.tiers))


def load_weight_overrides(path: str | Path) -> WeightConfig:
    """Default weights overridden by a {category name: weight} JSON document."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise WeightConfigError("weight override file must be a JSON object")
    return WeightConfig.default().with_overrides(doc)


@dataclass(frozen=True)
class CategoryAnswers:
    """The Level-1 answer of every hazard category for a single image."""

    answers: Mapping[HazardCategory, BinaryAnswer]

    def __post_init__(self) -> None:
        for category in HazardCategory:
            if category not in self.answers:
                raise ValueError(f"missing answer for category {category.value!r}")
        if len(self.answers) != len(HazardCategory):
            raise ValueError("answers must cover exactly the hazard categories")

    def __len__(self) -> int:
        return len(self.answers)

    def __getitem__(self, category: HazardCategory) -> BinaryAnswer:
        return self.answers[category]

    @classmethod
    def from_session(
        cls, session: QuerySession, catalog: QuestionCatalog
    ) -> "CategoryAnswers":
        """Level-1 answers of a session; questions without an answer count as Unanswered."""
        answers = {}
        for q in catalog.level1_questions():
            answers[q.category] = session.answers.get(q.id, BinaryAnswer.UNANSWERED)
        return cls(answers=answers)


def answer_coefficient(answer: BinaryAnswer, q_count: int) -> float:
    """Penalty-reward coefficient: Yes -> 1, No -> -1/q_count, Unanswered -> 0."""
    if q_count < 1:
        raise ValueError(f"q_count must be >= 1, got {q_count}")
    if answer is BinaryAnswer.YES:
        return 1.0
    if answer is BinaryAnswer.NO:
        return -1.0 / q_count
    return 0.0


def image_risk(answers: CategoryAnswers, weights: WeightConfig) -> float:
    """Normalized weighted risk of one image, clamped into [0, 1].

    max(0, sum_i w_i * x_i) / sum_i w_i, where x_i is the answer coefficient
    with q_count equal to the number of Level-1 questions. Categories are
    summed in enum order, so the result is independent of mapping order.
    """
    q_count = len(answers)
    numerator = 0.0
    total = 0.0
    for category in HazardCategory:
        w = weights.weights[category]
        numerator += w * answer_coefficient(answers[category], q_count)
        total += w
    return max(0.0, numerator) / total


@dataclass(frozen=True)
class SegmentRisk:
    """Worst-case aggregate over the images matched to one street segment."""

    segment_id: str
    value: float
    contributing_images: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.contributing_images:
            raise NoObservationsError(f"segment {self.segment_id!r} has no contributors")
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"risk {self.value} outside [0, 1]")


def segment_risk(
    segment_id: str, image_risks: Sequence[tuple[str, float]]
) -> SegmentRisk:
    """Maximum risk among a segment's images; callers map empty input to Unobserved."""
    if not image_risks:
        raise NoObservationsError("no image risks to aggregate")
    return SegmentRisk(
        segment_id=segment_id,
        value=max(r for _, r in image_risks),
        contributing_images=tuple(image_id for image_id, _ in image_risks),
    )


class RiskCategory(Enum):
    SAFE = "safe"
    CAUTION = "caution"
    DANGER = "danger"
    HIGH_RISK = "high_risk"
    UNOBSERVED = "unobserved"


@dataclass(frozen=True)
class RiskThresholds:
    """Category boundaries; must be strictly increasing inside (0, 1)."""

    safe_max: float = 0.15
    caution_max: float = 0.4
    danger_max: float = 0.7

    def __post_init__(self) -> None:
        if not (0.0 < self.safe_max < self.caution_max < self.danger_max < 1.0):
            raise ValueError(
                f"thresholds must be strictly increasing in (0, 1): "
                f"{self.safe_max}, {self.caution_max}, {self.danger_max}"
            )


DEFAULT_THRESHOLDS = RiskThresholds()


def classify(risk: float, thresholds: RiskThresholds = DEFAULT_THRESHOLDS) -> RiskCategory:
    """Discretize a risk score. Safe up to and including safe_max; Danger and
    High Risk close their lower boundaries."""
    if not 0.0 <= risk <= 1.0:
        raise ValueError(f"risk {risk} outside [0, 1]")
    if risk <= thresholds.safe_max:
        return RiskCategory.SAFE
    if risk < thresholds.caution_max:
        return RiskCategory.CAUTION
    if risk < thresholds.danger_max:
        return RiskCategory.DANGER
    return RiskCategory.HIGH_RISK
