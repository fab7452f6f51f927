"""Hierarchical question catalog and per-image answer sessions.

The catalog is a three-level tree of binary questions over eight pedestrian
hazard categories. Level-1 questions are always pending; a Level-2/3 question
unlocks only once its parent holds that question's trigger answer. Sessions
are immutable values: recording an answer returns a new session.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable


class HazardCategory(Enum):
    """The eight Level-1 pedestrian hazard classes."""

    STAIRS = "stairs"
    CROSSINGS = "crossings"
    CONSTRUCTION = "construction"
    OBSTACLES = "obstacles"
    CROWDING = "crowding"
    VEHICLES = "vehicles"
    SURFACE = "surface"
    NON_SIDEWALK = "non_sidewalk"


class BinaryAnswer(Enum):
    """Closed three-valued answer domain."""

    YES = "yes"
    NO = "no"
    UNANSWERED = "unanswered"


class CatalogError(ValueError):
    """Raised for a structurally invalid catalog document."""


class UnknownQuestionError(KeyError):
    """Raised when a question id does not exist in the catalog."""


class LockedQuestionError(ValueError):
    """Raised when answering a follow-up whose parent trigger is not satisfied."""


class CatalogVersionError(ValueError):
    """Raised when a session references a different catalog version."""


@dataclass(frozen=True)
class Question:
    id: str
    category: HazardCategory
    level: int
    text: str
    parent: str | None = None
    trigger: BinaryAnswer = BinaryAnswer.YES


@dataclass(frozen=True)
class QuestionCatalog:
    """Validated, ordered question tree. Immutable and safe to share."""

    questions: tuple[Question, ...]
    version: str
    _by_id: dict[str, Question] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_by_id", _validate(self.questions))

    def __contains__(self, qid: str) -> bool:
        return qid in self._by_id

    def get(self, qid: str) -> Question:
        try:
            return self._by_id[qid]
        except KeyError:
            raise UnknownQuestionError(qid) from None

    def level1_questions(self) -> tuple[Question, ...]:
        return tuple(q for q in self.questions if q.level == 1)

    def level1_id(self, category: HazardCategory) -> str:
        for q in self.questions:
            if q.level == 1 and q.category is category:
                return q.id
        raise UnknownQuestionError(category.value)


def _validate(questions: Iterable[Question]) -> dict[str, Question]:
    by_id: dict[str, Question] = {}
    for q in questions:
        if q.id in by_id:
            raise CatalogError(f"duplicate question id: {q.id!r}")
        by_id[q.id] = q

    for q in by_id.values():
        if q.level not in (1, 2, 3):
            raise CatalogError(f"question {q.id!r}: level must be 1, 2 or 3, got {q.level}")
        if q.level == 1:
            if q.parent is not None:
                raise CatalogError(f"question {q.id!r}: level-1 questions take no parent")
            continue
        if q.parent is None:
            raise CatalogError(f"question {q.id!r}: level-{q.level} question needs a parent")
        if q.parent not in by_id:
            raise CatalogError(f"question {q.id!r}: unresolved parent {q.parent!r}")

    # Parent-level arithmetic rules out cycles, but walk the chains anyway so a
    # document broken in several ways reports the cycle rather than a level gap.
    for q in by_id.values():
        seen = {q.id}
        cur = q
        while cur.parent is not None:
            if cur.parent in seen:
                raise CatalogError(f"cyclic parent chain through {q.id!r}")
            seen.add(cur.parent)
            cur = by_id[cur.parent]

    for q in by_id.values():
        if q.parent is None:
            continue
        parent = by_id[q.parent]
        if parent.level != q.level - 1:
            raise CatalogError(
                f"question {q.id!r}: level gap (level {q.level} under level-{parent.level} parent)"
            )
        if parent.category is not q.category:
            raise CatalogError(
                f"question {q.id!r}: parent {parent.id!r} belongs to another category"
            )

    roots = {q.category for q in by_id.values() if q.level == 1}
    for category in HazardCategory:
        if category not in roots:
            raise CatalogError(f"missing level-1 question for category {category.value!r}")
    level1_counts: dict[HazardCategory, int] = {}
    for q in by_id.values():
        if q.level == 1:
            level1_counts[q.category] = level1_counts.get(q.category, 0) + 1
    for category, n in level1_counts.items():
        if n > 1:
            raise CatalogError(f"category {category.value!r} has {n} level-1 questions")

    return by_id


@dataclass(frozen=True)
class QuerySession:
    """Recorded answers of one image. A value: mutation returns a new session."""

    image_id: str
    answers: dict[str, BinaryAnswer] = field(default_factory=dict)
    catalog_version: str = ""

    def with_answer(self, qid: str, answer: BinaryAnswer) -> "QuerySession":
        merged = dict(self.answers)
        merged[qid] = answer
        return QuerySession(self.image_id, merged, self.catalog_version)


def _check_version(session: QuerySession, catalog: QuestionCatalog) -> None:
    if session.catalog_version != catalog.version:
        raise CatalogVersionError(
            f"session {session.image_id!r} was created against catalog "
            f"{session.catalog_version!r}, not {catalog.version!r}"
        )


def next_questions(session: QuerySession, catalog: QuestionCatalog) -> list[str]:
    """Ids of all currently pending questions, in catalog order.

    Pending means no answer recorded yet (an explicit Unanswered counts as
    recorded) and either level 1 or unlocked by the parent's trigger answer.
    """
    _check_version(session, catalog)
    pending = []
    for q in catalog.questions:
        if q.id in session.answers:
            continue
        if q.level == 1 or session.answers.get(q.parent) is q.trigger:
            pending.append(q.id)
    return pending


def record_answer(
    session: QuerySession, qid: str, answer: BinaryAnswer, catalog: QuestionCatalog
) -> QuerySession:
    """Return a session with the answer stored.

    Yes/No may only be recorded for a pending question; an explicit Unanswered
    skip is accepted for any known question that has no answer yet. Replaying
    an identical (qid, answer) pair is a no-op; recording a different answer
    over an existing one raises.
    """
    _check_version(session, catalog)
    question = catalog.get(qid)  # raises UnknownQuestionError

    existing = session.answers.get(qid)
    if existing is answer:
        return session
    if existing is not None:
        raise LockedQuestionError(
            f"question {qid!r} already answered {existing.value!r}"
        )
    if answer is not BinaryAnswer.UNANSWERED:
        if question.level > 1 and session.answers.get(question.parent) is not question.trigger:
            raise LockedQuestionError(
                f"question {qid!r} is locked: parent {question.parent!r} "
                f"not answered {question.trigger.value!r}"
            )
    return session.with_answer(qid, answer)


def is_complete(session: QuerySession, catalog: QuestionCatalog) -> bool:
    """True iff no question is pending."""
    return not next_questions(session, catalog)


# --- catalog file format -----------------------------------------------------
#
# {"version": str,
#  "questions": [{"id", "category", "level", "text", "parent"?, "trigger"?}]}


def catalog_from_dict(doc: dict) -> QuestionCatalog:
    if not isinstance(doc, dict) or "questions" not in doc or "version" not in doc:
        raise CatalogError("catalog document must carry 'version' and 'questions'")
    questions = []
    for entry in doc["questions"]:
        try:
            questions.append(
                Question(
                    id=str(entry["id"]),
                    category=HazardCategory(entry["category"]),
                    level=int(entry["level"]),
                    text=str(entry["text"]),
                    parent=entry.get("parent"),
                    trigger=BinaryAnswer(entry.get("trigger", "yes")),
                )
            )
        except (KeyError, ValueError) as exc:
            raise CatalogError(f"bad question entry {entry!r}: {exc}") from exc
    return QuestionCatalog(questions=tuple(questions), version=str(doc["version"]))


def catalog_to_dict(catalog: QuestionCatalog) -> dict:
    questions = []
    for q in catalog.questions:
        entry: dict = {
            "id": q.id,
            "category": q.category.value,
            "level": q.level,
            "text": q.text,
        }
        if q.parent is not None:
            entry["parent"] = q.parent
            entry["trigger"] = q.trigger.value
        questions.append(entry)
    return {"version": catalog.version, "questions": questions}


def load_catalog(source: str | Path) -> QuestionCatalog:
    """Load and validate a catalog JSON document from a path."""
    try:
        doc = json.loads(Path(source).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CatalogError(f"catalog file {source} is not valid JSON: {exc}") from exc
    return catalog_from_dict(doc)


def default_catalog() -> QuestionCatalog:
    """The catalog shipped with the package."""
    text = resources.files("riskmap.data").joinpath("default_catalog.json").read_text("utf-8")
    return catalog_from_dict(json.loads(text))


# --- session file format -----------------------------------------------------
#
# {"image_id": str, "catalog_version": str, "answers": {qid: "yes"|"no"|"unanswered"}}


def session_to_dict(session: QuerySession) -> dict:
    return {
        "image_id": session.image_id,
        "catalog_version": session.catalog_version,
        "answers": {qid: a.value for qid, a in sorted(session.answers.items())},
    }


def session_from_dict(doc: dict) -> QuerySession:
    answers = {qid: BinaryAnswer(v) for qid, v in doc.get("answers", {}).items()}
    return QuerySession(
        image_id=str(doc["image_id"]),
        answers=answers,
        catalog_version=str(doc.get("catalog_version", "")),
    )


def load_session(path: str | Path) -> QuerySession:
    return session_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
