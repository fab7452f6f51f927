import json
import random

import pytest

from riskmap.catalog import (
    BinaryAnswer,
    CatalogError,
    CatalogVersionError,
    HazardCategory,
    LockedQuestionError,
    Question,
    QuestionCatalog,
    QuerySession,
    UnknownQuestionError,
    catalog_from_dict,
    catalog_to_dict,
    default_catalog,
    is_complete,
    load_catalog,
    next_questions,
    record_answer,
    session_from_dict,
    session_to_dict,
)


def make_catalog(questions, version="t1"):
    return QuestionCatalog(questions=tuple(questions), version=version)


def level1(qid, category):
    return Question(id=qid, category=category, level=1, text=f"{qid}?")


ALL_LEVEL1 = [level1(f"{c.value}.l1", c) for c in HazardCategory]


class TestValidation:
    def test_default_catalog_has_one_level1_per_category(self, catalog):
        roots = catalog.level1_questions()
        assert len(roots) == 8
        assert {q.category for q in roots} == set(HazardCategory)

    def test_default_catalog_covers_named_followups(self, catalog):
        ids = {q.id for q in catalog.questions}
        assert {
            "vehicles.type_bicycle",
            "vehicles.type_car",
            "vehicles.type_motorcycle",
            "crossings.signalized",
            "crossings.occupied",
            "crossings.vehicle_moving",
            "vehicles.bicycle_towards",
            "vehicles.bicycle_in_lane",
        } <= ids

    def test_duplicate_id_rejected(self):
        questions = ALL_LEVEL1 + [level1("stairs.l1", HazardCategory.STAIRS)]
        with pytest.raises(CatalogError, match="duplicate"):
            make_catalog(questions)

    def test_unresolved_parent_rejected(self):
        questions = ALL_LEVEL1 + [
            Question("x.l2", HazardCategory.STAIRS, 2, "x?", parent="nope")
        ]
        with pytest.raises(CatalogError, match="unresolved parent"):
            make_catalog(questions)

    def test_level_gap_rejected(self):
        questions = ALL_LEVEL1 + [
            Question("x.l3", HazardCategory.STAIRS, 3, "x?", parent="stairs.l1")
        ]
        with pytest.raises(CatalogError, match="level gap"):
            make_catalog(questions)

    def test_cyclic_parent_chain_rejected(self):
        questions = ALL_LEVEL1 + [
            Question("x.a", HazardCategory.STAIRS, 2, "a?", parent="x.b"),
            Question("x.b", HazardCategory.STAIRS, 2, "b?", parent="x.a"),
        ]
        with pytest.raises(CatalogError, match="cyclic"):
            make_catalog(questions)

    def test_missing_level1_rejected(self):
        questions = [q for q in ALL_LEVEL1 if q.category is not HazardCategory.SURFACE]
        with pytest.raises(CatalogError, match="missing level-1"):
            make_catalog(questions)

    def test_level1_with_parent_rejected(self):
        questions = ALL_LEVEL1 + [
            Question("x", HazardCategory.STAIRS, 1, "x?", parent="stairs.l1")
        ]
        with pytest.raises(CatalogError):
            make_catalog(questions)

    def test_cross_category_parent_rejected(self):
        questions = ALL_LEVEL1 + [
            Question("x.l2", HazardCategory.VEHICLES, 2, "x?", parent="stairs.l1")
        ]
        with pytest.raises(CatalogError, match="another category"):
            make_catalog(questions)

    def test_depth_beyond_three_rejected(self):
        questions = ALL_LEVEL1 + [
            Question("x.l2", HazardCategory.STAIRS, 2, "x?", parent="stairs.l1"),
            Question("x.l3", HazardCategory.STAIRS, 3, "x?", parent="x.l2"),
            Question("x.l4", HazardCategory.STAIRS, 4, "x?", parent="x.l3"),
        ]
        with pytest.raises(CatalogError, match="level"):
            make_catalog(questions)

    def test_single_field_mutations_of_default_are_rejected(self, catalog):
        doc = catalog_to_dict(catalog)

        spoiled = json.loads(json.dumps(doc))
        spoiled["questions"][9]["id"] = spoiled["questions"][8]["id"]
        with pytest.raises(CatalogError):
            catalog_from_dict(spoiled)

        spoiled = json.loads(json.dumps(doc))
        follow_up = next(e for e in spoiled["questions"] if e["level"] == 2)
        follow_up["parent"] = "does.not.exist"
        with pytest.raises(CatalogError):
            catalog_from_dict(spoiled)

        spoiled = json.loads(json.dumps(doc))
        follow_up = next(e for e in spoiled["questions"] if e["level"] == 3)
        follow_up["level"] = 2
        with pytest.raises(CatalogError):
            catalog_from_dict(spoiled)

        spoiled = json.loads(json.dumps(doc))
        root = next(e for e in spoiled["questions"] if e["level"] == 1)
        root["category"] = "vehicles" if root["category"] != "vehicles" else "stairs"
        with pytest.raises(CatalogError):
            catalog_from_dict(spoiled)


class TestRoundTrip:
    def test_catalog_dict_round_trip(self, catalog):
        again = catalog_from_dict(catalog_to_dict(catalog))
        assert again == catalog

    def test_load_catalog_from_file(self, catalog, tmp_path):
        path = tmp_path / "catalog.json"
        path.write_text(json.dumps(catalog_to_dict(catalog)))
        assert load_catalog(path) == catalog

    def test_load_catalog_bad_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{nope")
        with pytest.raises(CatalogError, match="JSON"):
            load_catalog(path)

    def test_session_dict_round_trip(self, catalog):
        session = QuerySession(
            "img1",
            {"stairs.presence": BinaryAnswer.NO, "vehicles.presence": BinaryAnswer.YES},
            catalog.version,
        )
        doc = session_to_dict(session)
        assert doc["answers"] == {"stairs.presence": "no", "vehicles.presence": "yes"}
        assert session_from_dict(doc) == session


class TestNextQuestions:
    def empty(self, catalog):
        return QuerySession("img", {}, catalog.version)

    def test_empty_session_yields_the_eight_level1(self, catalog):
        pending = next_questions(self.empty(catalog), catalog)
        assert pending == [q.id for q in catalog.level1_questions()]
        assert len(pending) == 8

    def test_all_no_yields_nothing(self, catalog):
        session = self.empty(catalog)
        for q in catalog.level1_questions():
            session = record_answer(session, q.id, BinaryAnswer.NO, catalog)
        assert next_questions(session, catalog) == []
        assert is_complete(session, catalog)
        assert len(session.answers) == 8

    def test_vehicles_yes_unlocks_vehicle_types(self, catalog):
        session = self.empty(catalog)
        for q in catalog.level1_questions():
            answer = (
                BinaryAnswer.YES
                if q.category is HazardCategory.VEHICLES
                else BinaryAnswer.NO
            )
            session = record_answer(session, q.id, answer, catalog)
        assert next_questions(session, catalog) == [
            "vehicles.type_bicycle",
            "vehicles.type_car",
            "vehicles.type_motorcycle",
        ]

    def test_version_mismatch_raises(self, catalog):
        session = QuerySession("img", {}, "other-version")
        with pytest.raises(CatalogVersionError):
            next_questions(session, catalog)


class TestRecordAnswer:
    def test_records_and_is_idempotent(self, catalog):
        session = QuerySession("img", {}, catalog.version)
        once = record_answer(session, "stairs.presence", BinaryAnswer.NO, catalog)
        assert once.answers == {"stairs.presence": BinaryAnswer.NO}
        twice = record_answer(once, "stairs.presence", BinaryAnswer.NO, catalog)
        assert twice == once

    def test_original_session_is_untouched(self, catalog):
        session = QuerySession("img", {}, catalog.version)
        record_answer(session, "stairs.presence", BinaryAnswer.NO, catalog)
        assert session.answers == {}

    def test_locked_followup_rejected(self, catalog):
        session = QuerySession("img", {}, catalog.version)
        with pytest.raises(LockedQuestionError, match="locked"):
            record_answer(session, "vehicles.type_bicycle", BinaryAnswer.YES, catalog)

    def test_followup_locked_when_parent_no(self, catalog):
        session = QuerySession("img", {}, catalog.version)
        session = record_answer(session, "vehicles.presence", BinaryAnswer.NO, catalog)
        with pytest.raises(LockedQuestionError):
            record_answer(session, "vehicles.type_bicycle", BinaryAnswer.NO, catalog)

    def test_unknown_question_rejected(self, catalog):
        session = QuerySession("img", {}, catalog.version)
        with pytest.raises(UnknownQuestionError):
            record_answer(session, "not.a.question", BinaryAnswer.YES, catalog)

    def test_conflicting_overwrite_rejected(self, catalog):
        session = QuerySession("img", {}, catalog.version)
        session = record_answer(session, "stairs.presence", BinaryAnswer.NO, catalog)
        with pytest.raises(LockedQuestionError, match="already answered"):
            record_answer(session, "stairs.presence", BinaryAnswer.YES, catalog)

    def test_explicit_skip_is_allowed(self, catalog):
        session = QuerySession("img", {}, catalog.version)
        session = record_answer(
            session, "stairs.presence", BinaryAnswer.UNANSWERED, catalog
        )
        assert session.answers["stairs.presence"] is BinaryAnswer.UNANSWERED
        # a skipped parent never unlocks children
        assert "vehicles.type_bicycle" not in next_questions(session, catalog)


class TestCascadeProperties:
    def drive(self, catalog, rng):
        session = QuerySession("img", {}, catalog.version)
        steps = 0
        while True:
            pending = next_questions(session, catalog)
            if not pending:
                return session, steps
            answer = rng.choice(list(BinaryAnswer))
            session = record_answer(session, pending[0], answer, catalog)
            steps += 1

    def test_driven_sessions_never_hold_locked_answers(self, catalog):
        rng = random.Random(7)
        for _ in range(200):
            session, steps = self.drive(catalog, rng)
            assert steps <= len(catalog.questions)
            for qid, answer in session.answers.items():
                q = catalog.get(qid)
                if q.level > 1 and answer is not BinaryAnswer.UNANSWERED:
                    assert session.answers[q.parent] is q.trigger

    def test_next_questions_never_returns_answered(self, catalog):
        rng = random.Random(11)
        session = QuerySession("img", {}, catalog.version)
        while True:
            pending = next_questions(session, catalog)
            assert not set(pending) & set(session.answers)
            if not pending:
                break
            session = record_answer(
                session, pending[0], rng.choice(list(BinaryAnswer)), catalog
            )
