"""Uniform access to binary-answer backends.

Every backend receives the same base context and returns a raw answer that is
normalized into the three-valued domain. Recorded and mock-oracle backends
replay files; the remote backend speaks the POST /v1/answer wire protocol.
"""

from __future__ import annotations

import base64
import json
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import requests

from .catalog import BinaryAnswer

# Base context prepended to every question, identical across backends.
BASE_CONTEXT = (
    "You are an expert at detecting pedestrian obstacles for people with "
    "low vision. Answer only with Yes or No."
)

DEFAULT_TIMEOUT_S = 30.0
DEFAULT_RETRIES = 2
DEFAULT_MAX_IN_FLIGHT = 4


class GatewayError(Exception):
    """Base class for backend failures."""


class AnswerNotFoundError(GatewayError):
    """Recorded/mock backends: no stored answer for (image, question)."""


class RemoteTransportError(GatewayError):
    """Connection-level failure talking to a remote backend."""


class RemoteTimeoutError(RemoteTransportError):
    """Remote call exceeded the configured timeout."""


class RemoteStatusError(GatewayError):
    """Remote backend replied with a non-success HTTP status."""

    def __init__(self, status: int, message: str) -> None:
        super().__init__(f"remote backend returned {status}: {message}")
        self.status = status


class RemoteProtocolError(GatewayError):
    """Remote backend replied 200 with a body violating the wire schema."""


@dataclass(frozen=True)
class PromptEnvelope:
    """One (image, question) request. The base context is a fixed constant."""

    question_text: str
    image_ref: str
    image_bytes: bytes | None = None
    base_context: str = BASE_CONTEXT

    def __post_init__(self) -> None:
        if self.base_context != BASE_CONTEXT:
            raise ValueError("base_context must be the canonical prompt text")


@dataclass(frozen=True)
class RawAnswer:
    text: str
    confidence: float | None = None
    embedding: tuple[float, ...] | None = None
    latency_ms: float | None = None

    def __post_init__(self) -> None:
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


_TOKEN = re.compile(r"[a-z]+")


def normalize_answer(raw: RawAnswer) -> BinaryAnswer:
    """Map free text onto Yes/No/Unanswered.

    Tokens are maximal letter runs of the lowercased text. A leading yes/no
    decides immediately; otherwise the first yes/no token anywhere wins;
    otherwise Unanswered. Total and deterministic.
    """
    tokens = _TOKEN.findall(raw.text.lower())
    if not tokens:
        return BinaryAnswer.UNANSWERED
    if tokens[0] == "yes":
        return BinaryAnswer.YES
    if tokens[0] == "no":
        return BinaryAnswer.NO
    for token in tokens[1:]:
        if token == "yes":
            return BinaryAnswer.YES
        if token == "no":
            return BinaryAnswer.NO
    return BinaryAnswer.UNANSWERED


class AnswerBackend:
    """Interface: fetch a raw answer for (envelope, question id)."""

    kind: str = "abstract"

    def fetch(self, envelope: PromptEnvelope, qid: str) -> RawAnswer:
        raise NotImplementedError


class RecordedBackend(AnswerBackend):
    """Replays a recorded-answers document: {image_id: {qid: {answer_text, ...}}}."""

    kind = "recorded"

    def __init__(self, answers: Mapping[str, Mapping[str, dict]]) -> None:
        self._answers = answers

    @classmethod
    def from_file(cls, path: str | Path) -> "RecordedBackend":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def fetch(self, envelope: PromptEnvelope, qid: str) -> RawAnswer:
        try:
            record = self._answers[envelope.image_ref][qid]
        except KeyError:
            raise AnswerNotFoundError(
                f"no recorded answer for image {envelope.image_ref!r}, "
                f"question {qid!r}"
            ) from None
        embedding = record.get("embedding")
        return RawAnswer(
            text=str(record["answer_text"]),
            confidence=record.get("confidence"),
            embedding=tuple(embedding) if embedding is not None else None,
        )


class MockOracleBackend(AnswerBackend):
    """Echoes ground-truth annotations, for end-to-end identity runs."""

    kind = "mock"

    _TEXT = {
        BinaryAnswer.YES: "Yes",
        BinaryAnswer.NO: "No",
        BinaryAnswer.UNANSWERED: "unanswered",
    }

    def __init__(self, annotations: Mapping[str, Mapping[str, BinaryAnswer]]) -> None:
        self._annotations = annotations

    def fetch(self, envelope: PromptEnvelope, qid: str) -> RawAnswer:
        try:
            value = self._annotations[envelope.image_ref][qid]
        except KeyError:
            raise AnswerNotFoundError(
                f"no ground-truth annotation for image {envelope.image_ref!r}, "
                f"question {qid!r}"
            ) from None
        return RawAnswer(text=self._TEXT[value], confidence=1.0)


class AnswerRecorder:
    """Collects remote responses into the recorded-answers file format."""

    def __init__(self) -> None:
        self._records: dict[str, dict[str, dict]] = {}
        self._lock = threading.Lock()

    def record(self, image_id: str, qid: str, raw: RawAnswer) -> None:
        entry: dict = {"answer_text": raw.text}
        if raw.confidence is not None:
            entry["confidence"] = raw.confidence
        if raw.embedding is not None:
            entry["embedding"] = list(raw.embedding)
        with self._lock:
            self._records.setdefault(image_id, {})[qid] = entry

    def save(self, path: str | Path) -> None:
        with self._lock:
            payload = json.dumps(self._records, sort_keys=True, indent=2)
        Path(path).write_text(payload + "\n", encoding="utf-8")


class RemoteBackend(AnswerBackend):
    """HTTP client for the POST /v1/answer wire protocol.

    Retries transport failures and 5xx responses with exponential backoff;
    concurrent calls are capped by a semaphore so batch fan-out cannot
    overload the server.
    """

    kind = "remote"

    def __init__(
        self,
        base_url: str,
        timeout: float = DEFAULT_TIMEOUT_S,
        retries: int = DEFAULT_RETRIES,
        max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
        backoff_s: float = 0.5,
        recorder: AnswerRecorder | None = None,
        session: requests.Session | None = None,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff_s = backoff_s
        self.recorder = recorder
        self._session = session or requests.Session()
        self._gate = threading.Semaphore(max_in_flight)

    def fetch(self, envelope: PromptEnvelope, qid: str) -> RawAnswer:
        body: dict = {
            "context": envelope.base_context,
            "question": envelope.question_text,
            "question_id": qid,
        }
        if envelope.image_bytes is not None:
            body["image"] = base64.b64encode(envelope.image_bytes).decode("ascii")
        else:
            body["image_id"] = envelope.image_ref

        last_error: GatewayError | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff_s * 2 ** (attempt - 1))
            try:
                with self._gate:
                    raw = self._post_once(body)
            except (RemoteTransportError, RemoteStatusError) as exc:
                if isinstance(exc, RemoteStatusError) and exc.status < 500:
                    raise
                last_error = exc
                continue
            if self.recorder is not None:
                self.recorder.record(envelope.image_ref, qid, raw)
            return raw
        assert last_error is not None
        raise last_error

    def _post_once(self, body: dict) -> RawAnswer:
        started = time.monotonic()
        try:
            response = self._session.post(
                f"{self.base_url}/v1/answer", json=body, timeout=self.timeout
            )
        except requests.Timeout as exc:
            raise RemoteTimeoutError(f"remote call timed out after {self.timeout}s") from exc
        except requests.RequestException as exc:
            raise RemoteTransportError(f"remote call failed: {exc}") from exc
        latency_ms = (time.monotonic() - started) * 1000.0

        if response.status_code != 200:
            try:
                message = response.json().get("error", response.text)
            except ValueError:
                message = response.text
            raise RemoteStatusError(response.status_code, str(message))
        try:
            payload = response.json()
        except ValueError as exc:
            raise RemoteProtocolError(f"response body is not JSON: {exc}") from exc
        if not isinstance(payload, dict) or "answer_text" not in payload:
            raise RemoteProtocolError(f"response missing answer_text: {payload!r}")
        embedding = payload.get("embedding")
        return RawAnswer(
            text=str(payload["answer_text"]),
            confidence=payload.get("confidence"),
            embedding=tuple(embedding) if embedding is not None else None,
            latency_ms=latency_ms,
        )


def ask(
    backend: AnswerBackend,
    envelope: PromptEnvelope,
    qid: str,
    lenient: bool = False,
) -> tuple[RawAnswer, BinaryAnswer]:
    """Fetch and normalize one answer.

    With lenient=True, backend failures degrade to an Unanswered result
    instead of raising.
    """
    try:
        raw = backend.fetch(envelope, qid)
    except GatewayError:
        if lenient:
            return RawAnswer(text=""), BinaryAnswer.UNANSWERED
        raise
    return raw, normalize_answer(raw)


@dataclass
class AskOutcome:
    """Per-item result of a batch: either an answer or an isolated error."""

    raw: RawAnswer | None = None
    answer: BinaryAnswer | None = None
    error: Exception | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def batch_ask(
    backend: AnswerBackend,
    items: Sequence[tuple[PromptEnvelope, str]],
    lenient: bool = False,
    max_workers: int = DEFAULT_MAX_IN_FLIGHT,
) -> list[AskOutcome]:
    """Ask many (envelope, qid) pairs; results align with the input order
    regardless of completion order, and one failure never poisons the rest."""
    if not items:
        return []
    outcomes: list[AskOutcome] = [AskOutcome() for _ in items]

    def run(index: int) -> None:
        envelope, qid = items[index]
        try:
            raw, answer = ask(backend, envelope, qid, lenient=lenient)
            outcomes[index] = AskOutcome(raw=raw, answer=answer)
        except Exception as exc:  # isolated per item
            outcomes[index] = AskOutcome(error=exc)

    with ThreadPoolExecutor(max_workers=max(1, min(max_workers, len(items)))) as pool:
        list(pool.map(run, range(len(items))))
    return outcomes
