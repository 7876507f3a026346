"""Chat-completion backends and structured-output plumbing.

Two implementations of the Backend protocol live here: RemoteBackend speaks
the OpenAI-style /chat/completions wire protocol over HTTP, ScriptedBackend
replays canned conversations deterministically for tests and offline runs.
call_structured layers JSON extraction, degeneracy screening and bounded
re-asking on top of either.
"""

from __future__ import annotations

import json
import logging
import os
import random
import re
import threading
import time
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Mapping, Optional, Protocol, Sequence, Union

log = logging.getLogger(__name__)

API_KEY_ENV = "TACTIC_API_KEY"
"""Environment variable holding the bearer token; never read from files."""

REPEAT_RUN_LIMIT = 20
"""A token or short pattern repeated more than this many times is degenerate."""

CHAR_RUN_LIMIT = 80
"""A single character repeated more than this many times is degenerate."""


class BackendError(RuntimeError):
    """Base class for backend failures."""


class BackendUnavailable(BackendError):
    """The backend could not produce a reply (transport, protocol, exhaustion)."""


class AuthFailure(BackendError):
    """The backend rejected our credentials; retrying cannot help."""


class StructuredOutputFailure(BackendError):
    """Repeated attempts never yielded a usable structured payload."""

    def __init__(self, attempts: int, last_cause: str) -> None:
        super().__init__(f"no usable payload after {attempts} attempts ({last_cause})")
        self.attempts = attempts
        self.last_cause = last_cause


class NoJsonFound(ValueError):
    """No parseable JSON object could be located in the text."""


@dataclass(frozen=True, slots=True)
class ChatRequest:
    """One two-message conversation to send."""

    system: str
    user: str
    temperature: float
    max_tokens: int
    kind: Optional[str] = None
    """Routing tag for scripted playback; ignored by remote backends."""


@dataclass(frozen=True, slots=True)
class ChatResponse:
    """The assistant reply, with a flag for length-limited output."""

    text: str
    truncated: bool = False


class Backend(Protocol):
    """Anything that can answer a ChatRequest."""

    def complete(self, request: ChatRequest) -> ChatResponse:
        """Send one conversation and return the reply.

        Raises BackendUnavailable when no reply can be produced and
        AuthFailure when credentials are rejected.
        """
        ...


class DegenerateKind(Enum):
    """Ways a reply can be unusable regardless of its JSON content."""

    TRUNCATED = "truncated"
    """The reply hit the token limit before finishing."""

    REPETITION = "repetition"
    """The reply collapsed into a repeating loop."""

    EMPTY_OR_INVALID = "empty_or_invalid"
    """The reply carries no usable content at all."""


_TRIGRAM_RUN = re.compile(r"(.{3})(?:\1){%d,}" % REPEAT_RUN_LIMIT, re.DOTALL)
_CHAR_RUN = re.compile(r"(.)\1{%d,}" % CHAR_RUN_LIMIT, re.DOTALL)


def detect_degenerate(
    text: str,
    *,
    truncated: bool = False,
    source: Optional[str] = None,
) -> Optional[DegenerateKind]:
    """Screen a reply for truncation, emptiness or runaway repetition.

    Short replies (three tokens or fewer) are flagged only for truncation,
    emptiness, or a single character repeated beyond CHAR_RUN_LIMIT; normal
    short translations must never be rejected. The source text is accepted
    for signature stability but does not influence the decision.
    """
    del source
    if truncated:
        return DegenerateKind.TRUNCATED
    if not text.strip():
        return DegenerateKind.EMPTY_OR_INVALID
    folded = text.casefold()
    if _CHAR_RUN.search(folded):
        return DegenerateKind.REPETITION
    tokens = folded.split()
    if len(tokens) <= 3:
        return None
    run = 1
    for previous, current in zip(tokens, tokens[1:]):
        run = run + 1 if previous == current else 1
        if run > REPEAT_RUN_LIMIT:
            return DegenerateKind.REPETITION
    if _TRIGRAM_RUN.search(folded):
        return DegenerateKind.REPETITION
    return None


def _fenced_block(text: str) -> Optional[str]:
    lines = text.split("\n")
    for i, line in enumerate(lines):
        if line.strip().startswith("```json"):
            body: list[str] = []
            for inner in lines[i + 1:]:
                if inner.strip() == "```":
                    break
                body.append(inner)
            return "\n".join(body)
    return None


def extract_json(text: str) -> dict[str, Any]:
    """Pull the first JSON object out of free-form reply text.

    A ```json fenced block wins when it parses; otherwise the first balanced
    brace span (string-aware, scanned left to right) that parses strictly as
    an object is returned. Raises NoJsonFound otherwise.
    """
    fenced = _fenced_block(text)
    if fenced is not None:
        try:
            payload = json.loads(fenced)
            if isinstance(payload, dict):
                return payload
        except json.JSONDecodeError:
            pass
    start = text.find("{")
    while start != -1:
        depth = 0
        in_string = False
        escaped = False
        for i in range(start, len(text)):
            char = text[i]
            if in_string:
                if escaped:
                    escaped = False
                elif char == "\\":
                    escaped = True
                elif char == '"':
                    in_string = False
            elif char == '"':
                in_string = True
            elif char == "{":
                depth += 1
            elif char == "}":
                depth -= 1
                if depth == 0:
                    try:
                        payload = json.loads(text[start:i + 1])
                    except json.JSONDecodeError:
                        break
                    if isinstance(payload, dict):
                        return payload
                    break
        start = text.find("{", start + 1)
    raise NoJsonFound("no JSON object in reply")


@dataclass(frozen=True, slots=True)
class StructuredResult:
    """A parsed payload plus how many requests it took."""

    payload: dict[str, Any]
    attempts: int


def call_structured(
    backend: Backend,
    request: ChatRequest,
    required_keys: Sequence[str],
    *,
    max_attempts: int,
    validate: Optional[Callable[[dict[str, Any]], None]] = None,
) -> StructuredResult:
    """Ask until the reply parses to a JSON object with the required keys.

    The identical request is re-issued on truncation, degenerate output,
    unparseable replies, missing keys, or a validate() rejection (ValueError),
    up to max_attempts requests in total. Transport-level retries happen
    inside the backend and do not count here. Raises StructuredOutputFailure
    after the last attempt; transport and auth errors propagate untouched.
    """
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    last_cause = "unknown"
    for attempt in range(1, max_attempts + 1):
        response = backend.complete(request)
        flaw = detect_degenerate(response.text, truncated=response.truncated)
        if flaw is not None:
            last_cause = flaw.value
            log.debug("attempt %d: degenerate reply (%s)", attempt, last_cause)
            continue
        try:
            payload = extract_json(response.text)
        except NoJsonFound:
            last_cause = "no_json"
            log.debug("attempt %d: no JSON object in reply", attempt)
            continue
        missing = [key for key in required_keys if key not in payload]
        if missing:
            last_cause = f"missing_keys:{','.join(missing)}"
            log.debug("attempt %d: %s", attempt, last_cause)
            continue
        value_flaw = None
        for key in required_keys:
            value = payload[key]
            if isinstance(value, str):
                value_flaw = detect_degenerate(value)
                if value_flaw is not None:
                    break
        if value_flaw is not None:
            last_cause = f"degenerate_value:{value_flaw.value}"
            log.debug("attempt %d: %s", attempt, last_cause)
            continue
        if validate is not None:
            try:
                validate(payload)
            except ValueError as error:
                last_cause = f"invalid_value:{error}"
                log.debug("attempt %d: %s", attempt, last_cause)
                continue
        return StructuredResult(payload=payload, attempts=attempt)
    raise StructuredOutputFailure(attempts=max_attempts, last_cause=last_cause)


ScriptEntry = Union[str, Mapping[str, Any]]


class ScriptedBackend:
    """Deterministic playback backend.

    The script is either a flat sequence of entries consumed in request
    order, or a mapping from request kind to its own entry sequence (requests
    without a kind draw from the "default" stream). An entry is a plain reply
    string or a mapping with optional fields: text, truncated, error
    ("transport" or "auth"), delay_ms. Exhausting a stream raises
    BackendUnavailable, so scripts must cover every request a test makes.
    """

    def __init__(
        self,
        script: Union[Sequence[ScriptEntry], Mapping[str, Sequence[ScriptEntry]]],
        *,
        delay_ms: int = 0,
        sleeper: Callable[[float], None] = time.sleep,
    ) -> None:
        if isinstance(script, Mapping):
            self._streams: Optional[dict[str, list[ScriptEntry]]] = {
                kind: list(entries) for kind, entries in script.items()
            }
            self._flat: Optional[list[ScriptEntry]] = None
        else:
            self._streams = None
            self._flat = list(script)
        self._cursors: Counter[str] = Counter()
        self._flat_cursor = 0
        self._delay_ms = delay_ms
        self._sleeper = sleeper
        self._lock = threading.Lock()
        self.requests: list[ChatRequest] = []
        self.call_count = 0
        self.calls_by_kind: Counter[str] = Counter()

    def _next_entry(self, kind: str) -> ScriptEntry:
        if self._flat is not None:
            if self._flat_cursor >= len(self._flat):
                raise BackendUnavailable("script exhausted")
            entry = self._flat[self._flat_cursor]
            self._flat_cursor += 1
            return entry
        assert self._streams is not None
        stream = self._streams.get(kind)
        if stream is None:
            raise BackendUnavailable(f"no script for request kind {kind!r}")
        position = self._cursors[kind]
        if position >= len(stream):
            raise BackendUnavailable(f"script exhausted for request kind {kind!r}")
        self._cursors[kind] = position + 1
        return stream[position]

    def complete(self, request: ChatRequest) -> ChatResponse:
        kind = request.kind or "default"
        with self._lock:
            self.requests.append(request)
            self.call_count += 1
            self.calls_by_kind[kind] += 1
            entry = self._next_entry(kind)
        if isinstance(entry, str):
            entry = {"text": entry}
        delay_ms = entry.get("delay_ms", self._delay_ms)
        if delay_ms > 0:
            self._sleeper(delay_ms / 1000.0)
        error = entry.get("error")
        if error == "transport":
            raise BackendUnavailable("scripted transport failure")
        if error == "auth":
            raise AuthFailure("scripted credential rejection")
        if error is not None:
            raise ValueError(f"unknown scripted error kind {error!r}")
        return ChatResponse(
            text=entry.get("text", ""),
            truncated=bool(entry.get("truncated", False)),
        )


class RemoteBackend:
    """HTTP backend for any /chat/completions-compatible service.

    Credentials come from the environment variable named by API_KEY_ENV and
    are sent as a bearer token; they are never read from configuration files
    and never logged. Transient failures (connection errors, timeouts, 5xx)
    are retried with capped exponential backoff and full jitter; credential
    rejections raise AuthFailure immediately and other client errors or
    malformed bodies raise BackendUnavailable without retrying.
    """

    MAX_ATTEMPTS = 3
    BACKOFF_BASE_MS = 250

    def __init__(
        self,
        base_url: str,
        model: str,
        *,
        api_key: Optional[str] = None,
        timeout: float = 120.0,
        session: Optional[Any] = None,
        rng: Callable[[], float] = random.random,
        sleeper: Callable[[float], None] = time.sleep,
    ) -> None:
        import requests

        self._url = base_url.rstrip("/") + "/chat/completions"
        self._model = model
        self._api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self._timeout = timeout
        self._session = session if session is not None else requests.Session()
        self._rng = rng
        self._sleeper = sleeper
        self._lock = threading.Lock()
        self.call_count = 0
        self.retry_count = 0

    def _headers(self) -> dict[str, str]:
        headers = {}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        return headers

    def _parse(self, body: Any) -> ChatResponse:
        try:
            choice = body["choices"][0]
            text = choice["message"]["content"]
            if not isinstance(text, str):
                raise TypeError("content is not a string")
        except (KeyError, IndexError, TypeError) as error:
            raise BackendUnavailable(f"malformed completion body: {error}") from error
        return ChatResponse(text=text, truncated=choice.get("finish_reason") == "length")

    def complete(self, request: ChatRequest) -> ChatResponse:
        import requests

        payload = {
            "model": self._model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        last_error: Optional[Exception] = None
        for attempt in range(1, self.MAX_ATTEMPTS + 1):
            with self._lock:
                self.call_count += 1
            try:
                reply = self._session.post(
                    self._url, json=payload, headers=self._headers(), timeout=self._timeout
                )
            except requests.RequestException as error:
                last_error = error
                log.warning("transport error on attempt %d: %s", attempt, error)
            else:
                if reply.status_code in (401, 403):
                    raise AuthFailure(f"credentials rejected (HTTP {reply.status_code})")
                if 400 <= reply.status_code < 500:
                    raise BackendUnavailable(f"client error (HTTP {reply.status_code})")
                if reply.status_code >= 500:
                    last_error = BackendUnavailable(f"server error (HTTP {reply.status_code})")
                    log.warning("server error on attempt %d: HTTP %d", attempt, reply.status_code)
                else:
                    try:
                        body = reply.json()
                    except ValueError as error:
                        raise BackendUnavailable("response body is not JSON") from error
                    return self._parse(body)
            if attempt < self.MAX_ATTEMPTS:
                with self._lock:
                    self.retry_count += 1
                delay_ms = self._rng() * self.BACKOFF_BASE_MS * (2 ** (attempt - 1))
                self._sleeper(delay_ms / 1000.0)
        raise BackendUnavailable(f"gave up after {self.MAX_ATTEMPTS} attempts: {last_error}")
