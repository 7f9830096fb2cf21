"""Transport to any OpenAI-style chat-completions endpoint, plus record/replay.

The whole prompt goes out as a single user message. Each request carries
exactly the requesting agent's fixed decoding parameters. Every completed
request is appended to a JSON-lines transcript keyed by a context hash over
(prompt, temperature, top_p), which is what replay verifies against.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Protocol

import httpx

from .config import ConfigError, LlmConfig

RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


class TransportError(RuntimeError):
    """Request could not be completed (after any internal retries)."""


class ReplayError(RuntimeError):
    """Replay transcript missing, exhausted, or divergent from the live run."""


@dataclass(frozen=True, slots=True)
class CompletionRequest:
    model: str
    prompt: str
    temperature: float
    top_p: float
    max_tokens: int


@dataclass(slots=True)
class TranscriptRecord:
    context_hash: str
    request: dict
    response: str
    latency_s: float
    retries: int
    timestamp: float


def context_hash(prompt: str, temperature: float, top_p: float) -> str:
    """Stable key for one decision request: prompt plus decoding parameters."""
    payload = json.dumps([prompt, repr(temperature), repr(top_p)], ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def request_hash(request: CompletionRequest) -> str:
    return context_hash(request.prompt, request.temperature, request.top_p)


class Transport(Protocol):
    def send(self, request: CompletionRequest) -> str: ...


class HttpTransport:
    """Blocking POST to ``{base_url}/chat/completions`` with bearer credential."""

    def __init__(self, base_url: str, api_key: str | None, timeout_s: float = 60.0) -> None:
        self.base_url = base_url.rstrip("/")
        self.calls = 0
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        self._client = httpx.Client(timeout=timeout_s, headers=headers)

    def send(self, request: CompletionRequest) -> str:
        self.calls += 1
        body = {
            "model": request.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "top_p": request.top_p,
            "max_tokens": request.max_tokens,
        }
        try:
            response = self._client.post(f"{self.base_url}/chat/completions", json=body)
        except httpx.HTTPError as exc:
            raise TransportError(f"transport failure: {exc}") from exc
        if response.status_code in RETRYABLE_STATUS:
            raise TransportError(f"retryable HTTP {response.status_code}")
        if response.status_code != 200:
            raise FatalTransportError(f"HTTP {response.status_code}: {response.text[:200]}")
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise FatalTransportError(f"malformed completion body: {exc}") from exc

    def close(self) -> None:
        self._client.close()


class FatalTransportError(TransportError):
    """Non-retryable endpoint failure (auth, bad request, broken body)."""


class TranscriptWriter:
    """Append-only JSON-lines transcript; one record per completed request."""

    def __init__(self, path: str | Path, header: dict | None = None) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("a", encoding="utf-8")
        if header is not None and self.path.stat().st_size == 0:
            self._write({"kind": "header", **header})

    def _write(self, record: dict) -> None:
        self._fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        self._fh.flush()

    def append(self, record: TranscriptRecord) -> None:
        self._write({"kind": "record", **asdict(record)})

    def close(self) -> None:
        self._fh.close()


def read_transcript(path: str | Path) -> tuple[dict | None, list[TranscriptRecord]]:
    """Load a transcript file; returns (header, records in request order)."""
    header: dict | None = None
    records: list[TranscriptRecord] = []
    text = Path(path).read_text(encoding="utf-8")
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ReplayError(f"{path}:{line_no}: bad transcript line: {exc}") from exc
        if obj.get("kind") == "header":
            header = {k: v for k, v in obj.items() if k != "kind"}
            continue
        records.append(
            TranscriptRecord(
                context_hash=obj["context_hash"],
                request=obj.get("request", {}),
                response=obj["response"],
                latency_s=obj.get("latency_s", 0.0),
                retries=obj.get("retries", 0),
                timestamp=obj.get("timestamp", 0.0),
            )
        )
    return header, records


class ReplayTransport:
    """Serves recorded responses in order, verifying the live context hash.

    A hash mismatch means the live run diverged from the recorded one (edited
    config, different seed); that is an error, not a silent wrong answer.
    """

    def __init__(self, records: list[TranscriptRecord]) -> None:
        self._records = list(records)
        self._cursor = 0
        self.calls = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "ReplayTransport":
        _, records = read_transcript(path)
        return cls(records)

    def send(self, request: CompletionRequest) -> str:
        if self._cursor >= len(self._records):
            raise ReplayError(f"transcript exhausted after {self._cursor} decisions")
        record = self._records[self._cursor]
        live = request_hash(request)
        if record.context_hash != live:
            raise ReplayError(
                f"replay drift at decision {self._cursor}: live context hash {live[:12]} != "
                f"recorded {record.context_hash[:12]}"
            )
        self._cursor += 1
        return record.response


class LookupStore:
    """Hash-keyed view over transcript records, for spot lookups."""

    def __init__(self, records: list[TranscriptRecord]) -> None:
        self._by_hash: dict[str, str] = {}
        for record in records:
            self._by_hash.setdefault(record.context_hash, record.response)

    def lookup(self, ctx_hash: str) -> str | None:
        return self._by_hash.get(ctx_hash)


class LlmClient:
    """Retrying completion client over a pluggable transport.

    Retries transport failures and retryable HTTP statuses with exponential
    backoff; records every successful completion when a recorder is attached.
    """

    def __init__(
        self,
        transport: Transport,
        recorder: TranscriptWriter | None = None,
        max_attempts: int = 3,
        backoff_s: float = 0.5,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        if max_attempts < 1:
            raise ConfigError("max_attempts must be >= 1")
        self.transport = transport
        self.recorder = recorder
        self.max_attempts = max_attempts
        self.backoff_s = backoff_s
        self._sleep = sleep

    def complete(self, request: CompletionRequest) -> str:
        started = time.monotonic()
        failures = 0
        while True:
            try:
                response = self.transport.send(request)
                break
            except FatalTransportError:
                raise
            except ReplayError:
                raise
            except TransportError:
                failures += 1
                if failures >= self.max_attempts:
                    raise
                self._sleep(self.backoff_s * (2 ** (failures - 1)))
        if self.recorder is not None:
            self.recorder.append(
                TranscriptRecord(
                    context_hash=request_hash(request),
                    request=asdict(request),
                    response=response,
                    latency_s=time.monotonic() - started,
                    retries=failures,
                    timestamp=time.time(),
                )
            )
        return response


def build_http_transport(cfg: LlmConfig, api_key: str | None) -> HttpTransport:
    if not cfg.base_url:
        raise ConfigError(
            "llm provider selected but llm.base_url is not configured; "
            "set it (or pick the heuristic/replay provider)"
        )
    return HttpTransport(cfg.base_url, api_key, timeout_s=cfg.timeout_s)
