"""Chat-completion gateway with http, replay and scripted backends.

Every request has a fingerprint (sha256 over the canonical JSON of model,
messages and temperature).  Replay answers strictly by fingerprint; recording
appends ``{fingerprint, request_summary, response_text}`` lines to a JSONL file.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import httpx

log = logging.getLogger(__name__)

ROLES = ("system", "user", "assistant")
BACKENDS = ("http", "replay", "scripted")


class GatewayError(Exception):
    pass


class ReplayMissError(GatewayError):
    def __init__(self, fingerprint: str, summary: str = ""):
        super().__init__(f"replay miss: no recorded response for fingerprint {fingerprint}"
                         + (f" ({summary})" if summary else ""))
        self.fingerprint = fingerprint


class ScriptExhaustedError(GatewayError):
    pass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if not self.content:
            raise ValueError("message content must be non-empty")

    def to_dict(self) -> dict:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class CompletionRequest:
    model_id: str
    messages: tuple
    temperature: float = 0.0
    max_tokens: int = 1024

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(self.messages))
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")

    @property
    def request_fingerprint(self) -> str:
        canon = json.dumps(
            {"model": self.model_id, "messages": [m.to_dict() for m in self.messages],
             "temperature": float(self.temperature)},
            sort_keys=True, separators=(",", ":"), ensure_ascii=False,
        )
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def summary(self, width: int = 80) -> str:
        last = self.messages[-1].content if self.messages else ""
        first_line = last.strip().splitlines()[0] if last.strip() else ""
        return f"{self.model_id}: {first_line[:width]}"

    def body(self) -> dict:
        return {"model": self.model_id, "messages": [m.to_dict() for m in self.messages],
                "temperature": self.temperature, "max_tokens": self.max_tokens}


@dataclass(frozen=True)
class ProviderConfig:
    backend: str
    endpoint_url: Optional[str] = None
    api_key_env_var_name: Optional[str] = None
    fixture_path: Optional[str] = None
    script_path: Optional[str] = None  # scripted only: JSON list of responses
    max_concurrent_requests: int = 4
    retry_limit: int = 2
    timeout: float = 60.0

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise ConfigError(f"unknown backend {self.backend!r}")
        http_fields = self.endpoint_url is not None and self.api_key_env_var_name is not None
        if self.backend == "http" and not http_fields:
            raise ConfigError("http backend needs endpoint_url and api_key_env_var_name")
        if self.backend != "http" and (self.endpoint_url or self.api_key_env_var_name):
            raise ConfigError("endpoint_url/api_key_env_var_name are for the http backend only")
        if (self.backend == "replay") != (self.fixture_path is not None):
            raise ConfigError("fixture_path is required for, and only for, the replay backend")
        if self.script_path is not None and self.backend != "scripted":
            raise ConfigError("script_path is for the scripted backend only")
        if self.max_concurrent_requests < 1:
            raise ConfigError("max_concurrent_requests must be positive")
        if not 0 <= self.retry_limit <= 10:
            raise ConfigError("retry_limit must be between 0 and 10")
        if self.timeout <= 0:
            raise ConfigError("timeout must be positive")

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass
class FineTuneJobDescriptor:
    dataset_path: str
    system_message_path: str
    base_model: str = "gpt-3.5-turbo"
    epochs: int = 3

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be positive")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


_FENCE_RE = re.compile(r"```[A-Za-z0-9_+-]*[ \t]*\n?(.*?)```", re.S)


def strip_fences(text: str) -> str:
    """Contents of the first triple-backtick block, or the text unchanged."""
    m = _FENCE_RE.search(text)
    return m.group(1).strip("\n") if m else text


def load_fixtures(path) -> dict:
    table = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                table[rec["fingerprint"]] = rec["response_text"]
            except (ValueError, KeyError) as e:
                raise GatewayError(f"{path}:{lineno}: bad fixture line ({e})") from None
    return table


class Gateway:
    """Thread-safe completion client bound to one :class:`ProviderConfig`.

    ``responses`` programs the scripted backend (overrides ``script_path``);
    once they run out, ``responder(request)`` answers if given.
    ``transport`` is an optional ``httpx`` transport (tests use a mock).
    """

    def __init__(self, cfg: ProviderConfig, *, responses: Optional[Sequence[str]] = None,
                 responder: Optional[Callable] = None, record_path=None,
                 transport: Optional[httpx.BaseTransport] = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.cfg = cfg
        self._slots = threading.BoundedSemaphore(cfg.max_concurrent_requests)
        self._lock = threading.Lock()
        self._sleep = sleep
        self._transport = transport
        self._fixtures: dict = {}
        self._script: list = []
        self._responder = responder
        self._recorded: set = set()
        self.record_path = Path(record_path) if record_path else None
        self.calls = 0
        if cfg.backend == "replay":
            self._fixtures = load_fixtures(cfg.fixture_path)
        elif cfg.backend == "scripted":
            if responses is None and cfg.script_path:
                responses = json.loads(Path(cfg.script_path).read_text())
            self._script = list(responses or [])
        if self.record_path and self.record_path.exists():
            self._recorded = set(load_fixtures(self.record_path))

    def program(self, responses: Sequence[str]) -> None:
        with self._lock:
            self._script.extend(responses)

    def complete(self, req: CompletionRequest) -> str:
        with self._slots:
            with self._lock:
                self.calls += 1
            if self.cfg.backend == "replay":
                try:
                    text = self._fixtures[req.request_fingerprint]
                except KeyError:
                    raise ReplayMissError(req.request_fingerprint, req.summary()) from None
            elif self.cfg.backend == "scripted":
                text = self._next_scripted(req)
            else:
                text = self._http(req)
        self._record(req, text)
        return text

    def _next_scripted(self, req) -> str:
        with self._lock:
            item = self._script.pop(0) if self._script else self._responder
        if item is None:
            raise ScriptExhaustedError(f"scripted backend exhausted at call {self.calls}")
        return item(req) if callable(item) else item

    def _http(self, req: CompletionRequest) -> str:
        key = os.environ.get(self.cfg.api_key_env_var_name or "")
        if not key:
            raise GatewayError(f"environment variable {self.cfg.api_key_env_var_name} is not set")
        headers = {"Authorization": f"Bearer {key}"}
        last: Exception | None = None
        with httpx.Client(timeout=self.cfg.timeout, transport=self._transport) as client:
            for attempt in range(self.cfg.retry_limit + 1):
                if attempt:
                    self._sleep(min(0.5 * 2 ** (attempt - 1), 8.0))
                try:
                    resp = client.post(self.cfg.endpoint_url, json=req.body(), headers=headers)
                except httpx.TransportError as e:  # includes timeouts
                    last = e
                    log.warning("request failed (attempt %d): %s", attempt + 1, e)
                    continue
                if resp.status_code == 429 or resp.status_code >= 500:
                    last = GatewayError(f"HTTP {resp.status_code}")
                    log.warning("transient HTTP %d (attempt %d)", resp.status_code, attempt + 1)
                    continue
                if resp.status_code >= 400:
                    raise GatewayError(f"HTTP {resp.status_code}: {resp.text[:200]}")
                try:
                    return resp.json()["choices"][0]["message"]["content"]
                except (ValueError, KeyError, IndexError, TypeError) as e:
                    raise GatewayError(f"malformed completion response: {e}") from None
        raise GatewayError(f"gave up after {self.cfg.retry_limit + 1} attempts: {last}")

    def _record(self, req: CompletionRequest, text: str) -> None:
        if self.record_path is None:
            return
        fp = req.request_fingerprint
        line = json.dumps({"fingerprint": fp, "request_summary": req.summary(),
                           "response_text": text}, ensure_ascii=False, sort_keys=True)
        with self._lock:
            if fp in self._recorded:
                return
            self._recorded.add(fp)
            with open(self.record_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")


_shared: dict = {}
_shared_lock = threading.Lock()


def complete(cfg: ProviderConfig, req: CompletionRequest) -> str:
    """One completion through a gateway shared per configuration."""
    with _shared_lock:
        gw = _shared.get(cfg)
        if gw is None:
            gw = _shared[cfg] = Gateway(cfg)
    return gw.complete(req)
