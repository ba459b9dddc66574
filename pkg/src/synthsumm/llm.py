"""Provider-agnostic chat-completion client.

Speaks the common chat-completions HTTP+JSON shape (a messages list in the
request, a choices list in the response); the endpoint URL and model id are
configuration. Every completion is cached one-file-per-entry under the cache
directory keyed by (prompt text, sampling params, attempt), which makes large
generation runs resumable and lets offline reruns finish without any network
traffic. A deterministic mock responder can stand in for the remote provider
so the whole pipeline is bit-reproducible in tests and CI.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from collections import deque
from dataclasses import dataclass, field

API_KEY_ENV = "SYNTHSUMM_API_KEY"
MOCK_TIMESTAMP = "1970-01-01T00:00:00+00:00"
BACKOFF_JITTER = 0.2  # +/- fraction around base * 2**k
RETRYABLE_STATUS = {429, 500, 502, 503, 504}


class ProviderError(RuntimeError):
    """Base class for provider-side failures."""


class CredentialError(ProviderError):
    """Authentication failed; never retried."""


class RateLimitExhausted(ProviderError):
    """Provider kept rate-limiting past the retry cap."""


class ProtocolError(ProviderError):
    """Provider returned a payload that does not match the expected shape."""


@dataclass(frozen=True)
class SamplingParams:
    """Decoding configuration forwarded to the provider."""

    model_id: str = "gpt-3.5-turbo"
    temperature: float = 1.0
    top_p: float = 1.0
    max_tokens: int = 256
    seed_hint: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError("top_p must be in (0, 1]")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")

    def to_record(self) -> dict:
        record = {"model_id": self.model_id, "temperature": self.temperature,
                  "top_p": self.top_p, "max_tokens": self.max_tokens}
        if self.seed_hint is not None:
            record["seed_hint"] = self.seed_hint
        return record


@dataclass
class CompletionRecord:
    """One completed (or cached) sampling call."""

    cache_key: str
    prompt_text: str
    params: SamplingParams
    attempt: int
    response_text: str
    provider: str  # "remote" | "mock"
    timestamp: str
    from_cache: bool = field(default=False, compare=False)

    def to_record(self) -> dict:
        return {"cache_key": self.cache_key, "prompt_text": self.prompt_text,
                "params": self.params.to_record(), "attempt": self.attempt,
                "response_text": self.response_text, "provider": self.provider,
                "timestamp": self.timestamp}

    @classmethod
    def from_record(cls, record: dict) -> "CompletionRecord":
        params = record["params"]
        return cls(cache_key=record["cache_key"], prompt_text=record["prompt_text"],
                   params=SamplingParams(model_id=params["model_id"],
                                         temperature=params["temperature"],
                                         top_p=params["top_p"],
                                         max_tokens=params["max_tokens"],
                                         seed_hint=params.get("seed_hint")),
                   attempt=record["attempt"], response_text=record["response_text"],
                   provider=record["provider"], timestamp=record["timestamp"])


def cache_key(prompt_text: str, params: SamplingParams, attempt: int) -> str:
    """Stable 64-hex digest; the attempt index keeps resamples distinct."""
    payload = json.dumps([prompt_text, params.model_id, params.temperature,
                          params.top_p, params.max_tokens, params.seed_hint,
                          attempt], ensure_ascii=False, sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def prompt_hash(prompt_text: str) -> str:
    """Digest of the prompt text alone; used by mock fixture scripts."""
    return hashlib.sha256(prompt_text.encode("utf-8")).hexdigest()


class ResponseCache:
    """One file per cache key, so a corrupt entry never poisons its siblings."""

    def __init__(self, directory: str):
        self.directory = directory
        os.makedirs(directory, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, key: str) -> str:
        return os.path.join(self.directory, f"{key}.json")

    def get(self, key: str) -> CompletionRecord | None:
        path = self._path(key)
        try:
            with open(path, "r", encoding="utf-8") as handle:
                return CompletionRecord.from_record(json.load(handle))
        except FileNotFoundError:
            return None
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            # Treat a damaged entry as a miss; it will be rewritten.
            return None

    def put(self, record: CompletionRecord) -> None:
        path = self._path(record.cache_key)
        tmp = f"{path}.tmp.{threading.get_ident()}"
        with open(tmp, "w", encoding="utf-8") as handle:
            json.dump(record.to_record(), handle, ensure_ascii=False)
        os.replace(tmp, path)


class RateLimiter:
    """Sliding-window requests-per-minute budget, safe under concurrency."""

    def __init__(self, rpm: int | None, clock=time.monotonic, sleep=time.sleep):
        self.rpm = rpm
        self._clock = clock
        self._sleep = sleep
        self._stamps: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        if self.rpm is None:
            return
        while True:
            with self._lock:
                now = self._clock()
                while self._stamps and now - self._stamps[0] >= 60.0:
                    self._stamps.popleft()
                if len(self._stamps) < self.rpm:
                    self._stamps.append(now)
                    return
                wait = 60.0 - (now - self._stamps[0])
            self._sleep(max(wait, 0.001))


class RequestsTransport:
    """HTTP POST via requests; returns (status_code, body_text)."""

    def __init__(self, timeout: float = 60.0):
        self.timeout = timeout

    def post(self, url: str, headers: dict, payload: dict) -> tuple[int, str]:
        import requests

        response = requests.post(url, headers=headers, json=payload,
                                 timeout=self.timeout)
        return response.status_code, response.text


class MockResponder:
    """Deterministic offline provider.

    A fixture script is a JSONL file of {"prefix": hex, "text": response}
    entries matched against the SHA-256 of the prompt text (first match
    wins; an empty prefix matches everything). Prompts with no script match
    fall back to echoing the prompt payload: the payload is returned as-is
    when its word count already sits inside the prompt's window, otherwise
    it is cycled to the window midpoint. The attempt index rotates the words
    so resamples differ, mimicking a sampling provider.
    """

    def __init__(self, script: list[tuple[str, str]] | None = None):
        self.script = list(script or [])

    @classmethod
    def from_file(cls, path: str) -> "MockResponder":
        entries: list[tuple[str, str]] = []
        with open(path, "r", encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                entries.append((record.get("prefix", ""), record["text"]))
        return cls(entries)

    def generate(self, prompt, params: SamplingParams, attempt: int) -> str:
        digest = prompt_hash(prompt.text)
        for prefix, text in self.script:
            if digest.startswith(prefix):
                return text
        words = prompt.payload.split()
        if not words:
            return ""
        if prompt.lo <= len(words) <= prompt.hi:
            k = len(words)
            offset = (attempt - 1) % k
        else:
            k = max(prompt.lo, min(prompt.hi, (prompt.lo + prompt.hi) // 2))
            k = max(k, 1)
            offset = (attempt - 1) % len(words)
        return " ".join(words[(offset + i) % len(words)] for i in range(k))


def _utc_now() -> str:
    from datetime import datetime, timezone

    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class LLMClient:
    """Thread-safe completion client with caching, retries, and rate limiting.

    Exactly one of (endpoint, mock) drives responses: when a mock responder
    is configured no network code runs at all. Retries apply to transient
    transport failures (429 and 5xx) with exponential backoff
    base * 2**k scaled by a deterministic jitter within +/-20%; credential
    failures are never retried.
    """

    def __init__(self, *, endpoint: str | None = None,
                 api_key_env: str = API_KEY_ENV,
                 cache_dir: str | None = None,
                 mock: MockResponder | None = None,
                 transport=None,
                 max_retries: int = 4,
                 backoff_base: float = 0.5,
                 rpm: int | None = None,
                 concurrency: int = 4,
                 system_role: bool = False,
                 sleep=time.sleep,
                 clock=time.monotonic):
        if endpoint is None and mock is None:
            raise ValueError("configure either an endpoint or a mock responder")
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.cache = ResponseCache(cache_dir) if cache_dir else None
        self.mock = mock
        self.transport = transport or (RequestsTransport() if endpoint else None)
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.concurrency = concurrency
        self.system_role = system_role
        self._sleep = sleep
        self._inflight = threading.BoundedSemaphore(concurrency)
        self.limiter = RateLimiter(rpm, clock=clock, sleep=sleep)
        self._stats_lock = threading.Lock()
        self.stats = {"provider_calls": 0, "network_calls": 0, "cache_hits": 0}
        self.backoff_log: list[float] = []

    def _bump(self, counter: str) -> None:
        with self._stats_lock:
            self.stats[counter] += 1

    def complete(self, prompt, params: SamplingParams, attempt: int = 1) -> CompletionRecord:
        """Return the provider's first message text for a rendered prompt."""
        if attempt < 1:
            raise ValueError("attempt must be >= 1")
        key = cache_key(prompt.text, params, attempt)
        if self.cache is not None:
            cached = self.cache.get(key)
            if cached is not None:
                self._bump("cache_hits")
                cached.from_cache = True
                return cached
        if self.mock is not None:
            self._bump("provider_calls")
            record = CompletionRecord(cache_key=key, prompt_text=prompt.text,
                                      params=params, attempt=attempt,
                                      response_text=self.mock.generate(prompt, params, attempt),
                                      provider="mock", timestamp=MOCK_TIMESTAMP)
        else:
            record = self._complete_remote(key, prompt, params, attempt)
        if self.cache is not None:
            self.cache.put(record)
        return record

    def _complete_remote(self, key: str, prompt, params: SamplingParams,
                         attempt: int) -> CompletionRecord:
        from .detrand import Substream

        api_key = os.environ.get(self.api_key_env, "")
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        role = "system" if self.system_role else "user"
        payload = {"model": params.model_id,
                   "messages": [{"role": role, "content": prompt.text}],
                   "temperature": params.temperature,
                   "top_p": params.top_p,
                   "max_tokens": params.max_tokens}
        if params.seed_hint is not None:
            payload["seed"] = params.seed_hint

        jitter = Substream(int(key[:12], 16), "backoff")
        self._bump("provider_calls")
        last_error: ProviderError | None = None
        with self._inflight:
            for retry in range(self.max_retries):
                self.limiter.acquire()
                self._bump("network_calls")
                try:
                    status, body = self.transport.post(self.endpoint, headers, payload)
                except OSError as exc:
                    status, body = None, str(exc)
                if status == 200:
                    return CompletionRecord(cache_key=key, prompt_text=prompt.text,
                                            params=params, attempt=attempt,
                                            response_text=self._parse_body(body),
                                            provider="remote", timestamp=_utc_now())
                if status in (401, 403):
                    raise CredentialError(f"authentication failed (HTTP {status})")
                if status is not None and status not in RETRYABLE_STATUS:
                    raise ProviderError(f"HTTP {status}: {body[:200]}")
                last_error = (RateLimitExhausted(f"rate limited: {body[:200]}")
                              if status == 429
                              else ProviderError(f"transient failure: {body[:200]}"))
                if retry < self.max_retries - 1:
                    factor = 1.0 + BACKOFF_JITTER * (2.0 * jitter.random() - 1.0)
                    delay = self.backoff_base * (2 ** retry) * factor
                    self.backoff_log.append(delay)
                    self._sleep(delay)
        raise last_error if last_error is not None else ProviderError("no attempts made")

    @staticmethod
    def _parse_body(body: str) -> str:
        try:
            data = json.loads(body)
            content = data["choices"][0]["message"]["content"]
        except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"malformed provider payload: {body[:200]!r}") from exc
        if not isinstance(content, str):
            raise ProtocolError(f"non-string message content: {body[:200]!r}")
        return content
