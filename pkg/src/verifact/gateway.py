"""Uniform access to chat and embedding providers.

Two providers share one interface: an HTTP client for any
chat-completions-compatible endpoint, and a deterministic stub that
replays recorded responses from a fixture file (chat) or derives
vectors from a seeded hash (embeddings). A content-addressed response
cache and a thread-safe cost ledger sit in front of either, so repeated
runs are free and accounted identically.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np
import requests

from .errors import ConfigError, FixtureMissError, ParseError, TransportError
from .prompts import RenderedPrompt, prompt_sha256

__all__ = [
    "DEFAULT_TEMPERATURE",
    "REPLICATION_TEMPERATURE",
    "ModelRequest",
    "ModelResponse",
    "EmbeddingVector",
    "CostLedger",
    "ResponseCache",
    "StubProvider",
    "HttpProvider",
    "ModelGateway",
    "estimate_cost",
    "API_KEY_ENV",
    "ENDPOINT_ENV",
]

# 0.0 gives the best and most reproducible results for new runs; 0.5 is
# the preset under which the main reference tables were produced.
DEFAULT_TEMPERATURE = 0.0
REPLICATION_TEMPERATURE = 0.5

API_KEY_ENV = "VERIFACT_API_KEY"
ENDPOINT_ENV = "VERIFACT_ENDPOINT"


@dataclass(frozen=True)
class ModelRequest:
    model_id: str
    prompt: RenderedPrompt
    temperature: float = DEFAULT_TEMPERATURE
    run_index: int = 0

    def __post_init__(self) -> None:
        if not (0.0 <= self.temperature <= 2.0):
            raise ConfigError(f"temperature outside [0,2]: {self.temperature}")
        if self.run_index < 0:
            raise ConfigError(f"negative run_index: {self.run_index}")


@dataclass(frozen=True)
class ModelResponse:
    request: ModelRequest
    raw_text: str
    input_tokens: int
    output_tokens: int
    provider_latency: float
    cache_hit: bool = False


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    model_id: str

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def _whitespace_tokens(text: str) -> int:
    return len(text.split())


class CostLedger:
    """Per-model token accumulators plus a price table, thread-safe."""

    def __init__(self, price_table: dict[str, tuple[float, float]] | None = None):
        self.price_table = dict(price_table or {})
        self._totals: dict[str, list[int]] = {}
        self._lock = threading.Lock()

    def record(self, model_id: str, input_tokens: int, output_tokens: int) -> None:
        with self._lock:
            totals = self._totals.setdefault(model_id, [0, 0])
            totals[0] += input_tokens
            totals[1] += output_tokens

    def totals(self, model_id: str) -> tuple[int, int]:
        with self._lock:
            in_tok, out_tok = self._totals.get(model_id, (0, 0))
        return in_tok, out_tok

    def models(self) -> list[str]:
        with self._lock:
            return sorted(self._totals)

    def estimate_cost(self, model_id: str) -> float:
        if model_id not in self.price_table:
            raise ConfigError(f"no price configured for model {model_id!r}")
        in_price, out_price = self.price_table[model_id]
        in_tok, out_tok = self.totals(model_id)
        return in_tok / 1000.0 * in_price + out_tok / 1000.0 * out_price


def estimate_cost(ledger: CostLedger, model_id: str) -> float:
    """usd = input_tokens/1000 * in_price + output_tokens/1000 * out_price."""
    return ledger.estimate_cost(model_id)


def _cache_key(model_id: str, prompt_hash: str, temperature: float,
               run_index: int) -> str:
    canonical = f"{model_id}\x00{prompt_hash}\x00{temperature!r}\x00{run_index}"
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class ResponseCache:
    """Content-addressed response store, optionally persisted as JSONL."""

    def __init__(self, path: str | Path | None = None):
        self._path = Path(path) if path is not None else None
        self._entries: dict[str, dict] = {}
        self._lock = threading.Lock()
        if self._path is not None and self._path.exists():
            with self._path.open(encoding="utf-8") as handle:
                for line in handle:
                    if line.strip():
                        entry = json.loads(line)
                        self._entries[entry["key"]] = entry

    def get(self, key: str) -> dict | None:
        with self._lock:
            return self._entries.get(key)

    def put(self, key: str, entry: dict) -> None:
        entry = {"key": key, **entry}
        with self._lock:
            if key in self._entries:
                return
            self._entries[key] = entry
            if self._path is not None:
                with self._path.open("a", encoding="utf-8") as handle:
                    handle.write(json.dumps(entry, ensure_ascii=False,
                                            separators=(",", ":")) + "\n")

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)


class Provider(Protocol):  # pragma: no cover
    def chat_text(self, model_id: str, prompt_text: str, temperature: float,
                  run_index: int) -> tuple[str, int, int]: ...

    def embed_values(self, model_id: str, text: str) -> list[float]: ...


class StubProvider:
    """Offline provider: chat replays fixtures, embeddings hash the text.

    Chat fixtures are JSONL lines {prompt_sha256, run_index, text,
    input_tokens?, output_tokens?}; token counts default to a whitespace
    approximation. Embeddings are unit-seeded draws so the same text
    always maps to the same vector.
    """

    def __init__(self, fixtures_path: str | Path | None = None,
                 embedding_dim: int = 64):
        if embedding_dim <= 0:
            raise ConfigError(f"embedding_dim must be positive: {embedding_dim}")
        self.embedding_dim = embedding_dim
        self._fixtures: dict[tuple[str, int], dict] = {}
        if fixtures_path is not None:
            path = Path(fixtures_path)
            with path.open(encoding="utf-8") as handle:
                for line_no, line in enumerate(handle, start=1):
                    if not line.strip():
                        continue
                    try:
                        entry = json.loads(line)
                        key = (entry["prompt_sha256"], int(entry["run_index"]))
                        self._fixtures[key] = entry
                    except (json.JSONDecodeError, KeyError, ValueError) as exc:
                        raise ParseError(f"{path}:{line_no}: bad fixture: {exc}") from None

    def chat_text(self, model_id: str, prompt_text: str, temperature: float,
                  run_index: int) -> tuple[str, int, int]:
        prompt_hash = prompt_sha256(prompt_text)
        entry = self._fixtures.get((prompt_hash, run_index))
        if entry is None:
            raise FixtureMissError(
                f"no fixture for prompt {prompt_hash[:12]}... run {run_index}")
        text = str(entry["text"])
        input_tokens = int(entry.get("input_tokens", _whitespace_tokens(prompt_text)))
        output_tokens = int(entry.get("output_tokens", _whitespace_tokens(text)))
        return text, input_tokens, output_tokens

    def embed_values(self, model_id: str, text: str) -> list[float]:
        digest = hashlib.sha256(f"{model_id}\x00{text}".encode("utf-8")).digest()
        seed = int.from_bytes(digest[:8], "big")
        rng = np.random.default_rng(seed)
        return rng.standard_normal(self.embedding_dim).tolist()


class HttpProvider:
    """Chat-completions-compatible HTTP client with capped backoff retries.

    Transient failures (network errors, 429, 5xx) are retried with
    exponential backoff capped at ``backoff_cap`` seconds; any other
    4xx is a caller error and fails immediately. The API key comes from
    the environment only, never from configuration files.
    """

    def __init__(self, endpoint: str | None = None, timeout: float = 60.0,
                 max_retries: int = 5, backoff_base: float = 0.5,
                 backoff_cap: float = 30.0):
        endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        if not endpoint:
            raise ConfigError(f"no endpoint configured; set {ENDPOINT_ENV} "
                              "or pass one in the config file")
        api_key = os.environ.get(API_KEY_ENV)
        if not api_key:
            raise ConfigError(f"missing API credential; set {API_KEY_ENV}")
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self._headers = {"Authorization": f"Bearer {api_key}",
                         "Content-Type": "application/json"}
        self._sleep = time.sleep

    def _post(self, path: str, payload: dict) -> dict:
        url = f"{self.endpoint}{path}"
        last_error = "exhausted retries"
        for attempt in range(self.max_retries + 1):
            if attempt:
                self._sleep(min(self.backoff_cap,
                                self.backoff_base * 2 ** (attempt - 1)))
            try:
                response = requests.post(url, json=payload,
                                         headers=self._headers,
                                         timeout=self.timeout)
            except requests.RequestException as exc:
                last_error = f"network error: {exc}"
                continue
            if response.status_code == 429 or response.status_code >= 500:
                last_error = f"HTTP {response.status_code}"
                continue
            if response.status_code >= 400:
                raise TransportError(
                    f"HTTP {response.status_code} from {url}: "
                    f"{response.text[:200]} (not retried)")
            try:
                return response.json()
            except ValueError as exc:
                raise TransportError(f"non-JSON response from {url}: {exc}") from None
        raise TransportError(f"{url}: {last_error} after "
                             f"{self.max_retries + 1} attempts")

    def chat_text(self, model_id: str, prompt_text: str, temperature: float,
                  run_index: int) -> tuple[str, int, int]:
        payload = {
            "model": model_id,
            "messages": [{"role": "user", "content": prompt_text}],
            "temperature": temperature,
        }
        body = self._post("/chat/completions", payload)
        try:
            text = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise TransportError(f"malformed chat response: {str(body)[:200]}") from None
        if text is None or text == "":
            raise TransportError("provider returned an empty completion")
        usage = body.get("usage", {})
        input_tokens = int(usage.get("prompt_tokens",
                                     _whitespace_tokens(prompt_text)))
        output_tokens = int(usage.get("completion_tokens",
                                      _whitespace_tokens(text)))
        return str(text), input_tokens, output_tokens

    def embed_values(self, model_id: str, text: str) -> list[float]:
        body = self._post("/embeddings", {"model": model_id, "input": text})
        try:
            return [float(v) for v in body["data"][0]["embedding"]]
        except (KeyError, IndexError, TypeError, ValueError):
            raise TransportError(
                f"malformed embedding response: {str(body)[:200]}") from None


@dataclass
class ModelGateway:
    """Provider access with caching, cost accounting, and bounded fan-out."""

    provider: Provider
    ledger: CostLedger = field(default_factory=CostLedger)
    cache: ResponseCache | None = None
    concurrency: int = 4

    def __post_init__(self) -> None:
        self._embed_memo: dict[tuple[str, str], EmbeddingVector] = {}
        self._embed_lock = threading.Lock()

    def chat(self, request: ModelRequest) -> ModelResponse:
        prompt_hash = prompt_sha256(request.prompt.text)
        key = _cache_key(request.model_id, prompt_hash,
                         request.temperature, request.run_index)
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return ModelResponse(
                    request=request,
                    raw_text=hit["raw_text"],
                    input_tokens=int(hit["input_tokens"]),
                    output_tokens=int(hit["output_tokens"]),
                    provider_latency=0.0,
                    cache_hit=True,
                )
        started = time.monotonic()
        text, input_tokens, output_tokens = self.provider.chat_text(
            request.model_id, request.prompt.text,
            request.temperature, request.run_index)
        latency = time.monotonic() - started
        self.ledger.record(request.model_id, input_tokens, output_tokens)
        if self.cache is not None:
            self.cache.put(key, {
                "model_id": request.model_id,
                "prompt_sha256": prompt_hash,
                "temperature": request.temperature,
                "run_index": request.run_index,
                "raw_text": text,
                "input_tokens": input_tokens,
                "output_tokens": output_tokens,
            })
        return ModelResponse(request=request, raw_text=text,
                             input_tokens=input_tokens,
                             output_tokens=output_tokens,
                             provider_latency=latency)

    def chat_many(self, requests_: Sequence[ModelRequest]) -> list[ModelResponse]:
        """Issue requests with at most ``concurrency`` in flight.

        Results come back in input order regardless of completion order.
        """
        if not requests_:
            return []
        with ThreadPoolExecutor(max_workers=max(1, self.concurrency)) as pool:
            return list(pool.map(self.chat, requests_))

    def embed(self, text: str, model_id: str) -> EmbeddingVector:
        if not text:
            raise ConfigError("cannot embed empty text")
        memo_key = (model_id, hashlib.sha256(text.encode("utf-8")).hexdigest())
        with self._embed_lock:
            cached = self._embed_memo.get(memo_key)
        if cached is not None:
            return cached
        values = self.provider.embed_values(model_id, text)
        self.ledger.record(model_id, _whitespace_tokens(text), 0)
        vector = EmbeddingVector(values=tuple(values), model_id=model_id)
        with self._embed_lock:
            self._embed_memo[memo_key] = vector
        return vector

    def embed_many(self, texts: Iterable[str], model_id: str) -> list[EmbeddingVector]:
        return [self.embed(text, model_id) for text in texts]
