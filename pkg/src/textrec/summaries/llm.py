"""Provider-agnostic completion clients and the summary-generation entry point.

Three clients share one interface: an HTTP client for hosted chat models,
a canned client that replays stored completions byte for byte, and an
offline client that synthesizes deterministic summaries from the prompt
itself. Every call can be recorded for audit and later replay.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from ..models.genre import GenreProfile
from .prompts import PromptBundle
from .records import UserSummary
from .synth import synthesize_offline

ENDPOINT_ENV = "TEXTREC_LLM_ENDPOINT"
API_KEY_ENV = "TEXTREC_LLM_API_KEY"
MODEL_ENV = "TEXTREC_LLM_MODEL"


class GenerationError(RuntimeError):
    """Provider failed after retries, or returned an unusable completion."""

    def __init__(self, message: str, last_response: str | None = None):
        super().__init__(message)
        self.last_response = last_response


@dataclass(frozen=True)
class ProviderConfig:
    endpoint: str = ""
    model: str = ""
    temperature: float = 0.0
    max_retries: int = 3
    timeout_s: float = 60.0
    api_key_env: str = API_KEY_ENV

    @staticmethod
    def from_env() -> "ProviderConfig":
        return ProviderConfig(endpoint=os.environ.get(ENDPOINT_ENV, ""),
                              model=os.environ.get(MODEL_ENV, ""))


class CompletionClient(Protocol):
    name: str

    def complete(self, messages: Sequence[dict], seed: int) -> str: ...


def request_key(messages: Sequence[dict], seed: int) -> str:
    doc = json.dumps({"messages": list(messages), "seed": seed}, sort_keys=True)
    return hashlib.sha256(doc.encode()).hexdigest()


class HTTPCompletionClient:
    """Chat-completions client for any endpoint speaking the common JSON shape.

    Temperature 0 and the seed are always sent; providers that ignore them
    simply do. Requests retry on transport failure up to the configured cap,
    and a semaphore bounds concurrent in-flight calls.
    """

    def __init__(self, config: ProviderConfig, max_in_flight: int = 4):
        if not config.endpoint or not config.model:
            raise GenerationError("provider endpoint and model must be configured")
        self.config = config
        self.name = config.model
        self._slots = threading.Semaphore(max_in_flight)

    def complete(self, messages: Sequence[dict], seed: int) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.config.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        body = {
            "model": self.config.model,
            "messages": list(messages),
            "temperature": self.config.temperature,
            "seed": seed,
        }
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries):
            try:
                with self._slots:
                    resp = requests.post(self.config.endpoint, json=body, headers=headers,
                                         timeout=self.config.timeout_s)
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except Exception as exc:  # transport or shape failure; retry
                last_error = exc
                time.sleep(min(2.0 ** attempt, 8.0))
        raise GenerationError(
            f"provider failed after {self.config.max_retries} attempts: {last_error}",
            last_response=str(last_error),
        )


class CannedCompletionClient:
    """Replays stored completions keyed by (messages, seed); never networks."""

    def __init__(self, path: str | Path):
        self.name = "canned"
        self.path = Path(path)
        self._store: dict[str, str] = {}
        if self.path.exists():
            with self.path.open() as fh:
                for line in fh:
                    if line.strip():
                        doc = json.loads(line)
                        self._store[doc["key"]] = doc["response"]

    def complete(self, messages: Sequence[dict], seed: int) -> str:
        key = request_key(messages, seed)
        if key not in self._store:
            raise GenerationError(f"no canned response for request {key[:12]}")
        return self._store[key]


class RecordingClient:
    """Wraps another client and logs every raw request/response pair."""

    def __init__(self, inner: CompletionClient, path: str | Path):
        self.inner = inner
        self.name = inner.name
        self.path = Path(path)
        self._lock = threading.Lock()

    def complete(self, messages: Sequence[dict], seed: int) -> str:
        response = self.inner.complete(messages, seed)
        record = {
            "key": request_key(messages, seed),
            "messages": list(messages),
            "seed": seed,
            "response": response,
            "client": self.name,
        }
        with self._lock, self.path.open("a") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
        return response


_ITEM_LINE_RE = re.compile(r"^(.+), ([1-5]), (.+)$", re.MULTILINE)


class OfflineSynthesizerClient:
    """Deterministic stand-in provider: reads the rendered item lines out of
    the prompt and synthesizes a four-block summary from their genres."""

    name = "offline-synthesizer"

    def complete(self, messages: Sequence[dict], seed: int) -> str:
        text = "\n".join(m.get("content", "") for m in messages)
        liked: dict[str, float] = {}
        disliked: list[str] = []
        all_genres: list[str] = []
        for title, rating, genre_text in _ITEM_LINE_RE.findall(text):
            genres = [g.strip() for g in genre_text.split("|") if g.strip()]
            for g in genres:
                if g not in all_genres:
                    all_genres.append(g)
                if int(rating) >= 4:
                    liked[g] = liked.get(g, 0.0) + 1.0
                elif int(rating) <= 2 and g not in disliked:
                    disliked.append(g)
        if not all_genres:
            raise GenerationError("prompt contains no parseable item lines")
        weights = np.asarray([liked.get(g, 0.0) for g in sorted(all_genres)])
        if weights.sum() == 0:
            weights = np.ones(len(all_genres))
        profile = GenreProfile(weights / weights.sum(), tuple(sorted(all_genres)))
        return synthesize_offline(profile, [], disliked[:2], seed).text


def generate_summary(prompt: PromptBundle, client: CompletionClient, user: int,
                     seed: int = 0) -> UserSummary:
    """Run the generation prompt through a client and wrap the completion
    with full provenance. Raises on empty completions."""
    messages = [{"role": "system", "content": prompt.system}]
    messages += [{"role": "user", "content": turn} for turn in prompt.user_turns]
    text = client.complete(messages, seed)
    if not text or not text.strip():
        raise GenerationError("provider returned an empty completion", last_response=text)
    return UserSummary(user=user, text=text.strip(), source=client.name, seed=seed)
