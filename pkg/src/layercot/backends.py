"""Agent role contracts and the three interchangeable backends.

A backend is anything with ``complete(step, prompt, layer=..., attempt=...)``
returning text. The scripted backend replays canned fixtures keyed by
(step, layer, attempt) and is what makes end-to-end tests network-free; the
chat backend speaks the OpenAI-style /chat/completions wire format; the echo
backend returns its prompt and exists for round-trip tests.

One backend instance may serve every role (single-LLM deployment); the
AgentTeam mapping keeps role resolution explicit either way.
"""
from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any
from urllib.parse import urlparse

import requests

from .prompts import STEP_INTEGRATE, STEP_PLAN, STEP_REASON, STEP_REFINE

logger = logging.getLogger(__name__)


class BackendError(Exception):
    """Transport failure or unusable backend output; sessions stay resumable."""


class EmptyResponse(BackendError):
    pass


class RoleKind(str, Enum):
    """Agent roles; each pipeline step maps to exactly one.

    plan -> PLANNER, reason/refine -> REASONER, verdicts -> VERIFIER,
    fact-store access -> RETRIEVER, feedback intake -> USER_PROXY.
    """

    PLANNER = "Planner"
    REASONER = "Reasoner"
    VERIFIER = "Verifier"
    RETRIEVER = "Retriever"
    USER_PROXY = "UserProxy"


class Backend:
    """Interface for text-completion handles. Stateless between calls."""

    name = "backend"

    def complete(self, step: str, prompt: str, *, layer: int = -1, attempt: int = 1) -> str:
        raise NotImplementedError


class EchoBackend(Backend):
    """Returns the rendered prompt unchanged. Test double."""

    name = "echo"

    def complete(self, step: str, prompt: str, *, layer: int = -1, attempt: int = 1) -> str:
        return prompt


@dataclass
class ScriptedScenario:
    """A deterministic fixture: planned objectives plus canned responses.

    ``responses`` is keyed by (step, layer, attempt); integrate/vanilla
    entries use layer -1. ``facts_file`` points at the companion fact store.
    """

    name: str
    planned_layers: list[str]
    responses: dict[tuple[str, int, int], str]
    facts_file: Path | None = None
    query: str | None = None
    domain: str = ""

    @classmethod
    def from_dict(cls, data: dict[str, Any], base_dir: Path | None = None) -> ScriptedScenario:
        responses: dict[tuple[str, int, int], str] = {}
        for entry in data.get("responses", []):
            key = (entry["step"], int(entry.get("layer", -1)), int(entry.get("attempt", 1)))
            responses[key] = entry["text"]
        facts = data.get("facts")
        facts_file = None
        if facts:
            facts_file = Path(facts)
            if base_dir is not None and not facts_file.is_absolute():
                facts_file = base_dir / facts_file
        return cls(
            name=data["name"],
            planned_layers=list(data.get("layers", [])),
            responses=responses,
            facts_file=facts_file,
            query=data.get("query"),
            domain=data.get("domain", ""),
        )

    @classmethod
    def from_file(cls, path: Path | str) -> ScriptedScenario:
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh), base_dir=path.parent)

    def plan_text(self) -> str:
        return "\n".join(f"LAYER: {objective}" for objective in self.planned_layers)

    def validate_complete(self, max_refinements: int) -> list[str]:
        """Keys reachable within the refinement budget but missing a response."""
        missing = []
        for layer in range(len(self.planned_layers)):
            if (STEP_REASON, layer, 1) not in self.responses:
                missing.append(f"reason layer {layer} attempt 1")
            for attempt in range(2, max_refinements + 2):
                if (STEP_REFINE, layer, attempt) not in self.responses:
                    missing.append(f"refine layer {layer} attempt {attempt}")
        if (STEP_INTEGRATE, -1, 1) not in self.responses:
            missing.append("integrate")
        return missing


class ScriptedBackend(Backend):
    """Fixture-driven backend: identical keys yield byte-identical responses."""

    name = "scripted"

    def __init__(self, scenario: ScriptedScenario) -> None:
        self.scenario = scenario

    def complete(self, step: str, prompt: str, *, layer: int = -1, attempt: int = 1) -> str:
        if step == STEP_PLAN:
            return self.scenario.plan_text()
        key = (step, layer, attempt)
        try:
            return self.scenario.responses[key]
        except KeyError:
            raise BackendError(
                f"scenario {self.scenario.name!r} has no response for "
                f"step={step!r} layer={layer} attempt={attempt}"
            ) from None


@dataclass
class ChatBackendConfig:
    """Connection settings for an OpenAI-compatible chat endpoint.

    The auth token is read from the named environment variable at call time
    and never stored in config files, logs, or traces.
    """

    base_url: str
    model_name: str
    auth_token_env_name: str = "LAYERCOT_API_TOKEN"
    timeout_seconds: float = 60.0
    max_retries: int = 2
    retry_backoff_seconds: float = 0.5

    def __post_init__(self) -> None:
        parsed = urlparse(self.base_url)
        if not parsed.scheme or not parsed.netloc:
            raise ValueError(f"base_url {self.base_url!r} is not a valid URL")
        if self.timeout_seconds <= 0:
            raise ValueError("timeout must be > 0")

    def to_dict(self) -> dict[str, Any]:
        return {
            "base_url": self.base_url,
            "model_name": self.model_name,
            "auth_token_env_name": self.auth_token_env_name,
            "timeout_seconds": self.timeout_seconds,
            "max_retries": self.max_retries,
            "retry_backoff_seconds": self.retry_backoff_seconds,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ChatBackendConfig:
        return cls(
            base_url=d["base_url"],
            model_name=d["model_name"],
            auth_token_env_name=d.get("auth_token_env_name", "LAYERCOT_API_TOKEN"),
            timeout_seconds=d.get("timeout_seconds", 60.0),
            max_retries=d.get("max_retries", 2),
            retry_backoff_seconds=d.get("retry_backoff_seconds", 0.5),
        )


class ChatBackend(Backend):
    name = "chat"

    def __init__(self, config: ChatBackendConfig, session: requests.Session | None = None) -> None:
        self.config = config
        self._http = session or requests.Session()

    def complete(self, step: str, prompt: str, *, layer: int = -1, attempt: int = 1) -> str:
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        payload = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
        }
        token = os.environ.get(self.config.auth_token_env_name, "")
        headers = {"Content-Type": "application/json"}
        if token:
            headers["Authorization"] = f"Bearer {token}"

        last_error: Exception | None = None
        for retry in range(self.config.max_retries + 1):
            if retry:
                time.sleep(self.config.retry_backoff_seconds * (2 ** (retry - 1)))
            try:
                response = self._http.post(
                    url, json=payload, headers=headers, timeout=self.config.timeout_seconds
                )
            except requests.RequestException as exc:
                # Transport error: retry. Exception text never includes headers.
                last_error = exc
                logger.warning("chat backend transport error (try %d): %s",
                               retry + 1, type(exc).__name__)
                continue
            if response.status_code >= 500:
                last_error = BackendError(f"server error HTTP {response.status_code}")
                continue
            if response.status_code >= 400:
                raise BackendError(f"chat backend rejected request: HTTP {response.status_code}")
            try:
                content = response.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError) as exc:
                raise BackendError(f"malformed chat completion response: {exc}") from None
            if not content or not content.strip():
                raise EmptyResponse(f"chat backend returned an empty message for step {step!r}")
            return content
        raise BackendError(
            f"chat backend unreachable after {self.config.max_retries + 1} attempts: "
            f"{type(last_error).__name__ if last_error else 'unknown'}"
        )


@dataclass
class AgentTeam:
    """Resolved role handles for one session.

    Verification and retrieval run against the fact store (no LLM backend);
    the optional ``verifier`` slot exists for agent-sourced verdicts but no
    such verifier ships here.
    """

    planner: Backend
    reasoner: Backend
    verifier: Backend | None = None

    @classmethod
    def single(cls, backend: Backend) -> AgentTeam:
        return cls(planner=backend, reasoner=backend)

    def resolve(self, role: RoleKind) -> Backend | None:
        mapping: dict[RoleKind, Backend | None] = {
            RoleKind.PLANNER: self.planner,
            RoleKind.REASONER: self.reasoner,
            RoleKind.VERIFIER: self.verifier,
            RoleKind.RETRIEVER: None,
            RoleKind.USER_PROXY: None,
        }
        return mapping[role]


class CountingBackend(Backend):
    """Wraps another backend and counts calls; used for cost accounting checks."""

    def __init__(self, inner: Backend) -> None:
        self.inner = inner
        self.calls = 0
        self.call_log: list[tuple[str, int, int]] = []

    @property
    def name(self) -> str:  # type: ignore[override]
        return self.inner.name

    def complete(self, step: str, prompt: str, *, layer: int = -1, attempt: int = 1) -> str:
        self.calls += 1
        self.call_log.append((step, layer, attempt))
        return self.inner.complete(step, prompt, layer=layer, attempt=attempt)
