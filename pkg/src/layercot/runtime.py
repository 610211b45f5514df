"""Turn a serialized backend selector into live role handles.

This is what lets a persisted session resume: the selector travels in the
SessionCreated event, and the same selector rebuilds the same team.
"""
from __future__ import annotations

from .backends import (
    AgentTeam,
    Backend,
    ChatBackend,
    ChatBackendConfig,
    EchoBackend,
    ScriptedBackend,
)
from .knowledge import EMPTY_STORE, FactStore, load_store_file
from .scenarios import load_scenario, scenario_store
from .types import BackendSelector


def build_backend(selector: BackendSelector) -> tuple[Backend, FactStore]:
    if selector.kind == "echo":
        store = load_store_file(selector.facts) if selector.facts else EMPTY_STORE
        return EchoBackend(), store
    if selector.kind == "scripted":
        if not selector.scenario:
            raise ValueError("scripted backend needs a scenario name or path")
        scenario = load_scenario(selector.scenario)
        return ScriptedBackend(scenario), scenario_store(scenario)
    if selector.kind == "chat":
        if not selector.chat:
            raise ValueError("chat backend needs connection settings")
        store = load_store_file(selector.facts) if selector.facts else EMPTY_STORE
        return ChatBackend(ChatBackendConfig.from_dict(selector.chat)), store
    raise ValueError(f"unknown backend kind {selector.kind!r}")


def build_team(selector: BackendSelector) -> tuple[AgentTeam, FactStore]:
    backend, store = build_backend(selector)
    return AgentTeam.single(backend), store
