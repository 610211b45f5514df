from __future__ import annotations

import pytest

from layercot.backends import AgentTeam, ScriptedBackend, ScriptedScenario
from layercot.knowledge import load_store
from layercot.types import BackendSelector, EngineConfig, Query, Session, VerificationMode


def make_scenario(
    num_layers: int,
    *,
    name: str = "synthetic",
    claim_lines: dict[int, str] | None = None,
    refine_lines: dict[tuple[int, int], str] | None = None,
) -> ScriptedScenario:
    """Build an in-memory scenario whose layer k emits claim_lines[k]."""
    claim_lines = claim_lines or {}
    responses = []
    for k in range(num_layers):
        body = claim_lines.get(k, "CLAIM: sys | check | ok")
        responses.append(
            {"step": "reason", "layer": k, "attempt": 1, "text": f"layer {k} analysis.\n{body}"}
        )
        for attempt in (2, 3):
            text = (refine_lines or {}).get(
                (k, attempt), f"layer {k} revised (attempt {attempt}).\nCLAIM: sys | check | ok"
            )
            responses.append({"step": "refine", "layer": k, "attempt": attempt, "text": text})
    responses.append({"step": "integrate", "layer": -1, "attempt": 1, "text": "combined answer"})
    responses.append({"step": "vanilla", "layer": -1, "attempt": 1, "text": "vanilla answer"})
    return ScriptedScenario.from_dict(
        {
            "name": name,
            "layers": [f"objective {k}" for k in range(num_layers)],
            "responses": responses,
        }
    )


@pytest.fixture
def basic_store():
    return load_store("@functional check\nsys | check | ok | true\nsys | other | fine | true\n")


@pytest.fixture
def two_layer_team(basic_store):
    scenario = make_scenario(2)
    return AgentTeam.single(ScriptedBackend(scenario)), basic_store


def new_session(mode: str = "automatic", *, max_refinements: int = 2,
                max_layers: int = 5, on_exhausted: str = "fail_session",
                query: str = "is the system healthy?") -> Session:
    config = EngineConfig(
        max_layers=max_layers,
        max_refinements=max_refinements,
        verification_mode=VerificationMode(mode),
        backend=BackendSelector(kind="echo"),
        on_exhausted=on_exhausted,
    )
    return Session.create(Query(text=query), config)
