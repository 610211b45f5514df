"""Bundled deterministic scenario fixtures and their fact stores."""
from __future__ import annotations

from importlib import resources
from pathlib import Path

from ..backends import ScriptedScenario
from ..knowledge import EMPTY_STORE, FactStore, load_store_file


class ScenarioNotFound(Exception):
    pass


def _bundle_dir() -> Path:
    return Path(str(resources.files(__name__)))


def list_scenarios() -> list[str]:
    return sorted(p.stem for p in _bundle_dir().glob("*.json"))


def load_scenario(name_or_path: str) -> ScriptedScenario:
    """Load a bundled scenario by name, or any scenario file by path."""
    candidate = Path(name_or_path)
    if candidate.suffix == ".json" and candidate.exists():
        return ScriptedScenario.from_file(candidate)
    bundled = _bundle_dir() / f"{name_or_path}.json"
    if bundled.exists():
        return ScriptedScenario.from_file(bundled)
    raise ScenarioNotFound(
        f"no scenario named {name_or_path!r}; bundled: {', '.join(list_scenarios())}"
    )


def scenario_store(scenario: ScriptedScenario) -> FactStore:
    if scenario.facts_file is None:
        return EMPTY_STORE
    return load_store_file(scenario.facts_file)
