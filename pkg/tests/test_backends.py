from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from conftest import make_scenario, new_session

from layercot import engine
from layercot.backends import (
    AgentTeam,
    BackendError,
    ChatBackend,
    ChatBackendConfig,
    EchoBackend,
    EmptyResponse,
    RoleKind,
    ScriptedBackend,
    ScriptedScenario,
)
from layercot.knowledge import EMPTY_STORE
from layercot.scenarios import list_scenarios, load_scenario, scenario_store

TOKEN = "sk-not-a-real-token-5551212"


class _ChatHandler(BaseHTTPRequestHandler):
    behavior = "ok"
    requests_seen: list[dict] = []
    headers_seen: list[dict] = []

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).requests_seen.append({"path": self.path, "body": body})
        type(self).headers_seen.append(dict(self.headers))
        behavior = type(self).behavior
        if behavior == "flaky_then_ok" and len(type(self).requests_seen) == 1:
            self.send_response(503)
            self.end_headers()
            return
        if behavior == "http_400":
            self.send_response(400)
            self.end_headers()
            return
        if behavior == "empty":
            payload = {"choices": [{"message": {"content": "   "}}]}
        else:
            prompt = body["messages"][0]["content"]
            payload = {"choices": [{"message": {"content": f"echoed: {prompt[:40]}"}}]}
        data = json.dumps(payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture
def chat_server():
    server = HTTPServer(("127.0.0.1", 0), _ChatHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _ChatHandler.behavior = "ok"
    _ChatHandler.requests_seen = []
    _ChatHandler.headers_seen = []
    yield f"http://127.0.0.1:{server.server_port}/v1"
    server.shutdown()


def chat_config(base_url, **kwargs):
    defaults = dict(
        base_url=base_url,
        model_name="test-model",
        auth_token_env_name="LAYERCOT_TEST_TOKEN",
        timeout_seconds=5.0,
        max_retries=1,
        retry_backoff_seconds=0.0,
    )
    defaults.update(kwargs)
    return ChatBackendConfig(**defaults)


def test_chat_backend_wire_format(chat_server, monkeypatch):
    monkeypatch.setenv("LAYERCOT_TEST_TOKEN", TOKEN)
    backend = ChatBackend(chat_config(chat_server))
    out = backend.complete("reason", "hello world", layer=0, attempt=1)
    assert out.startswith("echoed:")
    request = _ChatHandler.requests_seen[0]
    assert request["path"] == "/v1/chat/completions"
    assert request["body"]["model"] == "test-model"
    assert request["body"]["messages"] == [{"role": "user", "content": "hello world"}]
    assert _ChatHandler.headers_seen[0]["Authorization"] == f"Bearer {TOKEN}"


def test_chat_backend_retries_transport_errors(chat_server, monkeypatch):
    monkeypatch.setenv("LAYERCOT_TEST_TOKEN", TOKEN)
    _ChatHandler.behavior = "flaky_then_ok"
    backend = ChatBackend(chat_config(chat_server))
    assert backend.complete("reason", "retry me").startswith("echoed:")
    assert len(_ChatHandler.requests_seen) == 2


def test_chat_backend_gives_up_after_retries(monkeypatch):
    monkeypatch.setenv("LAYERCOT_TEST_TOKEN", TOKEN)
    backend = ChatBackend(chat_config("http://127.0.0.1:9", max_retries=1))
    with pytest.raises(BackendError) as err:
        backend.complete("reason", "unreachable")
    assert TOKEN not in str(err.value)


def test_chat_backend_4xx_is_immediate_error(chat_server, monkeypatch):
    monkeypatch.setenv("LAYERCOT_TEST_TOKEN", TOKEN)
    _ChatHandler.behavior = "http_400"
    backend = ChatBackend(chat_config(chat_server))
    with pytest.raises(BackendError):
        backend.complete("reason", "bad request")
    assert len(_ChatHandler.requests_seen) == 1


def test_chat_backend_empty_response(chat_server, monkeypatch):
    monkeypatch.setenv("LAYERCOT_TEST_TOKEN", TOKEN)
    _ChatHandler.behavior = "empty"
    backend = ChatBackend(chat_config(chat_server))
    with pytest.raises(EmptyResponse):
        backend.complete("reason", "anything")


def test_token_never_reaches_trace_or_logs(chat_server, monkeypatch, caplog):
    monkeypatch.setenv("LAYERCOT_TEST_TOKEN", TOKEN)

    class PlanningChat(ChatBackend):
        def complete(self, step, prompt, *, layer=-1, attempt=1):
            if step == "plan":
                return "LAYER: single objective"
            if step == "integrate":
                return "final answer"
            return super().complete(step, prompt, layer=layer, attempt=attempt)

    team = AgentTeam.single(PlanningChat(chat_config(chat_server)))
    session = new_session()
    with caplog.at_level("DEBUG"):
        engine.plan_layers(session, team)
        engine.run_until_blocked(session, team, EMPTY_STORE)
    serialized = "\n".join(e.to_json() for e in session.events)
    assert TOKEN not in serialized
    assert TOKEN not in caplog.text


def test_chat_config_validation():
    with pytest.raises(ValueError):
        ChatBackendConfig(base_url="not a url", model_name="m")
    with pytest.raises(ValueError):
        ChatBackendConfig(base_url="http://x", model_name="m", timeout_seconds=0)


# --- scripted backend --------------------------------------------------------


def test_scripted_backend_is_deterministic():
    scenario = make_scenario(2)
    a, b = ScriptedBackend(scenario), ScriptedBackend(make_scenario(2))
    for key in [("reason", 0, 1), ("refine", 1, 2), ("integrate", -1, 1)]:
        assert a.complete(key[0], "x", layer=key[1], attempt=key[2]) == b.complete(
            key[0], "y", layer=key[1], attempt=key[2]
        )


def test_scripted_missing_key_is_backend_error():
    backend = ScriptedBackend(make_scenario(1))
    with pytest.raises(BackendError):
        backend.complete("reason", "x", layer=7, attempt=1)


def test_scripted_refinement_differs_from_first_attempt():
    scenario = load_scenario("finance")
    backend = ScriptedBackend(scenario)
    first = backend.complete("reason", "", layer=0, attempt=1)
    second = backend.complete("refine", "", layer=0, attempt=2)
    assert first != second
    assert "patent is still pending" in second


def test_scenario_file_format_round_trip(tmp_path):
    facts = tmp_path / "tiny.facts"
    facts.write_text("a | b | c | true\n", encoding="utf-8")
    doc = {
        "name": "tiny",
        "layers": ["only objective"],
        "responses": [
            {"step": "reason", "layer": 0, "attempt": 1, "text": "hello.\nCLAIM: a | b | c"},
            {"step": "integrate", "layer": -1, "attempt": 1, "text": "done"},
        ],
        "facts": "tiny.facts",
    }
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    scenario = ScriptedScenario.from_file(path)
    assert scenario.name == "tiny"
    assert scenario.planned_layers == ["only objective"]
    assert scenario.facts_file == facts
    assert scenario.responses[("reason", 0, 1)].startswith("hello.")
    store = scenario_store(scenario)
    assert len(store) == 1


def test_bundled_scenarios_cover_reachable_keys():
    for name in list_scenarios():
        scenario = load_scenario(name)
        assert scenario.validate_complete(max_refinements=2) == []


def test_bundled_scenario_listing():
    assert set(list_scenarios()) >= {"medical", "finance", "agile", "algorithm_x"}


def test_echo_backend_returns_prompt():
    assert EchoBackend().complete("reason", "exact prompt") == "exact prompt"


def test_roles_resolve_to_one_handle_each():
    backend = EchoBackend()
    team = AgentTeam.single(backend)
    assert team.resolve(RoleKind.PLANNER) is backend
    assert team.resolve(RoleKind.REASONER) is backend
    assert team.resolve(RoleKind.VERIFIER) is None
    assert team.resolve(RoleKind.RETRIEVER) is None
    assert team.resolve(RoleKind.USER_PROXY) is None
