"""HTTP service: the operational surface for sessions and the simulator.

Mutations are durable before the response goes out (storage fsync), and
requests targeting the same session are serialized on a per-session lock.
Sessions are independent; nothing is shared between them but the store.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import engine
from .backends import BackendError
from .scenarios import ScenarioNotFound, load_scenario
from .runtime import build_team
from .sim import BadParameter, SimConfig, analytic, simulate, sweep
from .storage import SessionRecord, SessionStore, default_root
from .types import (
    BackendSelector,
    EmptyPlan,
    EngineConfig,
    Feedback,
    PlannerUnavailable,
    Query,
    Session,
    SessionClosed,
    WrongLayer,
)

logger = logging.getLogger(__name__)


class CreateSessionRequest(BaseModel):
    query: str = ""
    domain: str = ""
    scenario: str | None = None
    config: dict[str, Any] = Field(default_factory=dict)


class FeedbackRequest(BaseModel):
    layer_index: int
    action: str
    note: str | None = None
    added_constraint: str | None = None


class SweepSpec(BaseModel):
    param: str
    values: list[float]


class SimulateRequest(BaseModel):
    num_tasks: int = 1000
    num_layers: int = 5
    error_prob: float = 0.2
    detection_prob: float = 0.9
    max_refinements: int = 2
    seed: int = 0
    sweep: SweepSpec | None = None
    include_csv: bool = True


class SessionManager:
    """Owns the live sessions, their backends, and persistence."""

    def __init__(self, root: Path | str) -> None:
        self.store = SessionStore(root)
        self.records: dict[str, SessionRecord] = {}
        self.teams: dict[str, Any] = {}  # session id -> (AgentTeam, FactStore)

    def resume_all(self) -> int:
        records, errors = self.store.resume_all()
        for report in errors:
            logger.error("resume: %s", report)
        for record in records:
            self.records[record.id] = record
        return len(records)

    def _runtime(self, record: SessionRecord):
        if record.id not in self.teams:
            self.teams[record.id] = build_team(record.session.config.backend)
        return self.teams[record.id]

    def create(self, request: CreateSessionRequest) -> SessionRecord:
        config_overrides = dict(request.config)
        query_text = request.query
        domain = request.domain
        if request.scenario is not None:
            scenario = load_scenario(request.scenario)  # raises ScenarioNotFound
            config_overrides["backend"] = BackendSelector(
                kind="scripted", scenario=request.scenario
            ).to_dict()
            query_text = query_text or (scenario.query or "")
            domain = domain or scenario.domain
        if not query_text.strip():
            raise ValueError("query text must be nonempty")
        config = EngineConfig.from_dict(config_overrides)
        session = Session.create(Query(text=query_text, domain_tag=domain), config)
        record = self.store.track(session)
        self.records[record.id] = record
        with record.lock:
            self.drive(record)
        return record

    def drive(self, record: SessionRecord) -> None:
        """Plan if needed, then advance to the next blocking point.

        Events are persisted even when a backend call fails mid-run, so the
        session stays resumable.
        """
        session = record.session
        team, store = self._runtime(record)
        try:
            if session.plan is None:
                engine.plan_layers(session, team)
            if not session.closed:
                engine.run_until_blocked(session, team, store)
        finally:
            self.store.persist(record)

    def feedback(self, session_id: str, request: FeedbackRequest) -> SessionRecord:
        record = self.records.get(session_id)
        if record is None:
            raise KeyError(session_id)
        with record.lock:
            feedback = Feedback(
                session_id=session_id,
                layer_index=request.layer_index,
                action=request.action,
                note=request.note,
                added_constraint=request.added_constraint,
            )
            try:
                engine.apply_feedback(record.session, feedback)
            finally:
                self.store.persist(record)
            self.drive(record)
        return record


def session_summary(record: SessionRecord) -> dict[str, Any]:
    session = record.session
    return {
        "id": session.id,
        "status": session.status,
        "query": session.query.text if session.query else "",
        "domain": session.query.domain_tag if session.query else "",
        "created": record.created,
        "pending_layer": session.awaiting_layer(),
        "quality": engine.quality(session.events),
    }


def session_detail(record: SessionRecord) -> dict[str, Any]:
    snapshot = record.session.snapshot()
    snapshot["quality"] = engine.quality(record.session.events)
    snapshot["backend_calls"] = engine.backend_calls(record.session.events)
    snapshot["created"] = record.created
    return snapshot


def create_app(storage_root: Path | str | None = None) -> FastAPI:
    manager = SessionManager(storage_root if storage_root is not None else default_root())
    resumed = manager.resume_all()
    if resumed:
        logger.info("resumed %d session(s)", resumed)

    app = FastAPI(title="layercot", version="0.1.0")
    app.state.manager = manager

    @app.get("/healthz")
    def healthz() -> dict[str, str]:
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(request: CreateSessionRequest) -> dict[str, Any]:
        try:
            record = manager.create(request)
        except ScenarioNotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except (BackendError, PlannerUnavailable, EmptyPlan) as exc:
            # The session is persisted and resumable; only the backend failed.
            raise HTTPException(status_code=502, detail=str(exc))
        return {"id": record.id, "status": session_detail(record)}

    @app.get("/sessions")
    def list_sessions() -> dict[str, Any]:
        summaries = [
            session_summary(r)
            for r in sorted(manager.records.values(), key=lambda r: r.created)
        ]
        return {"sessions": summaries}

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str) -> dict[str, Any]:
        record = manager.records.get(session_id)
        if record is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return session_detail(record)

    @app.post("/sessions/{session_id}/feedback")
    def post_feedback(session_id: str, request: FeedbackRequest) -> dict[str, Any]:
        try:
            record = manager.feedback(session_id, request)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown session")
        except (WrongLayer, SessionClosed) as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except BackendError as exc:
            raise HTTPException(status_code=502, detail=str(exc))
        return session_detail(record)

    @app.get("/sessions/{session_id}/trace")
    def get_trace(session_id: str) -> dict[str, Any]:
        record = manager.records.get(session_id)
        if record is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return {"events": [e.to_dict() for e in record.session.events]}

    @app.post("/simulate")
    def run_simulation(request: SimulateRequest) -> dict[str, Any]:
        try:
            config = SimConfig(
                num_tasks=request.num_tasks,
                num_layers=request.num_layers,
                error_prob=request.error_prob,
                detection_prob=request.detection_prob,
                max_refinements=request.max_refinements,
                seed=request.seed,
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        if request.sweep is None:
            return {
                "result": simulate(config).to_dict(),
                "analytic": analytic(config).to_dict(),
            }
        try:
            table = sweep(config, request.sweep.param, request.sweep.values)
        except BadParameter as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        rows = [
            {
                "param": row.param,
                "value": row.value,
                "result": row.result.to_dict(),
                "analytic": row.analytic_result.to_dict(),
            }
            for row in table.rows
        ]
        response: dict[str, Any] = {"rows": rows}
        if request.include_csv:
            response["csv"] = table.to_csv()
        return response

    return app
