"""Domain types for the layered reasoning pipeline.

Everything here is plain data: queries, layer plans, claims, partial
reasoning attempts, verdicts, feedback, trace events, and the session that
ties them together. State transitions live in ``layercot.engine``; a Session
is reconstructible from its event log alone (see ``Session.apply``).
"""
from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any


class LayerState(str, Enum):
    PENDING = "Pending"
    REASONING = "Reasoning"
    AWAITING_VERIFICATION = "AwaitingVerification"
    AWAITING_USER = "AwaitingUser"
    REFINING = "Refining"
    ACCEPTED = "Accepted"
    FAILED = "Failed"


class ClaimStatus(str, Enum):
    SUPPORTED = "Supported"
    CONTRADICTED = "Contradicted"
    UNKNOWN = "Unknown"


class VerdictAggregate(str, Enum):
    ACCEPTED = "Accepted"
    NEEDS_REFINEMENT = "NeedsRefinement"
    REJECTED = "Rejected"


class VerdictSource(str, Enum):
    KNOWLEDGE = "knowledge"
    USER = "user"
    AGENT = "agent"


class VerificationMode(str, Enum):
    AUTOMATIC = "automatic"
    INTERACTIVE = "interactive"
    HYBRID = "hybrid"


class OnExhausted(str, Enum):
    FAIL_SESSION = "fail_session"
    ACCEPT_FLAGGED = "accept_flagged"


class FeedbackAction(str, Enum):
    APPROVE = "approve"
    REJECT = "reject"
    ANNOTATE = "annotate"


class StepOutcome(str, Enum):
    PROGRESSED = "Progressed"
    AWAITING_USER = "AwaitingUser"
    FINISHED = "Finished"
    FAILED = "Failed"


class EventKind(str, Enum):
    SESSION_CREATED = "SessionCreated"
    PLANNED = "Planned"
    PARTIAL_GENERATED = "PartialGenerated"
    VERDICT_RECORDED = "VerdictRecorded"
    FEEDBACK_RECEIVED = "FeedbackReceived"
    REFINED = "Refined"
    LAYER_ACCEPTED = "LayerAccepted"
    LAYER_FAILED = "LayerFailed"
    INTEGRATED = "Integrated"


class EngineError(Exception):
    """Base class for pipeline errors."""


class NoPlan(EngineError):
    """advance() called before plan_layers()."""


class NotReady(EngineError):
    """integrate() called while some layer is not accepted."""


class WrongLayer(EngineError):
    """Feedback addressed to a layer that is not awaiting user input."""


class SessionClosed(EngineError):
    """Operation on a session that already finished or failed."""


class PlannerUnavailable(EngineError):
    """The planner backend failed."""


class EmptyPlan(EngineError):
    """The planner emitted zero sub-problems (unusable backend output)."""


def new_id() -> str:
    return uuid.uuid4().hex


def utc_now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class Query:
    """A natural-language question plus user-supplied constraints.

    Constraints may grow mid-run (via annotate feedback).
    """

    text: str
    domain_tag: str = ""
    constraints: list[str] = field(default_factory=list)
    id: str = field(default_factory=new_id)

    def __post_init__(self) -> None:
        if not self.text or not self.text.strip():
            raise ValueError("query text must be nonempty")

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "text": self.text,
            "domain_tag": self.domain_tag,
            "constraints": list(self.constraints),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Query:
        return cls(
            text=d["text"],
            domain_tag=d.get("domain_tag", ""),
            constraints=list(d.get("constraints", [])),
            id=d["id"],
        )


@dataclass(frozen=True)
class SubProblem:
    """One planned layer: position, objective, and the source kinds whose
    sign-off the layer needs (``knowledge``, ``user``, or ``none``)."""

    index: int
    objective: str
    verification_sources: tuple[str, ...] = ("knowledge",)

    def __post_init__(self) -> None:
        if not self.objective or not self.objective.strip():
            raise ValueError("sub-problem objective must be nonempty")

    def to_dict(self) -> dict[str, Any]:
        return {
            "index": self.index,
            "objective": self.objective,
            "verification_sources": list(self.verification_sources),
        }


@dataclass(frozen=True)
class LayerPlan:
    sub_problems: tuple[SubProblem, ...]

    def __post_init__(self) -> None:
        if not self.sub_problems:
            raise ValueError("a plan needs at least one sub-problem")
        for expect, sub in enumerate(self.sub_problems):
            if sub.index != expect:
                raise ValueError("sub-problem indices must be contiguous from 0")

    def __len__(self) -> int:
        return len(self.sub_problems)

    def to_dict(self) -> dict[str, Any]:
        return {"sub_problems": [s.to_dict() for s in self.sub_problems]}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> LayerPlan:
        return cls(
            sub_problems=tuple(
                SubProblem(
                    index=s["index"],
                    objective=s["objective"],
                    verification_sources=tuple(s.get("verification_sources", ["knowledge"])),
                )
                for s in d["sub_problems"]
            )
        )


@dataclass(frozen=True)
class Assertion:
    """Structured (subject, predicate, object) triple attached to a claim."""

    subject: str
    predicate: str
    object: str

    def __post_init__(self) -> None:
        for name in ("subject", "predicate", "object"):
            value = getattr(self, name)
            if not value:
                raise ValueError(f"assertion {name} must be nonempty")

    def to_dict(self) -> dict[str, str]:
        return {"subject": self.subject, "predicate": self.predicate, "object": self.object}

    @classmethod
    def from_dict(cls, d: dict[str, str]) -> Assertion:
        return cls(subject=d["subject"], predicate=d["predicate"], object=d["object"])


@dataclass(frozen=True)
class Claim:
    """An atomic checkable statement extracted from a narrative."""

    id: str
    statement: str
    assertion: Assertion | None = None
    confidence: float | None = None

    def __post_init__(self) -> None:
        if not self.statement or not self.statement.strip():
            raise ValueError("claim statement must be nonempty")
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ValueError("claim confidence must be in [0, 1]")

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "statement": self.statement,
            "assertion": self.assertion.to_dict() if self.assertion else None,
            "confidence": self.confidence,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Claim:
        return cls(
            id=d["id"],
            statement=d["statement"],
            assertion=Assertion.from_dict(d["assertion"]) if d.get("assertion") else None,
            confidence=d.get("confidence"),
        )


@dataclass
class PartialReasoning:
    """One layer attempt: the narrative plus the claims parsed out of it."""

    layer_index: int
    narrative: str
    claims: list[Claim]
    attempt: int = 1
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        ids = [c.id for c in self.claims]
        if len(ids) != len(set(ids)):
            raise ValueError("claims within a partial must carry distinct ids")

    def to_dict(self) -> dict[str, Any]:
        return {
            "layer_index": self.layer_index,
            "narrative": self.narrative,
            "claims": [c.to_dict() for c in self.claims],
            "attempt": self.attempt,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> PartialReasoning:
        return cls(
            layer_index=d["layer_index"],
            narrative=d["narrative"],
            claims=[Claim.from_dict(c) for c in d["claims"]],
            attempt=d["attempt"],
            warnings=list(d.get("warnings", [])),
        )


@dataclass
class VerificationVerdict:
    """Per-claim statuses plus an aggregate decision for one layer attempt.

    ``aggregate`` reflects the factual check and the refinement budget only;
    whether a layer is actually accepted additionally depends on the
    verification mode and, in interactive modes, the user (see engine).
    """

    layer_index: int
    attempt: int
    per_claim: dict[str, ClaimStatus]
    aggregate: VerdictAggregate
    evidence: list[tuple[str, str]]
    source: VerdictSource

    def __post_init__(self) -> None:
        if self.aggregate is VerdictAggregate.ACCEPTED and any(
            s is ClaimStatus.CONTRADICTED for s in self.per_claim.values()
        ):
            raise ValueError("an Accepted aggregate cannot carry a Contradicted claim")

    @property
    def contradicted_ids(self) -> list[str]:
        return [cid for cid, s in self.per_claim.items() if s is ClaimStatus.CONTRADICTED]

    def to_dict(self) -> dict[str, Any]:
        return {
            "layer_index": self.layer_index,
            "attempt": self.attempt,
            "per_claim": {cid: s.value for cid, s in self.per_claim.items()},
            "aggregate": self.aggregate.value,
            "evidence": [[cid, text] for cid, text in self.evidence],
            "source": self.source.value,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> VerificationVerdict:
        return cls(
            layer_index=d["layer_index"],
            attempt=d["attempt"],
            per_claim={cid: ClaimStatus(s) for cid, s in d["per_claim"].items()},
            aggregate=VerdictAggregate(d["aggregate"]),
            evidence=[(pair[0], pair[1]) for pair in d["evidence"]],
            source=VerdictSource(d["source"]),
        )


@dataclass
class Feedback:
    """A reviewer decision on the layer currently awaiting user input."""

    session_id: str
    layer_index: int
    action: FeedbackAction
    note: str | None = None
    added_constraint: str | None = None

    def __post_init__(self) -> None:
        if isinstance(self.action, str):
            self.action = FeedbackAction(self.action)
        if self.action is FeedbackAction.REJECT and not (self.note and self.note.strip()):
            raise ValueError("reject feedback requires a nonempty note")


@dataclass
class FinalAnswer:
    text: str
    supporting_layers: list[int]
    quality: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.quality <= 1.0:
            raise ValueError("quality must be in [0, 1]")

    def to_dict(self) -> dict[str, Any]:
        return {
            "text": self.text,
            "supporting_layers": list(self.supporting_layers),
            "quality": self.quality,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> FinalAnswer:
        return cls(
            text=d["text"],
            supporting_layers=list(d["supporting_layers"]),
            quality=d["quality"],
        )


@dataclass
class BackendSelector:
    """Which agent backend a session uses; serialized into the event log so
    a persisted session can be resumed with the same backend."""

    kind: str = "echo"  # echo | scripted | chat
    scenario: str | None = None  # bundled name or path, for kind=scripted
    facts: str | None = None  # optional fact-store path for echo/chat
    chat: dict[str, Any] | None = None  # ChatBackendConfig fields, for kind=chat

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "scenario": self.scenario,
            "facts": self.facts,
            "chat": dict(self.chat) if self.chat else None,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> BackendSelector:
        return cls(
            kind=d.get("kind", "echo"),
            scenario=d.get("scenario"),
            facts=d.get("facts"),
            chat=d.get("chat"),
        )


@dataclass
class EngineConfig:
    max_layers: int = 5
    max_refinements: int = 2
    verification_mode: VerificationMode = VerificationMode.AUTOMATIC
    backend: BackendSelector = field(default_factory=BackendSelector)
    on_exhausted: OnExhausted = OnExhausted.FAIL_SESSION

    def __post_init__(self) -> None:
        if isinstance(self.verification_mode, str):
            self.verification_mode = VerificationMode(self.verification_mode)
        if isinstance(self.on_exhausted, str):
            self.on_exhausted = OnExhausted(self.on_exhausted)
        if isinstance(self.backend, dict):
            self.backend = BackendSelector.from_dict(self.backend)
        if self.max_layers < 1:
            raise ValueError("max_layers must be >= 1")
        if self.max_refinements < 0:
            raise ValueError("max_refinements must be >= 0")

    def to_dict(self) -> dict[str, Any]:
        return {
            "max_layers": self.max_layers,
            "max_refinements": self.max_refinements,
            "verification_mode": self.verification_mode.value,
            "backend": self.backend.to_dict(),
            "on_exhausted": self.on_exhausted.value,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> EngineConfig:
        return cls(
            max_layers=d.get("max_layers", 5),
            max_refinements=d.get("max_refinements", 2),
            verification_mode=VerificationMode(d.get("verification_mode", "automatic")),
            backend=BackendSelector.from_dict(d.get("backend") or {}),
            on_exhausted=OnExhausted(d.get("on_exhausted", "fail_session")),
        )


@dataclass(frozen=True)
class TraceEvent:
    """One entry of the append-only session log.

    Wire form (JSON Lines) uses exactly the field names seq/ts/kind/payload.
    Payloads are JSON-native so that a file round-trip is byte-faithful.
    """

    seq: int
    ts: str
    kind: EventKind
    payload: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {"seq": self.seq, "ts": self.ts, "kind": self.kind.value, "payload": self.payload}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> TraceEvent:
        return cls(seq=d["seq"], ts=d["ts"], kind=EventKind(d["kind"]), payload=d["payload"])


def _jsonify(payload: dict[str, Any]) -> dict[str, Any]:
    # Normalizes tuples/enums so live payloads match file-replayed ones exactly.
    return json.loads(json.dumps(payload, ensure_ascii=False))


class Session:
    """Live pipeline instance, mutated only by applying trace events.

    Both the engine and the replay path funnel every mutation through
    ``apply``; that is what makes ``replay(events)`` reconstruct the exact
    same state (the replay-determinism invariant).
    """

    def __init__(self) -> None:
        self.id: str = ""
        self.query: Query | None = None
        self.config: EngineConfig = EngineConfig()
        self.plan: LayerPlan | None = None
        self.layer_states: list[LayerState] = []
        self.events: list[TraceEvent] = []
        self.final: FinalAnswer | None = None
        self.failed: bool = False
        self.vanilla: bool = False
        # Derived per-layer working state, all reconstructed from events.
        self.partials: dict[int, PartialReasoning] = {}
        self.verdicts: dict[int, VerificationVerdict] = {}
        self.pending_notes: dict[int, str] = {}

    @classmethod
    def create(cls, query: Query, config: EngineConfig, *, vanilla: bool = False) -> Session:
        session = cls()
        session.record(
            EventKind.SESSION_CREATED,
            {
                "session_id": new_id(),
                "query": query.to_dict(),
                "config": config.to_dict(),
                "mode": "vanilla" if vanilla else "layered",
            },
        )
        return session

    # -- event plumbing ----------------------------------------------------

    def record(self, kind: EventKind, payload: dict[str, Any]) -> TraceEvent:
        """Append a new event (with the next seq) and apply it."""
        event = TraceEvent(
            seq=len(self.events) + 1,
            ts=utc_now_iso(),
            kind=kind,
            payload=_jsonify(payload),
        )
        self.apply(event)
        return event

    def apply(self, event: TraceEvent) -> None:
        """Apply one event to session state. The only mutation path."""
        if self.events and event.seq <= self.events[-1].seq:
            raise ValueError("event sequence numbers must be strictly increasing")
        handler = _APPLIERS[event.kind]
        handler(self, event.payload)
        self.events.append(event)

    # -- appliers, one per event kind --------------------------------------

    def _on_created(self, p: dict[str, Any]) -> None:
        self.id = p["session_id"]
        self.query = Query.from_dict(p["query"])
        self.config = EngineConfig.from_dict(p["config"])
        self.vanilla = p.get("mode") == "vanilla"

    def _on_planned(self, p: dict[str, Any]) -> None:
        self.plan = LayerPlan.from_dict(p)
        self.layer_states = [LayerState.PENDING] * len(self.plan)

    def _on_partial(self, p: dict[str, Any]) -> None:
        partial = PartialReasoning.from_dict(p)
        k = partial.layer_index
        if k >= len(self.layer_states):
            # Vanilla single-chain traces have no plan; grow on demand.
            self.layer_states.extend(
                [LayerState.PENDING] * (k + 1 - len(self.layer_states))
            )
        self.partials[k] = partial
        self.layer_states[k] = LayerState.AWAITING_VERIFICATION

    def _on_verdict(self, p: dict[str, Any]) -> None:
        verdict = VerificationVerdict.from_dict(p)
        k = verdict.layer_index
        self.verdicts[k] = verdict
        mode = self.config.verification_mode
        if mode is VerificationMode.INTERACTIVE:
            self.layer_states[k] = LayerState.AWAITING_USER
        elif verdict.aggregate is VerdictAggregate.NEEDS_REFINEMENT:
            self.layer_states[k] = LayerState.REFINING
        elif mode is VerificationMode.HYBRID and verdict.aggregate is VerdictAggregate.ACCEPTED:
            self.layer_states[k] = LayerState.AWAITING_USER
        # automatic Accepted and any Rejected: resolution event follows.

    def _on_feedback(self, p: dict[str, Any]) -> None:
        k = p["layer_index"]
        action = FeedbackAction(p["action"])
        if action is FeedbackAction.REJECT:
            if p.get("note"):
                self.pending_notes[k] = p["note"]
            budget_left = self.partials[k].attempt <= self.config.max_refinements
            if budget_left:
                self.layer_states[k] = LayerState.REFINING
            # else: LayerFailed / flagged LayerAccepted follows.
        elif action is FeedbackAction.ANNOTATE:
            if p.get("added_constraint") and self.query is not None:
                self.query.constraints.append(p["added_constraint"])
            self.layer_states[k] = LayerState.REASONING
        # approve: LayerAccepted follows.

    def _on_refined(self, p: dict[str, Any]) -> None:
        self._on_partial({key: p[key] for key in
                          ("layer_index", "narrative", "claims", "attempt", "warnings")})

    def _on_layer_accepted(self, p: dict[str, Any]) -> None:
        k = p["layer_index"]
        self.layer_states[k] = LayerState.ACCEPTED
        self.pending_notes.pop(k, None)

    def _on_layer_failed(self, p: dict[str, Any]) -> None:
        self.layer_states[p["layer_index"]] = LayerState.FAILED
        self.failed = True

    def _on_integrated(self, p: dict[str, Any]) -> None:
        self.final = FinalAnswer(
            text=p["text"],
            supporting_layers=list(p["supporting_layers"]),
            quality=p["quality"],
        )

    # -- views --------------------------------------------------------------

    @property
    def closed(self) -> bool:
        return self.final is not None or self.failed

    @property
    def status(self) -> str:
        if self.final is not None:
            return "finished"
        if self.failed:
            return "failed"
        if LayerState.AWAITING_USER in self.layer_states:
            return "awaiting_user"
        return "in_progress"

    def awaiting_layer(self) -> int | None:
        for k, state in enumerate(self.layer_states):
            if state is LayerState.AWAITING_USER:
                return k
        return None

    def active_layer(self) -> int | None:
        """First layer that is not yet accepted (strict forward progression)."""
        for k, state in enumerate(self.layer_states):
            if state is not LayerState.ACCEPTED:
                return k
        return None

    def attempts(self, layer_index: int) -> int:
        partial = self.partials.get(layer_index)
        return partial.attempt if partial else 0

    def accepted_partials(self) -> list[PartialReasoning]:
        return [
            self.partials[k]
            for k, state in enumerate(self.layer_states)
            if state is LayerState.ACCEPTED and k in self.partials
        ]

    def snapshot(self) -> dict[str, Any]:
        """Stable JSON view of the whole session state."""
        pending = self.awaiting_layer()
        return {
            "id": self.id,
            "query": self.query.to_dict() if self.query else None,
            "config": self.config.to_dict(),
            "status": self.status,
            "plan": self.plan.to_dict() if self.plan else None,
            "layer_states": [s.value for s in self.layer_states],
            "attempts": {str(k): v.attempt for k, v in sorted(self.partials.items())},
            "pending_layer": self._layer_view(pending) if pending is not None else None,
            "final": self.final.to_dict() if self.final else None,
            "failed": self.failed,
            "event_count": len(self.events),
        }

    def _layer_view(self, k: int) -> dict[str, Any]:
        partial = self.partials.get(k)
        verdict = self.verdicts.get(k)
        evidence = dict(verdict.evidence) if verdict else {}
        claims = []
        if partial:
            for claim in partial.claims:
                status = verdict.per_claim.get(claim.id) if verdict else None
                claims.append(
                    {
                        "id": claim.id,
                        "statement": claim.statement,
                        "assertion": claim.assertion.to_dict() if claim.assertion else None,
                        "status": status.value if status else None,
                        "evidence": evidence.get(claim.id),
                    }
                )
        return {
            "layer_index": k,
            "objective": self.plan.sub_problems[k].objective if self.plan and k < len(self.plan) else None,
            "state": self.layer_states[k].value,
            "attempt": partial.attempt if partial else 0,
            "narrative": partial.narrative if partial else None,
            "claims": claims,
            "aggregate": verdict.aggregate.value if verdict else None,
        }

    def snapshot_json(self) -> str:
        return json.dumps(self.snapshot(), sort_keys=True, ensure_ascii=False)


_APPLIERS = {
    EventKind.SESSION_CREATED: Session._on_created,
    EventKind.PLANNED: Session._on_planned,
    EventKind.PARTIAL_GENERATED: Session._on_partial,
    EventKind.VERDICT_RECORDED: Session._on_verdict,
    EventKind.FEEDBACK_RECEIVED: Session._on_feedback,
    EventKind.REFINED: Session._on_refined,
    EventKind.LAYER_ACCEPTED: Session._on_layer_accepted,
    EventKind.LAYER_FAILED: Session._on_layer_failed,
    EventKind.INTEGRATED: Session._on_integrated,
}


def replay(events: list[TraceEvent]) -> Session:
    """Fold an event list back into a Session (event sourcing)."""
    session = Session()
    for event in events:
        session.apply(event)
    return session
