"""The layer-by-layer pipeline state machine.

Each ``advance`` call executes one framework step on the single active layer
(always the first non-accepted one): generate or refine a partial, verify it,
and resolve the outcome. Resolution depends on the verification mode:

  automatic    the fact-store verdict decides; contradictions trigger
               refinement until the budget runs out.
  interactive  the verdict is recorded for display and the layer always
               awaits the user, whose approve/reject/annotate decides.
               An approve wins over a contradicted verdict (expert override).
  hybrid       contradictions are handled automatically; only layers that
               pass the factual check await user sign-off.

Every mutation goes through Session.record, so a session is always exactly
the fold of its event log.
"""
from __future__ import annotations

from typing import Iterable

from . import knowledge
from .backends import AgentTeam, BackendError, EmptyResponse
from .claims import parse_claims, parse_layer_lines
from .knowledge import FactStore, verify_partial
from .prompts import (
    DEFAULT_TEMPLATES,
    PromptContext,
    STEP_INTEGRATE,
    STEP_PLAN,
    STEP_REASON,
    STEP_REFINE,
    STEP_VANILLA,
    render_prompt,
)
from .types import (
    ClaimStatus,
    EmptyPlan,
    EngineConfig,
    EventKind,
    Feedback,
    FeedbackAction,
    FinalAnswer,
    LayerPlan,
    LayerState,
    NoPlan,
    NotReady,
    PartialReasoning,
    PlannerUnavailable,
    Query,
    Session,
    SessionClosed,
    StepOutcome,
    SubProblem,
    TraceEvent,
    VerdictAggregate,
    VerificationMode,
    VerificationVerdict,
    WrongLayer,
)

BACKEND_CALL_KINDS = (
    EventKind.PLANNED,
    EventKind.PARTIAL_GENERATED,
    EventKind.REFINED,
    EventKind.INTEGRATED,
)


def create_session(query: Query, config: EngineConfig | None = None) -> Session:
    return Session.create(query, config or EngineConfig())


def _context(session: Session, layer_index: int | None = None,
             rejection_note: str | None = None) -> PromptContext:
    assert session.query is not None
    objective = None
    if layer_index is not None and session.plan is not None:
        objective = session.plan.sub_problems[layer_index].objective
    return PromptContext(
        query=session.query.text,
        constraints=list(session.query.constraints),
        objective=objective,
        prior_layers=[p.narrative for p in session.accepted_partials()],
        rejection_note=rejection_note,
    )


def _default_sources(mode: VerificationMode) -> tuple[str, ...]:
    if mode is VerificationMode.AUTOMATIC:
        return ("knowledge",)
    return ("knowledge", "user")


def plan_layers(session: Session, agents: AgentTeam) -> LayerPlan:
    """Segment the query into sub-problems via the planner backend.

    Planner output beyond max_layers is truncated (depth is fixed per
    session). Appends the Planned event.
    """
    if session.plan is not None:
        raise ValueError("session already planned")
    if session.closed:
        raise SessionClosed(f"session {session.id} is {session.status}")
    prompt = render_prompt(DEFAULT_TEMPLATES[STEP_PLAN], _context(session))
    try:
        text = agents.planner.complete(STEP_PLAN, prompt)
    except BackendError as exc:
        raise PlannerUnavailable(str(exc)) from exc
    objectives = parse_layer_lines(text)
    if not objectives:
        raise EmptyPlan("planner emitted zero sub-problems")
    if session.config.max_layers == 1:
        # Depth 1 degenerates to answering the whole query as one layer;
        # the planner was still consulted (the call is part of the budget).
        objectives = [session.query.text]
    else:
        objectives = objectives[: session.config.max_layers]
    sources = _default_sources(session.config.verification_mode)
    plan = LayerPlan(
        sub_problems=tuple(
            SubProblem(index=i, objective=obj, verification_sources=sources)
            for i, obj in enumerate(objectives)
        )
    )
    session.record(EventKind.PLANNED, {**plan.to_dict(), "backend_call": True})
    return session.plan  # the applied copy


def generate_partial(sub_problem: SubProblem, context: PromptContext,
                     agents: AgentTeam, *, attempt: int = 1) -> PartialReasoning:
    """One reasoning call for one layer; claims parsed from the narrative."""
    prompt = render_prompt(DEFAULT_TEMPLATES[STEP_REASON], context)
    narrative = agents.reasoner.complete(
        STEP_REASON, prompt, layer=sub_problem.index, attempt=attempt
    )
    if not narrative or not narrative.strip():
        raise EmptyResponse(f"empty narrative for layer {sub_problem.index}")
    parsed = parse_claims(narrative)
    return PartialReasoning(
        layer_index=sub_problem.index,
        narrative=narrative,
        claims=parsed.claims,
        attempt=attempt,
        warnings=parsed.warnings,
    )


class BudgetExhausted(Exception):
    pass


def _feedback_block(verdict: VerificationVerdict | None,
                    partial: PartialReasoning | None,
                    rejection_note: str | None) -> str:
    lines: list[str] = []
    if verdict is not None and partial is not None:
        statements = {c.id: c.statement for c in partial.claims}
        evidence = dict(verdict.evidence)
        for cid in verdict.contradicted_ids:
            lines.append(
                f"contradicted claim: {statements.get(cid, cid)} "
                f"({evidence.get(cid, 'no matching fact')})"
            )
    if rejection_note:
        lines.append(f"reviewer note: {rejection_note}")
    return "\n".join(lines) if lines else "no details recorded"


def refine_partial(previous: PartialReasoning, verdict: VerificationVerdict | None,
                   rejection_note: str | None, agents: AgentTeam,
                   context: PromptContext, config: EngineConfig) -> PartialReasoning:
    """Retry a layer with the contradiction evidence and any reviewer note
    folded into the prompt. Attempt counter increments."""
    if previous.attempt > config.max_refinements:
        raise BudgetExhausted(
            f"layer {previous.layer_index} already used attempt {previous.attempt} "
            f"of {config.max_refinements + 1}"
        )
    context.rejection_note = _feedback_block(verdict, previous, rejection_note)
    prompt = render_prompt(DEFAULT_TEMPLATES[STEP_REFINE], context)
    attempt = previous.attempt + 1
    narrative = agents.reasoner.complete(
        STEP_REFINE, prompt, layer=previous.layer_index, attempt=attempt
    )
    if not narrative or not narrative.strip():
        raise EmptyResponse(f"empty refinement for layer {previous.layer_index}")
    parsed = parse_claims(narrative)
    return PartialReasoning(
        layer_index=previous.layer_index,
        narrative=narrative,
        claims=parsed.claims,
        attempt=attempt,
        warnings=parsed.warnings,
    )


def _resolve_verdict(session: Session, k: int) -> StepOutcome:
    """Append the resolution events implied by the just-recorded verdict."""
    verdict = session.verdicts[k]
    mode = session.config.verification_mode
    if mode is VerificationMode.INTERACTIVE:
        return StepOutcome.AWAITING_USER
    if verdict.aggregate is VerdictAggregate.ACCEPTED:
        if mode is VerificationMode.HYBRID:
            return StepOutcome.AWAITING_USER
        session.record(
            EventKind.LAYER_ACCEPTED,
            {"layer_index": k, "source": "knowledge", "flagged": False},
        )
        return StepOutcome.PROGRESSED
    if verdict.aggregate is VerdictAggregate.NEEDS_REFINEMENT:
        return StepOutcome.PROGRESSED  # layer is now Refining
    return _exhaust(session, k)  # Rejected: budget is gone


def _exhaust(session: Session, k: int) -> StepOutcome:
    """Refinement budget spent with the error still detected."""
    if session.config.on_exhausted.value == "accept_flagged":
        session.record(
            EventKind.LAYER_ACCEPTED,
            {"layer_index": k, "source": "knowledge", "flagged": True},
        )
        return StepOutcome.PROGRESSED
    session.record(
        EventKind.LAYER_FAILED,
        {"layer_index": k, "reason": "refinement budget exhausted"},
    )
    return StepOutcome.FAILED


def _verify(session: Session, k: int, store: FactStore) -> StepOutcome:
    verdict = verify_partial(store, session.partials[k], session.config)
    session.record(EventKind.VERDICT_RECORDED, verdict.to_dict())
    return _resolve_verdict(session, k)


def advance(session: Session, agents: AgentTeam,
            store: FactStore | None = None) -> StepOutcome:
    """Execute one framework step on the active layer.

    Raises NoPlan before planning, SessionClosed on finished/failed
    sessions; BackendError propagates with the session left resumable
    (no event is appended for a failed backend call).
    """
    if session.closed:
        raise SessionClosed(f"session {session.id} is {session.status}")
    if session.plan is None:
        raise NoPlan("plan_layers has not run")
    store = store if store is not None else knowledge.EMPTY_STORE

    k = session.active_layer()
    if k is None:
        integrate(session, agents)
        return StepOutcome.FINISHED

    state = session.layer_states[k]
    if state in (LayerState.PENDING, LayerState.REASONING):
        attempt = session.partials[k].attempt if state is LayerState.REASONING and k in session.partials else 1
        partial = generate_partial(
            session.plan.sub_problems[k], _context(session, k), agents, attempt=attempt
        )
        session.record(
            EventKind.PARTIAL_GENERATED, {**partial.to_dict(), "backend_call": True}
        )
        return _verify(session, k, store)

    if state is LayerState.REFINING:
        previous = session.partials[k]
        note = session.pending_notes.get(k)
        verdict = session.verdicts.get(k)
        partial = refine_partial(
            previous, verdict, note, agents, _context(session, k), session.config
        )
        session.record(EventKind.REFINED, {**partial.to_dict(), "backend_call": True})
        return _verify(session, k, store)

    if state is LayerState.AWAITING_USER:
        return StepOutcome.AWAITING_USER

    if state is LayerState.AWAITING_VERIFICATION:
        # Only reachable if a previous advance was interrupted mid-step.
        return _verify(session, k, store)

    raise SessionClosed(f"layer {k} is {state.value}")  # Failed layer, failed session


def apply_feedback(session: Session, feedback: Feedback) -> Session:
    """Apply a reviewer decision to the layer awaiting input.

    approve accepts the layer (user wins over the recorded verdict);
    reject sends it to refinement, or fails it when the budget is spent;
    annotate appends a constraint and returns the layer to Reasoning.
    """
    if session.closed:
        raise SessionClosed(f"session {session.id} is {session.status}")
    k = feedback.layer_index
    if k < 0 or k >= len(session.layer_states) or session.layer_states[k] is not LayerState.AWAITING_USER:
        raise WrongLayer(f"layer {k} is not awaiting user input")
    session.record(
        EventKind.FEEDBACK_RECEIVED,
        {
            "layer_index": k,
            "action": feedback.action.value,
            "note": feedback.note,
            "added_constraint": feedback.added_constraint,
        },
    )
    if feedback.action is FeedbackAction.APPROVE:
        session.record(
            EventKind.LAYER_ACCEPTED,
            {"layer_index": k, "source": "user", "flagged": False},
        )
    elif feedback.action is FeedbackAction.REJECT:
        if session.partials[k].attempt > session.config.max_refinements:
            _exhaust(session, k)
    # annotate: layer already back to Reasoning via the event applier.
    return session


def integrate(session: Session, agents: AgentTeam) -> FinalAnswer:
    """Combine the validated layers into the final answer (one backend call)."""
    if session.closed:
        raise SessionClosed(f"session {session.id} is {session.status}")
    if session.plan is None or any(
        s is not LayerState.ACCEPTED for s in session.layer_states
    ):
        raise NotReady("all layers must be Accepted before integration")
    prompt = render_prompt(DEFAULT_TEMPLATES[STEP_INTEGRATE], _context(session))
    text = agents.reasoner.complete(STEP_INTEGRATE, prompt)
    if not text or not text.strip():
        raise EmptyResponse("empty integration answer")
    answer = FinalAnswer(
        text=text,
        supporting_layers=list(range(len(session.plan))),
        quality=quality(session.events),
    )
    session.record(EventKind.INTEGRATED, {**answer.to_dict(), "backend_call": True})
    return answer


def run_until_blocked(session: Session, agents: AgentTeam,
                      store: FactStore | None = None) -> StepOutcome:
    """Advance until the session finishes, fails, or needs the user."""
    while True:
        outcome = advance(session, agents, store)
        if outcome is not StepOutcome.PROGRESSED:
            return outcome


def run_vanilla(query: Query, agents: AgentTeam) -> tuple[FinalAnswer, list[TraceEvent]]:
    """Baseline single-pass reasoning: one backend call, zero verification."""
    session = Session.create(query, EngineConfig(max_layers=1), vanilla=True)
    prompt = render_prompt(DEFAULT_TEMPLATES[STEP_VANILLA], _context(session))
    narrative = agents.reasoner.complete(STEP_VANILLA, prompt)
    if not narrative or not narrative.strip():
        raise EmptyResponse("empty vanilla answer")
    parsed = parse_claims(narrative)
    partial = PartialReasoning(
        layer_index=0, narrative=narrative, claims=parsed.claims,
        attempt=1, warnings=parsed.warnings,
    )
    session.record(
        EventKind.PARTIAL_GENERATED, {**partial.to_dict(), "backend_call": True}
    )
    answer = FinalAnswer(text=narrative, supporting_layers=[], quality=0.0)
    # The answer IS the single chain; no extra backend call happens here.
    session.record(EventKind.INTEGRATED, {**answer.to_dict(), "backend_call": False})
    return answer, session.events


def quality(events: Iterable[TraceEvent]) -> float:
    """Verified-claim fraction: claims Supported or user-approved over all
    claims emitted across every attempt. 0.0 when no claims were emitted.

    Stand-in metric; nothing in the source material pins down "explanation
    quality", so this is the declared definition.
    """
    total = 0
    verified = 0
    latest_ids: dict[int, list[str]] = {}  # layer -> claim ids of latest emission
    supported: dict[int, set[str]] = {}  # layer -> ids its latest verdict supported
    for event in events:
        kind, p = event.kind, event.payload
        if kind in (EventKind.PARTIAL_GENERATED, EventKind.REFINED):
            k = p["layer_index"]
            latest_ids[k] = [c["id"] for c in p["claims"]]
            supported[k] = set()
            total += len(latest_ids[k])
        elif kind is EventKind.VERDICT_RECORDED:
            # A verdict always refers to the layer's latest emission.
            k = p["layer_index"]
            supported[k] = {
                cid
                for cid, status in p["per_claim"].items()
                if status == ClaimStatus.SUPPORTED.value
            }
            verified += len(supported[k])
        elif kind is EventKind.FEEDBACK_RECEIVED and p["action"] == FeedbackAction.APPROVE.value:
            k = p["layer_index"]
            verified += sum(
                1 for cid in latest_ids.get(k, []) if cid not in supported.get(k, set())
            )
    if total == 0:
        return 0.0
    return verified / total


def backend_calls(events: Iterable[TraceEvent]) -> int:
    """Cost accounting straight from the trace: events flagged backend_call."""
    return sum(
        1
        for e in events
        if e.kind in BACKEND_CALL_KINDS and e.payload.get("backend_call", True)
    )
