from __future__ import annotations

import pytest

from conftest import make_scenario, new_session

from layercot import engine, replay
from layercot.backends import (
    AgentTeam,
    Backend,
    BackendError,
    CountingBackend,
    EchoBackend,
    ScriptedBackend,
)
from layercot.engine import BudgetExhausted, backend_calls, quality
from layercot.knowledge import EMPTY_STORE, load_store
from layercot.scenarios import load_scenario, scenario_store
from layercot.types import (
    EmptyPlan,
    EngineConfig,
    EventKind,
    Feedback,
    LayerState,
    NoPlan,
    NotReady,
    PlannerUnavailable,
    Query,
    Session,
    SessionClosed,
    StepOutcome,
    VerdictAggregate,
    WrongLayer,
)

BROKEN = "CLAIM: sys | check | broken"
STORE = load_store("@functional check\nsys | check | ok | true\nsys | other | fine | true\n")


class RecordingBackend(Backend):
    """Delegates to an inner backend while keeping every prompt."""

    def __init__(self, inner: Backend) -> None:
        self.inner = inner
        self.prompts: list[tuple[str, str]] = []

    def complete(self, step, prompt, *, layer=-1, attempt=1):
        self.prompts.append((step, prompt))
        return self.inner.complete(step, prompt, layer=layer, attempt=attempt)


def scripted_team(num_layers=2, **kwargs):
    return AgentTeam.single(ScriptedBackend(make_scenario(num_layers, **kwargs)))


# --- plan_layers ----------------------------------------------------------


def test_plan_three_sub_problems_from_workflow_scenario():
    scenario = load_scenario("algorithm_x")
    team = AgentTeam.single(ScriptedBackend(scenario))
    session = new_session()
    plan = engine.plan_layers(session, team)
    assert [s.objective for s in plan.sub_problems] == [
        "Evaluate Algorithm X's time complexity and data synchronization overhead",
        "Check concurrency safety",
        "Combine validated insights from the first two layers into a final answer",
    ]
    assert session.events[-1].kind is EventKind.PLANNED


def test_plan_truncates_to_max_layers():
    session = new_session(max_layers=2)
    plan = engine.plan_layers(session, scripted_team(3))
    assert len(plan) == 2
    assert [s.objective for s in plan.sub_problems] == ["objective 0", "objective 1"]


def test_degenerate_depth_plans_the_full_query():
    session = new_session(max_layers=1, query="is the system healthy?")
    counting = CountingBackend(ScriptedBackend(make_scenario(3)))
    plan = engine.plan_layers(session, AgentTeam.single(counting))
    assert len(plan) == 1
    assert plan.sub_problems[0].objective == "is the system healthy?"
    assert counting.calls == 1  # the planner is still consulted


def test_plan_medical_layer_headings():
    team = AgentTeam.single(ScriptedBackend(load_scenario("medical")))
    session = new_session()
    plan = engine.plan_layers(session, team)
    assert [s.objective for s in plan.sub_problems] == [
        "Patient Profile & Basic Symptoms",
        "Risk Factors & Recommendations",
    ]


def test_empty_plan_raises():
    class SilentPlanner(Backend):
        def complete(self, step, prompt, *, layer=-1, attempt=1):
            return "no layer lines at all"

    with pytest.raises(EmptyPlan):
        engine.plan_layers(new_session(), AgentTeam.single(SilentPlanner()))


def test_planner_unavailable_wraps_backend_error():
    class DeadPlanner(Backend):
        def complete(self, step, prompt, *, layer=-1, attempt=1):
            raise BackendError("boom")

    with pytest.raises(PlannerUnavailable):
        engine.plan_layers(new_session(), AgentTeam.single(DeadPlanner()))


def test_replan_is_rejected():
    session = new_session()
    engine.plan_layers(session, scripted_team())
    with pytest.raises(ValueError):
        engine.plan_layers(session, scripted_team())


# --- advance: hand-derived walks -------------------------------------------


def test_automatic_supported_layer_accepts_in_one_advance():
    session = new_session()
    team = scripted_team(2)
    engine.plan_layers(session, team)
    outcome = engine.advance(session, team, STORE)
    assert outcome is StepOutcome.PROGRESSED
    assert session.layer_states[0] is LayerState.ACCEPTED
    assert [e.kind for e in session.events[-3:]] == [
        EventKind.PARTIAL_GENERATED,
        EventKind.VERDICT_RECORDED,
        EventKind.LAYER_ACCEPTED,
    ]


def test_contradiction_moves_layer_to_refining_then_refined_event_follows():
    session = new_session()
    team = scripted_team(1, claim_lines={0: BROKEN})
    engine.plan_layers(session, team)
    outcome = engine.advance(session, team, STORE)
    assert outcome is StepOutcome.PROGRESSED
    assert session.layer_states[0] is LayerState.REFINING
    assert session.verdicts[0].aggregate is VerdictAggregate.NEEDS_REFINEMENT
    outcome = engine.advance(session, team, STORE)
    kinds = [e.kind for e in session.events]
    assert EventKind.REFINED in kinds
    assert session.layer_states[0] is LayerState.ACCEPTED
    assert session.partials[0].attempt == 2


def test_budget_exhaustion_fails_session():
    session = new_session(max_refinements=1)
    team = scripted_team(
        1,
        claim_lines={0: BROKEN},
        refine_lines={(0, 2): f"still wrong.\n{BROKEN}", (0, 3): f"wrong again.\n{BROKEN}"},
    )
    engine.plan_layers(session, team)
    assert engine.advance(session, team, STORE) is StepOutcome.PROGRESSED  # attempt 1, refine
    outcome = engine.advance(session, team, STORE)  # attempt 2: rejected, budget gone
    assert outcome is StepOutcome.FAILED
    assert session.layer_states[0] is LayerState.FAILED
    assert session.failed and session.status == "failed"
    assert session.events[-1].kind is EventKind.LAYER_FAILED


def test_accept_flagged_proceeds_past_exhaustion():
    session = new_session(max_refinements=0, on_exhausted="accept_flagged")
    team = scripted_team(2, claim_lines={0: BROKEN})
    engine.plan_layers(session, team)
    outcome = engine.advance(session, team, STORE)
    assert outcome is StepOutcome.PROGRESSED
    assert session.layer_states[0] is LayerState.ACCEPTED
    accepted = [e for e in session.events if e.kind is EventKind.LAYER_ACCEPTED]
    assert accepted[-1].payload["flagged"] is True
    assert engine.run_until_blocked(session, team, STORE) is StepOutcome.FINISHED


def test_advance_without_plan_raises():
    with pytest.raises(NoPlan):
        engine.advance(new_session(), scripted_team(), STORE)


def test_advance_on_finished_session_raises():
    session = new_session()
    team = scripted_team(1)
    engine.plan_layers(session, team)
    engine.run_until_blocked(session, team, STORE)
    assert session.final is not None
    with pytest.raises(SessionClosed):
        engine.advance(session, team, STORE)


def test_backend_error_leaves_session_resumable():
    scenario = make_scenario(2)
    del scenario.responses[("reason", 1, 1)]
    team = AgentTeam.single(ScriptedBackend(scenario))
    session = new_session()
    engine.plan_layers(session, team)
    assert engine.advance(session, team, STORE) is StepOutcome.PROGRESSED
    events_before = len(session.events)
    with pytest.raises(BackendError):
        engine.advance(session, team, STORE)
    assert len(session.events) == events_before  # nothing half-recorded
    # restore the scenario and the session continues from where it stopped
    scenario.responses[("reason", 1, 1)] = "recovered.\nCLAIM: sys | check | ok"
    assert engine.run_until_blocked(session, team, STORE) is StepOutcome.FINISHED


# --- feedback ---------------------------------------------------------------


def interactive_session(team, store=STORE, **kwargs):
    session = new_session("interactive", **kwargs)
    engine.plan_layers(session, team)
    outcome = engine.run_until_blocked(session, team, store)
    assert outcome is StepOutcome.AWAITING_USER
    return session


def test_approve_accepts_and_next_advance_starts_next_layer():
    team = scripted_team(2)
    session = interactive_session(team)
    assert session.layer_states[0] is LayerState.AWAITING_USER
    engine.apply_feedback(
        session, Feedback(session_id=session.id, layer_index=0, action="approve")
    )
    assert session.layer_states[0] is LayerState.ACCEPTED
    engine.advance(session, team, STORE)
    assert session.partials[1].layer_index == 1


def test_reject_note_reaches_refinement_prompt():
    recorder = RecordingBackend(ScriptedBackend(make_scenario(1)))
    team = AgentTeam.single(recorder)
    session = interactive_session(team)
    note = "patient is immunocompromised"
    engine.apply_feedback(
        session, Feedback(session_id=session.id, layer_index=0, action="reject", note=note)
    )
    assert session.layer_states[0] is LayerState.REFINING
    engine.advance(session, team, STORE)
    refine_prompts = [p for step, p in recorder.prompts if step == "refine"]
    assert len(refine_prompts) == 1
    assert note in refine_prompts[0]


def test_annotate_adds_constraint_visible_in_subsequent_prompts():
    recorder = RecordingBackend(ScriptedBackend(make_scenario(2)))
    team = AgentTeam.single(recorder)
    session = interactive_session(team)
    constraint = "risk-averse investor"
    engine.apply_feedback(
        session,
        Feedback(session_id=session.id, layer_index=0, action="annotate",
                 added_constraint=constraint),
    )
    assert session.layer_states[0] is LayerState.REASONING
    assert constraint in session.query.constraints
    engine.run_until_blocked(session, team, STORE)  # regenerate layer 0
    engine.apply_feedback(
        session, Feedback(session_id=session.id, layer_index=0, action="approve")
    )
    engine.run_until_blocked(session, team, STORE)  # generate layer 1
    later_prompts = [p for step, p in recorder.prompts if step == "reason"][1:]
    assert later_prompts and all(constraint in p for p in later_prompts)


def test_reject_with_exhausted_budget_fails_session():
    team = scripted_team(1)
    session = interactive_session(team, max_refinements=0)
    with pytest.raises(ValueError):
        Feedback(session_id=session.id, layer_index=0, action="reject", note="")
    engine.apply_feedback(
        session, Feedback(session_id=session.id, layer_index=0, action="reject", note="wrong")
    )
    assert session.layer_states[0] is LayerState.FAILED
    assert session.failed


def test_feedback_on_wrong_layer_rejected():
    team = scripted_team(2)
    session = interactive_session(team)
    with pytest.raises(WrongLayer):
        engine.apply_feedback(
            session, Feedback(session_id=session.id, layer_index=1, action="approve")
        )


def test_feedback_on_closed_session_rejected():
    team = scripted_team(1)
    session = new_session()
    engine.plan_layers(session, team)
    engine.run_until_blocked(session, team, STORE)
    with pytest.raises(SessionClosed):
        engine.apply_feedback(
            session, Feedback(session_id=session.id, layer_index=0, action="approve")
        )


def test_interactive_user_approval_overrides_contradiction():
    team = scripted_team(1, claim_lines={0: BROKEN})
    session = interactive_session(team)
    assert session.verdicts[0].aggregate is VerdictAggregate.NEEDS_REFINEMENT
    engine.apply_feedback(
        session, Feedback(session_id=session.id, layer_index=0, action="approve")
    )
    assert session.layer_states[0] is LayerState.ACCEPTED
    accepted = [e for e in session.events if e.kind is EventKind.LAYER_ACCEPTED]
    assert accepted[-1].payload["source"] == "user"


def test_hybrid_auto_refines_contradictions_and_asks_on_clean():
    session = new_session("hybrid")
    team = scripted_team(1, claim_lines={0: BROKEN})
    engine.plan_layers(session, team)
    outcome = engine.advance(session, team, STORE)  # contradiction: no user involved
    assert outcome is StepOutcome.PROGRESSED
    assert session.layer_states[0] is LayerState.REFINING
    outcome = engine.advance(session, team, STORE)  # clean refinement: user sign-off
    assert outcome is StepOutcome.AWAITING_USER
    assert session.layer_states[0] is LayerState.AWAITING_USER


# --- integrate / run_vanilla / quality --------------------------------------


def test_integrate_requires_all_layers_accepted():
    session = new_session()
    team = scripted_team(2)
    engine.plan_layers(session, team)
    engine.advance(session, team, STORE)
    with pytest.raises(NotReady):
        engine.integrate(session, team)


def test_single_layer_session_supporting_layers():
    session = new_session(max_layers=1)
    team = scripted_team(1)
    engine.plan_layers(session, team)
    engine.run_until_blocked(session, team, STORE)
    assert session.final.supporting_layers == [0]


def test_workflow_scenario_final_mentions_concurrency_caveat():
    scenario = load_scenario("algorithm_x")
    team = AgentTeam.single(ScriptedBackend(scenario))
    session = new_session()
    engine.plan_layers(session, team)
    engine.run_until_blocked(session, team, scenario_store(scenario))
    assert "concurrency libraries are essential" in session.final.text


def test_fully_knowledge_verified_session_has_quality_one():
    session = new_session()
    team = scripted_team(3)
    engine.plan_layers(session, team)
    engine.run_until_blocked(session, team, STORE)
    assert session.final.quality == 1.0


def test_vanilla_medical_gives_unguarded_answer():
    team = AgentTeam.single(ScriptedBackend(load_scenario("medical")))
    answer, events = engine.run_vanilla(Query(text="fever for 8 days, doctor?"), team)
    assert "rest and hydration suffice" in answer.text
    assert answer.quality == 0.0
    assert all(e.kind is not EventKind.VERDICT_RECORDED for e in events)
    assert backend_calls(events) == 1


def test_vanilla_empty_backend_raises():
    class EmptyBackend(Backend):
        def complete(self, step, prompt, *, layer=-1, attempt=1):
            raise BackendError("nothing scripted")

    with pytest.raises(BackendError):
        engine.run_vanilla(Query(text="q"), AgentTeam.single(EmptyBackend()))


def test_quality_counts_by_hand():
    # 5 claims total across two layers; 3 end up Supported -> 0.6
    session = new_session()
    team = scripted_team(
        2,
        claim_lines={
            0: "CLAIM: sys | check | ok\nCLAIM: sys | other | fine\nCLAIM: un | known | thing",
            1: "CLAIM: sys | check | ok\nCLAIM: also | un | known",
        },
    )
    engine.plan_layers(session, team)
    engine.run_until_blocked(session, team, STORE)
    assert quality(session.events) == pytest.approx(0.6)


def test_quality_zero_when_no_claims():
    assert quality([]) == 0.0


def test_refinement_lowers_quality():
    session = new_session()
    team = scripted_team(1, claim_lines={0: BROKEN})
    engine.plan_layers(session, team)
    engine.run_until_blocked(session, team, STORE)
    # attempt 1: 1 contradicted claim; attempt 2: 1 supported -> 1/2
    assert session.final.quality == pytest.approx(0.5)


# --- invariants on real traces ----------------------------------------------


def test_interaction_count_n_plus_two():
    for n in (1, 2, 5):
        counting = CountingBackend(ScriptedBackend(make_scenario(n)))
        team = AgentTeam.single(counting)
        session = new_session()
        engine.plan_layers(session, team)
        assert engine.run_until_blocked(session, team, STORE) is StepOutcome.FINISHED
        assert counting.calls == n + 2
        assert backend_calls(session.events) == n + 2


def test_replay_reconstructs_exactly():
    team = scripted_team(2, claim_lines={0: BROKEN})
    session = new_session()
    engine.plan_layers(session, team)
    engine.run_until_blocked(session, team, STORE)
    rebuilt = replay(session.events)
    assert rebuilt.snapshot_json() == session.snapshot_json()
    assert [e.to_dict() for e in rebuilt.events] == [e.to_dict() for e in session.events]


def test_echo_backend_round_trips_prompt():
    team = AgentTeam.single(EchoBackend())
    session = new_session(max_layers=2)
    with pytest.raises(EmptyPlan):
        # the echo planner returns the plan prompt, which has no LAYER lines
        engine.plan_layers(session, team)


def test_refine_budget_boundary():
    from layercot.prompts import PromptContext
    from layercot.types import PartialReasoning

    previous = PartialReasoning(layer_index=0, narrative="x", claims=[], attempt=3)
    with pytest.raises(BudgetExhausted):
        engine.refine_partial(
            previous, None, None, scripted_team(1), PromptContext(query="q", objective="o"),
            EngineConfig(max_refinements=2),
        )
