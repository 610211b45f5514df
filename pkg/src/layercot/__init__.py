"""Layer-by-layer verified chain-of-thought orchestration.

Public surface: domain types, the pipeline engine, the fact store, the
pluggable agent backends, and the error-propagation simulator.
"""
from .types import (
    Claim,
    EngineConfig,
    EventKind,
    Feedback,
    FeedbackAction,
    FinalAnswer,
    LayerPlan,
    LayerState,
    PartialReasoning,
    Query,
    Session,
    StepOutcome,
    TraceEvent,
    VerdictAggregate,
    VerificationMode,
    VerificationVerdict,
    replay,
)
from .engine import (
    advance,
    apply_feedback,
    backend_calls,
    create_session,
    integrate,
    plan_layers,
    quality,
    run_until_blocked,
    run_vanilla,
)
from .knowledge import Fact, FactStore, load_store, lookup, verify_partial
from .backends import (
    AgentTeam,
    Backend,
    BackendError,
    ChatBackend,
    ChatBackendConfig,
    EchoBackend,
    RoleKind,
    ScriptedBackend,
    ScriptedScenario,
)
from .sim import SimConfig, SimResult, analytic, simulate, sweep

__version__ = "0.1.0"

__all__ = [
    "AgentTeam",
    "Backend",
    "BackendError",
    "ChatBackend",
    "ChatBackendConfig",
    "Claim",
    "EchoBackend",
    "EngineConfig",
    "EventKind",
    "Fact",
    "FactStore",
    "Feedback",
    "FeedbackAction",
    "FinalAnswer",
    "LayerPlan",
    "LayerState",
    "PartialReasoning",
    "Query",
    "RoleKind",
    "ScriptedBackend",
    "ScriptedScenario",
    "Session",
    "SimConfig",
    "SimResult",
    "StepOutcome",
    "TraceEvent",
    "VerdictAggregate",
    "VerificationMode",
    "VerificationVerdict",
    "advance",
    "analytic",
    "apply_feedback",
    "backend_calls",
    "create_session",
    "integrate",
    "load_store",
    "lookup",
    "plan_layers",
    "quality",
    "replay",
    "run_until_blocked",
    "run_vanilla",
    "simulate",
    "sweep",
    "verify_partial",
]
