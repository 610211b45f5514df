"""Prompt templates and rendering.

Templates carry named placeholders from a fixed vocabulary: {query},
{constraints}, {objective}, {prior_layers}, {rejection_note}. Rendering is
deterministic; prior accepted layer narratives are included verbatim, in
order. A placeholder the context cannot bind raises UnboundPlaceholder.
"""
from __future__ import annotations

import string
from dataclasses import dataclass, field


class UnboundPlaceholder(Exception):
    pass


STEP_PLAN = "plan"
STEP_REASON = "reason"
STEP_REFINE = "refine"
STEP_INTEGRATE = "integrate"
STEP_VANILLA = "vanilla"


@dataclass(frozen=True)
class PromptTemplate:
    step: str
    body: str


@dataclass
class PromptContext:
    """Everything a template may draw on, built from the session by the engine."""

    query: str
    constraints: list[str] = field(default_factory=list)
    objective: str | None = None
    prior_layers: list[str] = field(default_factory=list)
    rejection_note: str | None = None

    def bindings(self) -> dict[str, str]:
        out = {
            "query": self.query,
            "constraints": "; ".join(self.constraints),
            "prior_layers": "\n\n".join(self.prior_layers),
        }
        if self.objective is not None:
            out["objective"] = self.objective
        if self.rejection_note is not None:
            out["rejection_note"] = self.rejection_note
        return out


def render_prompt(template: PromptTemplate, context: PromptContext) -> str:
    bindings = context.bindings()
    formatter = string.Formatter()
    for _, name, _, _ in formatter.parse(template.body):
        if name is None:
            continue
        if name not in bindings:
            raise UnboundPlaceholder(
                f"template for step {template.step!r} references {{{name}}} "
                "which the context does not bind"
            )
    return template.body.format(**bindings)


# Default templates. The LAYER:/CLAIM: instructions are what let a real
# chat backend drive the same parser the scripted fixtures exercise.

DEFAULT_TEMPLATES: dict[str, PromptTemplate] = {
    STEP_PLAN: PromptTemplate(
        step=STEP_PLAN,
        body=(
            "Break the question below into a short ordered list of sub-problems, "
            "each answerable and checkable on its own.\n"
            "Write one line per sub-problem, prefixed with 'LAYER:'.\n"
            "Question: {query}\n"
            "Constraints: {constraints}\n"
        ),
    ),
    STEP_REASON: PromptTemplate(
        step=STEP_REASON,
        body=(
            "Work on one sub-problem of the question. Reason briefly, then state "
            "each checkable fact you rely on as a line "
            "'CLAIM: subject | predicate | object'.\n"
            "Question: {query}\n"
            "Constraints: {constraints}\n"
            "Sub-problem: {objective}\n"
            "Validated earlier layers:\n{prior_layers}\n"
        ),
    ),
    STEP_REFINE: PromptTemplate(
        step=STEP_REFINE,
        body=(
            "Your previous partial answer for this sub-problem did not hold up. "
            "Revise it, correcting the problems listed, and restate your checkable "
            "facts as 'CLAIM: subject | predicate | object' lines.\n"
            "Question: {query}\n"
            "Constraints: {constraints}\n"
            "Sub-problem: {objective}\n"
            "Validated earlier layers:\n{prior_layers}\n"
            "What went wrong:\n{rejection_note}\n"
        ),
    ),
    STEP_INTEGRATE: PromptTemplate(
        step=STEP_INTEGRATE,
        body=(
            "Combine the validated layers below into a final answer to the "
            "question. Keep every caveat the layers established.\n"
            "Question: {query}\n"
            "Constraints: {constraints}\n"
            "Validated layers:\n{prior_layers}\n"
        ),
    ),
    STEP_VANILLA: PromptTemplate(
        step=STEP_VANILLA,
        body=(
            "Think step by step, then answer the question.\n"
            "Question: {query}\n"
            "Constraints: {constraints}\n"
        ),
    ),
}
