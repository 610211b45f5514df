"""Line-oriented grammars for agent output.

Claim lines:   ``CLAIM: <subject> | <predicate> | <object>``
Plan lines:    ``LAYER: <objective>``

Fields are trimmed; they may not contain ``|`` or newlines. Anything that
does not match contributes to the narrative only. A malformed CLAIM line
(wrong arity or an empty field) is skipped with a warning, never an error,
so noisy model output cannot wedge a session.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .types import Assertion, Claim

logger = logging.getLogger(__name__)

CLAIM_PREFIX = "CLAIM:"
LAYER_PREFIX = "LAYER:"


@dataclass
class ParsedClaims:
    claims: list[Claim] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def parse_claims(narrative: str) -> ParsedClaims:
    """Extract claims from a narrative. Total: never raises on any input.

    Claims receive sequential ids c1, c2, ... in order of appearance.
    """
    result = ParsedClaims()
    for lineno, raw in enumerate(narrative.splitlines(), start=1):
        line = raw.strip()
        if not line.startswith(CLAIM_PREFIX):
            continue
        body = line[len(CLAIM_PREFIX):].strip()
        fields = [f.strip() for f in body.split("|")]
        if len(fields) != 3:
            result.warnings.append(
                f"line {lineno}: CLAIM line has {len(fields)} field(s), expected 3"
            )
            continue
        if not all(fields):
            result.warnings.append(f"line {lineno}: CLAIM line has an empty field")
            continue
        subject, predicate, obj = fields
        result.claims.append(
            Claim(
                id=f"c{len(result.claims) + 1}",
                statement=f"{subject} | {predicate} | {obj}",
                assertion=Assertion(subject=subject, predicate=predicate, object=obj),
            )
        )
    for warning in result.warnings:
        logger.warning("claim parse: %s", warning)
    return result


def render_claim_line(assertion: Assertion) -> str:
    """Inverse of parse_claims for a single structured claim."""
    return f"{CLAIM_PREFIX} {assertion.subject} | {assertion.predicate} | {assertion.object}"


def parse_layer_lines(text: str) -> list[str]:
    """Extract planned objectives from ``LAYER:`` lines, in order.

    Empty objectives are dropped; non-matching lines are planner chatter.
    """
    objectives = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line.startswith(LAYER_PREFIX):
            continue
        objective = line[len(LAYER_PREFIX):].strip()
        if objective:
            objectives.append(objective)
    return objectives
