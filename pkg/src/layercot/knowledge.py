"""Immutable fact store and the automatic verification path.

The store is a set of polarity-tagged (subject, predicate, object) triples
loaded from a line-based text format:

    # comment
    @functional <predicate>
    <subject> | <predicate> | <object> | <true|false>

Matching is exact string equality after trimming, case-sensitive. A
predicate declared ``@functional`` allows at most one true object per
subject, which is what turns "patent_status is pending" into a
contradiction of "patent_status is granted" without any graph inference.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .types import (
    Assertion,
    ClaimStatus,
    EngineConfig,
    PartialReasoning,
    VerdictAggregate,
    VerdictSource,
    VerificationVerdict,
)


class FactError(Exception):
    """Base class for fact-store loading problems (bad fixture, not runtime)."""


class ParseError(FactError):
    def __init__(self, lineno: int, message: str) -> None:
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class ConsistencyError(FactError):
    pass


@dataclass(frozen=True)
class Fact:
    subject: str
    predicate: str
    object: str
    polarity: bool = True

    def __post_init__(self) -> None:
        for name in ("subject", "predicate", "object"):
            value = getattr(self, name)
            if not value:
                raise ValueError(f"fact {name} must be nonempty")
            if "|" in value or "\n" in value:
                raise ValueError(f"fact {name} may not contain '|' or newlines")

    def __str__(self) -> str:
        return f"({self.subject}, {self.predicate}, {self.object}, {'true' if self.polarity else 'false'})"


@dataclass(frozen=True)
class FactStore:
    """Immutable after construction; safe to share across sessions/threads."""

    facts: frozenset[Fact] = frozenset()
    functional_predicates: frozenset[str] = frozenset()
    # Lookup indexes, derived in __post_init__.
    _by_triple: dict = field(default_factory=dict, repr=False, compare=False)
    _true_by_pair: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        for fact in self.facts:
            key = (fact.subject, fact.predicate, fact.object)
            prior = self._by_triple.get(key)
            if prior is not None and prior != fact.polarity:
                raise ConsistencyError(
                    f"conflicting polarity for ({fact.subject}, {fact.predicate}, {fact.object})"
                )
            self._by_triple[key] = fact.polarity
            if fact.polarity:
                pair = (fact.subject, fact.predicate)
                self._true_by_pair.setdefault(pair, set()).add(fact.object)
        for predicate in self.functional_predicates:
            for (subject, pred), objects in self._true_by_pair.items():
                if pred == predicate and len(objects) > 1:
                    raise ConsistencyError(
                        f"functional predicate {predicate!r} has {len(objects)} "
                        f"true objects for subject {subject!r}"
                    )

    def __len__(self) -> int:
        return len(self.facts)

    def lookup(self, assertion: Assertion) -> ClaimStatus:
        """Pure three-way check of one triple against the store."""
        key = (assertion.subject, assertion.predicate, assertion.object)
        polarity = self._by_triple.get(key)
        if polarity is True:
            return ClaimStatus.SUPPORTED
        if polarity is False:
            return ClaimStatus.CONTRADICTED
        if assertion.predicate in self.functional_predicates:
            others = self._true_by_pair.get((assertion.subject, assertion.predicate), ())
            if others:  # a different true object exists for a one-valued predicate
                return ClaimStatus.CONTRADICTED
            return ClaimStatus.UNKNOWN
        return ClaimStatus.UNKNOWN

    def evidence_for(self, assertion: Assertion, status: ClaimStatus) -> str:
        key = (assertion.subject, assertion.predicate, assertion.object)
        polarity = self._by_triple.get(key)
        if polarity is not None:
            return f"matching fact ({assertion.subject}, {assertion.predicate}, {assertion.object}, {'true' if polarity else 'false'})"
        if status is ClaimStatus.CONTRADICTED:
            objects = self._true_by_pair.get((assertion.subject, assertion.predicate), set())
            listed = ", ".join(sorted(objects))
            return (
                f"functional predicate {assertion.predicate!r} holds "
                f"({assertion.subject}, {assertion.predicate}, {listed})"
            )
        return "no matching fact"


EMPTY_STORE = FactStore()


def load_store(document: str) -> FactStore:
    """Parse the fact-file grammar into a store.

    Raises ParseError with the offending line number, or ConsistencyError
    when the document contradicts itself.
    """
    facts: set[Fact] = set()
    functional: set[str] = set()
    for lineno, raw in enumerate(document.splitlines(), start=1):
        line = raw.rstrip()
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("@functional"):
            parts = stripped.split()
            if len(parts) != 2:
                raise ParseError(lineno, "expected '@functional <predicate>'")
            functional.add(parts[1])
            continue
        fields = [f.strip() for f in stripped.split("|")]
        if len(fields) != 4:
            raise ParseError(lineno, f"expected 4 '|'-separated fields, got {len(fields)}")
        subject, predicate, obj, polarity_text = fields
        if polarity_text not in ("true", "false"):
            raise ParseError(lineno, f"polarity must be 'true' or 'false', got {polarity_text!r}")
        if not (subject and predicate and obj):
            raise ParseError(lineno, "empty field in fact line")
        facts.add(Fact(subject=subject, predicate=predicate, object=obj,
                       polarity=polarity_text == "true"))
    return FactStore(facts=frozenset(facts), functional_predicates=frozenset(functional))


def load_store_file(path) -> FactStore:
    with open(path, encoding="utf-8") as fh:
        return load_store(fh.read())


def lookup(store: FactStore, assertion: Assertion) -> ClaimStatus:
    return store.lookup(assertion)


def verify_partial(
    store: FactStore,
    partial: PartialReasoning,
    config: EngineConfig,
) -> VerificationVerdict:
    """Check every claim of one layer attempt against the store.

    Claims without a structured assertion are Unknown (prose never blocks a
    layer). Aggregate: Accepted when nothing is contradicted, NeedsRefinement
    when contradicted with refinement budget left, Rejected otherwise.
    """
    per_claim: dict[str, ClaimStatus] = {}
    evidence: list[tuple[str, str]] = []
    for claim in partial.claims:
        if claim.assertion is None:
            status = ClaimStatus.UNKNOWN
            evidence.append((claim.id, "no structured assertion"))
        else:
            status = store.lookup(claim.assertion)
            evidence.append((claim.id, store.evidence_for(claim.assertion, status)))
        per_claim[claim.id] = status

    if any(s is ClaimStatus.CONTRADICTED for s in per_claim.values()):
        budget_left = partial.attempt <= config.max_refinements
        aggregate = VerdictAggregate.NEEDS_REFINEMENT if budget_left else VerdictAggregate.REJECTED
    else:
        aggregate = VerdictAggregate.ACCEPTED

    return VerificationVerdict(
        layer_index=partial.layer_index,
        attempt=partial.attempt,
        per_claim=per_claim,
        aggregate=aggregate,
        evidence=evidence,
        source=VerdictSource.KNOWLEDGE,
    )
