"""Planning and orchestration: build an execution plan, run its workflow
steps, record every intermediate output, and resolve the audience.
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import llm
from .boolexpr import (
    EntityExpr,
    Or,
    PredLeaf,
    PrefixHeader,
    augment,
    evaluate as bool_evaluate,
    leaves,
    print_canonical,
    print_entity_body,
)
from .compile import LinkMeta, from_jvql, to_jvql, to_pattern_tree, to_sparql
from .explain import ExplanationReport, build_report
from .index import EntityIndex, Match
from .mapping import (
    DEFAULT_CLASS_NS,
    DEFAULT_ENTITY_NS,
    Ontology,
    PredicateMapping,
    load_mapping,
)
from .model import RDFS_LABEL, Iri, Literal
from .store import EventBus, LoadReport, TripleStore

NL_QUERY = "nl-query"
FORMAL_QUERY = "formal-query"
ENTITY_LOOKUP = "entity-lookup"

_STEP_DESCRIPTIONS = {
    "NER": "Identify the key terms in the statement and mark them with term markers.",
    "LINK": "Match each key term to the best-scoring knowledge base entity.",
    "FQF": "Formulate the statement as a Boolean algebra expression over the key terms.",
    "AUGMENT": "Replace each key term with its matched entity and class predicate.",
    "COMPILE": "Compile the entity expression to jVQL, SPARQL, and an executable graph pattern.",
    "EXECUTE": "Evaluate the compiled pattern against the knowledge base.",
    "EXPLAIN": "Assemble the step-by-step explanation of how the audience was derived.",
    "PARSE-JVQL": "Validate the submitted jVQL document and restore the entity expression.",
    "SEARCH": "Search entity labels for the best matches.",
}

_PLAN_STEPS = {
    NL_QUERY: ("NER", "LINK", "FQF", "AUGMENT", "COMPILE", "EXECUTE", "EXPLAIN"),
    FORMAL_QUERY: ("PARSE-JVQL", "COMPILE", "EXECUTE", "EXPLAIN"),
    ENTITY_LOOKUP: ("SEARCH",),
}


class PlanError(ValueError):
    """A request the planner cannot build a plan for."""


class StepFailure(RuntimeError):
    """A pipeline step failed; downstream steps were skipped."""

    def __init__(
        self, step: str, message: str, candidates: list[Match] | None = None
    ) -> None:
        super().__init__(f"step {step}: {message}")
        self.step = step
        self.message = message
        self.candidates = candidates or []


@dataclass(frozen=True)
class Request:
    kind: str
    statement: str | None = None
    jvql: dict | None = None
    search_text: str | None = None
    expand_hierarchy: bool = False
    result_limit: int | None = None
    search_k: int = 10


@dataclass(frozen=True)
class StepDescriptor:
    name: str
    description: str
    expand_hierarchy: bool = False


@dataclass(frozen=True)
class ExecutionPlan:
    plan_id: str
    request_kind: str
    steps: tuple[StepDescriptor, ...]


@dataclass
class StepRecord:
    step_name: str
    description: str
    input_summary: str
    output: dict[str, Any]
    status: str  # "ok" | "error"
    duration_ms: float
    error: str | None = None


@dataclass
class AudienceResult:
    """Resolved recipients, ordered by IRI, with per-person branch justifications."""

    persons: tuple[tuple[str, str], ...]  # (iri, display name)
    total: int
    matched_branches: dict[str, tuple[str, ...]] = field(default_factory=dict)


@dataclass
class PipelineResult:
    plan: ExecutionPlan
    records: list[StepRecord] = field(default_factory=list)
    term_expression: str | None = None
    reasoning: tuple[str, ...] = ()
    links: dict[str, Match] = field(default_factory=dict)
    entity_expr: EntityExpr | None = None
    boolean_expression: str | None = None
    jvql: dict | None = None
    sparql: str | None = None
    audience: AudienceResult | None = None
    matches: list[Match] = field(default_factory=list)
    explanation: ExplanationReport | None = None
    error: StepFailure | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class EngineConfig:
    class_ns: str = DEFAULT_CLASS_NS
    entity_ns: str = DEFAULT_ENTITY_NS
    link_threshold: float = 0.35
    link_candidates: int = 3

    @property
    def person_class(self) -> Iri:
        return Iri(self.class_ns + "Person")

    @property
    def header(self) -> PrefixHeader:
        return PrefixHeader(Iri(self.class_ns), Iri(self.entity_ns))


class Engine:
    """Wires store, index, mapping, and provider behind the pipeline API."""

    def __init__(
        self,
        store: TripleStore,
        index: EntityIndex,
        mapping: PredicateMapping,
        provider: llm.CompletionProvider,
        config: EngineConfig | None = None,
    ) -> None:
        self.store = store
        self.index = index
        self.mapping = mapping
        self.provider = provider
        self.config = config or EngineConfig()
        self.plans: dict[str, PipelineResult] = {}

    @classmethod
    def create(
        cls,
        provider: llm.CompletionProvider,
        kb_file: str | Path | None = None,
        mapping_file: str | Path = "config/mapping.json",
        ontology_file: str | Path = "config/ontology.json",
        config: EngineConfig | None = None,
    ) -> Engine:
        bus = EventBus()
        store = TripleStore(bus=bus)
        ontology = Ontology.from_file(ontology_file)
        index = EntityIndex(set(ontology.declared_classes), bus=bus)
        mapping = load_mapping(mapping_file, ontology)
        engine = cls(store, index, mapping, provider, config=config)
        if kb_file is not None:
            engine.load_document(Path(kb_file).read_text())
        return engine

    # -- ingestion and search -------------------------------------------------

    def load_document(self, text: str) -> LoadReport:
        report = self.store.load_triples(text)
        self.index.barrier()
        return report

    def search(self, query: str, k: int = 10, class_iri: str | None = None) -> list[Match]:
        return self.index.search(query, k, class_iri=class_iri)

    # -- planning ---------------------------------------------------------------

    def plan(self, request: Request) -> ExecutionPlan:
        if request.kind not in _PLAN_STEPS:
            raise PlanError(f"unknown request kind: {request.kind!r}")
        payload = {
            NL_QUERY: request.statement,
            FORMAL_QUERY: request.jvql,
            ENTITY_LOOKUP: request.search_text,
        }[request.kind]
        if payload is None or (isinstance(payload, str) and not payload.strip()):
            raise PlanError(f"empty payload for {request.kind} request")
        steps = tuple(
            StepDescriptor(
                name=name,
                description=_STEP_DESCRIPTIONS[name],
                expand_hierarchy=request.expand_hierarchy and name == "COMPILE",
            )
            for name in _PLAN_STEPS[request.kind]
        )
        return ExecutionPlan(
            plan_id=uuid.uuid4().hex, request_kind=request.kind, steps=steps
        )

    # -- running ------------------------------------------------------------------

    def run(self, plan: ExecutionPlan, request: Request) -> PipelineResult:
        result = PipelineResult(plan=plan)
        state: dict[str, Any] = {}
        for step in plan.steps:
            started = time.perf_counter()
            try:
                summary, output = self._run_step(step.name, request, state, result)
            except StepFailure as failure:
                result.records.append(
                    StepRecord(
                        step_name=step.name,
                        description=step.description,
                        input_summary=_input_summary(step.name, request, state),
                        output={
                            "candidates": [_match_dict(m) for m in failure.candidates]
                        },
                        status="error",
                        duration_ms=_elapsed_ms(started),
                        error=failure.message,
                    )
                )
                result.error = failure
                break
            except Exception as exc:
                failure = StepFailure(step.name, str(exc))
                result.records.append(
                    StepRecord(
                        step_name=step.name,
                        description=step.description,
                        input_summary=_input_summary(step.name, request, state),
                        output={},
                        status="error",
                        duration_ms=_elapsed_ms(started),
                        error=str(exc),
                    )
                )
                result.error = failure
                break
            result.records.append(
                StepRecord(
                    step_name=step.name,
                    description=step.description,
                    input_summary=summary,
                    output=output,
                    status="ok",
                    duration_ms=_elapsed_ms(started),
                )
            )
        if result.explanation is None:
            result.explanation = build_report(plan, result.records, result, request)
        self.plans[plan.plan_id] = result
        return result

    def query(self, request: Request) -> PipelineResult:
        return self.run(self.plan(request), request)

    # -- individual steps ---------------------------------------------------------

    def _run_step(
        self,
        name: str,
        request: Request,
        state: dict[str, Any],
        result: PipelineResult,
    ) -> tuple[str, dict[str, Any]]:
        if name == "NER":
            assert request.statement is not None
            tagged = llm.ner_tag(request.statement, self.provider)
            state["terms"] = list(dict.fromkeys(tagged.term_texts))
            return (
                f"statement ({len(request.statement)} chars)",
                {
                    "tagged": tagged.tagged,
                    "terms": [
                        {"term": term, "start": span[0], "end": span[1]}
                        for term, span in tagged.terms
                    ],
                },
            )

        if name == "LINK":
            links = self.link_terms(state["terms"])
            result.links = links
            return (
                f"{len(state['terms'])} terms",
                {"links": [_link_dict(t, m) for t, m in links.items()]},
            )

        if name == "FQF":
            assert request.statement is not None
            fqf = llm.fqf_formulate(request.statement, state["terms"], self.provider)
            result.term_expression = fqf.expression_text
            result.reasoning = fqf.reasoning
            state["term_expr"] = fqf.parse()
            return (
                f"statement + {len(state['terms'])} terms",
                {
                    "reasoning": list(fqf.reasoning),
                    "expressionText": fqf.expression_text,
                },
            )

        if name == "AUGMENT":
            link_map = {
                term: (m.entity.class_iri, m.entity.iri)
                for term, m in result.links.items()
            }
            entity_expr = augment(state["term_expr"], link_map)
            result.entity_expr = entity_expr
            result.boolean_expression = print_canonical(entity_expr, self.config.header)
            return (
                "term expression + links",
                {"booleanExpression": result.boolean_expression},
            )

        if name == "PARSE-JVQL":
            assert request.jvql is not None
            entity_expr = from_jvql(request.jvql)
            result.entity_expr = entity_expr
            result.boolean_expression = print_canonical(entity_expr, self.config.header)
            return (
                "jVQL document",
                {"booleanExpression": result.boolean_expression},
            )

        if name == "COMPILE":
            entity_expr = result.entity_expr
            assert entity_expr is not None
            meta = self._link_meta(entity_expr, result.links)
            result.jvql = to_jvql(entity_expr, meta)
            result.sparql = to_sparql(entity_expr, self.mapping, self.config.header)
            state["pattern"] = to_pattern_tree(
                entity_expr,
                self.mapping,
                self.config.person_class,
                expand_hierarchy=request.expand_hierarchy,
                closure=self.store.hierarchy_closure,
            )
            return (
                "entity expression",
                {"sparql": result.sparql, "jvql": result.jvql},
            )

        if name == "EXECUTE":
            assert result.entity_expr is not None
            audience = self._execute(state["pattern"], result.entity_expr, request)
            result.audience = audience
            return (
                "compiled pattern",
                {
                    "audienceCount": audience.total,
                    "persons": [
                        {"iri": iri, "name": name_} for iri, name_ in audience.persons
                    ],
                },
            )

        if name == "EXPLAIN":
            report = build_report(
                result.plan, result.records, result, request, include_explain=True
            )
            result.explanation = report
            return (
                f"{len(result.records)} step records",
                {
                    "sections": [s.name for s in report.sections],
                    "caveats": list(report.caveats),
                },
            )

        if name == "SEARCH":
            assert request.search_text is not None
            matches = self.search(request.search_text, request.search_k)
            result.matches = matches
            return (
                f"query {request.search_text!r}",
                {"matches": [_match_dict(m) for m in matches]},
            )

        raise StepFailure(name, f"unknown step {name!r}")

    def link_terms(self, terms: list[str]) -> dict[str, Match]:
        """Top-1 index match per term, at or above the linking threshold."""
        links: dict[str, Match] = {}
        for term in terms:
            candidates = self.index.search(term, self.config.link_candidates)
            if not candidates or candidates[0].score < self.config.link_threshold:
                raise StepFailure(
                    "LINK",
                    f"no entity match for term {term!r} at threshold "
                    f"{self.config.link_threshold}",
                    candidates=candidates,
                )
            links[term] = candidates[0]
        return links

    def _link_meta(
        self, expr: EntityExpr, links: dict[str, Match]
    ) -> dict[str, LinkMeta]:
        by_entity: dict[str, LinkMeta] = {}
        for term, match in links.items():
            by_entity[match.entity.iri.value] = LinkMeta(
                label=match.entity.primary_label,
                matched_term=term,
                link_score=match.score,
            )
        for leaf in leaves(expr):
            if not isinstance(leaf, PredLeaf):
                continue
            iri = leaf.entity_iri.value
            if iri not in by_entity:
                record = self.index.record_for(iri)
                label = record.primary_label if record else iri.rsplit("/", 1)[-1]
                by_entity[iri] = LinkMeta(label=label)
        return by_entity

    def _execute(
        self, pattern: Any, expr: EntityExpr, request: Request
    ) -> AudienceResult:
        solutions = self.store.evaluate(pattern)
        iris = solutions.as_iris()
        persons = tuple((iri, self._display_name(iri)) for iri in iris)
        matched = {
            iri: self._matched_branches(expr, Iri(iri), request.expand_hierarchy)
            for iri in iris
        }
        if request.result_limit is not None:
            persons = persons[: request.result_limit]
        return AudienceResult(
            persons=persons, total=len(iris), matched_branches=matched
        )

    def _display_name(self, iri: str) -> str:
        labels = sorted(
            o.text
            for o in self.store.objects(Iri(iri), Iri(RDFS_LABEL))
            if isinstance(o, Literal)
        )
        return labels[0] if labels else iri.rsplit("/", 1)[-1]

    def person_facts(self, person: Iri, expand_hierarchy: bool = False) -> set[tuple[str, str]]:
        """(class IRI, entity IRI) pairs reachable from a person via mapping paths.

        With expansion, a reached entity also counts as every broader entity
        above it along the class's hierarchy property.
        """
        facts: set[tuple[str, str]] = set()
        with self.store.read():
            for class_iri, cm in self.mapping.classes.items():
                frontier: set[Iri] = {person}
                for prop in cm.path:
                    frontier = {
                        o
                        for node in frontier
                        for _, _, o in self.store.match(node, prop, None)
                        if isinstance(o, Iri)
                    }
                values = set(frontier)
                if expand_hierarchy and cm.hierarchy_property is not None:
                    for value in frontier:
                        values |= self._ancestors(value, cm.hierarchy_property)
                facts |= {(class_iri, v.value) for v in values}
        return facts

    def _ancestors(self, entity: Iri, prop: Iri) -> set[Iri]:
        out = {entity}
        frontier = [entity]
        while frontier:
            current = frontier.pop()
            for _, _, o in self.store.match(current, prop, None):
                if isinstance(o, Iri) and o not in out:
                    out.add(o)
                    frontier.append(o)
        return out

    def _matched_branches(
        self, expr: EntityExpr, person: Iri, expand_hierarchy: bool
    ) -> tuple[str, ...]:
        """Canonical texts of the OR branches this person satisfies."""
        or_nodes = _collect_or_nodes(expr)
        if not or_nodes:
            return ()
        facts = self.person_facts(person, expand_hierarchy)
        satisfied = []
        for node in or_nodes:
            for branch in node.children:
                if bool_evaluate(branch, facts):
                    satisfied.append(print_entity_body(branch, self.config.header))
        return tuple(satisfied)


def _collect_or_nodes(e: EntityExpr) -> list[Or]:
    from .boolexpr import And, Not

    if isinstance(e, Or):
        nested = [n for c in e.children for n in _collect_or_nodes(c)]
        return [e, *nested]
    if isinstance(e, And):
        return [n for c in e.children for n in _collect_or_nodes(c)]
    if isinstance(e, Not):
        return _collect_or_nodes(e.child)
    return []


def _elapsed_ms(started: float) -> float:
    return round((time.perf_counter() - started) * 1000, 3)


def _match_dict(m: Match) -> dict[str, Any]:
    return {
        "entityIri": m.entity.iri.value,
        "classIri": m.entity.class_iri.value,
        "label": m.entity.primary_label,
        "matchedLabel": m.matched_label,
        "score": m.score,
    }


def _link_dict(term: str, m: Match) -> dict[str, Any]:
    return {"term": term, **_match_dict(m)}


def _input_summary(name: str, request: Request, state: dict[str, Any]) -> str:
    if name in ("NER", "FQF"):
        return f"statement ({len(request.statement or '')} chars)"
    if name == "LINK":
        return f"{len(state.get('terms', []))} terms"
    if name == "PARSE-JVQL":
        return "jVQL document"
    if name == "SEARCH":
        return f"query {request.search_text!r}"
    return "pipeline state"
