"""Deterministic rendering of pipeline runs into explanation reports.

The report is a template rendering of the execution plan's steps, the
term-to-entity mapping table, the logical structure of the query, and the
audience summary. It never contains plan ids or timings, so identical runs
render byte-identical reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

from .boolexpr import And, EntityExpr, Not, PredLeaf

if TYPE_CHECKING:
    from .orchestrator import ExecutionPlan, PipelineResult, Request, StepRecord


@dataclass(frozen=True)
class MappingRow:
    term: str | None  # None marks a user-supplied (formal query) predicate
    entity_iri: str
    label: str
    class_iri: str
    score: float | None


@dataclass(frozen=True)
class StepSection:
    name: str
    narrative: str
    outputs: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ExplanationReport:
    request_kind: str
    sections: tuple[StepSection, ...]
    entity_mapping: tuple[MappingRow, ...]
    logical_structure: str
    audience_count: int | None
    caveats: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "requestKind": self.request_kind,
            "sections": [
                {"name": s.name, "narrative": s.narrative, "outputs": s.outputs}
                for s in self.sections
            ],
            "entityMappingTable": [
                {
                    "term": r.term,
                    "entityIri": r.entity_iri,
                    "label": r.label,
                    "classIri": r.class_iri,
                    "score": r.score,
                }
                for r in self.entity_mapping
            ],
            "logicalStructure": self.logical_structure,
            "audienceCount": self.audience_count,
            "caveats": list(self.caveats),
        }


CAVEAT_HIERARCHY_ON = (
    "Hierarchy expansion ON: an entity predicate also matches its narrower "
    "descendants (for example, a broader job title includes its sub-titles)."
)
CAVEAT_HIERARCHY_OFF = (
    "Hierarchy expansion OFF: each entity predicate matches exactly that entity."
)
CAVEAT_USER_SUPPLIED = (
    "The query was supplied as a formal jVQL document; no language "
    "interpretation was involved."
)


def _narrative(record: StepRecord) -> str:
    if record.status == "error":
        return f"Step {record.step_name} failed: {record.error}"
    out = record.output
    name = record.step_name
    if name == "NER":
        terms = [t["term"] for t in out.get("terms", [])]
        quoted = ", ".join(f"'{t}'" for t in terms)
        return f"Marked {len(terms)} key terms in the statement: {quoted}."
    if name == "LINK":
        links = out.get("links", [])
        if not links:
            return "No terms required linking."
        lowest = min(link["score"] for link in links)
        return (
            f"Linked {len(links)} terms to knowledge base entities "
            f"(lowest link score {lowest:.2f})."
        )
    if name == "FQF":
        steps = out.get("reasoning", [])
        return (
            f"Formulated the Boolean expression {out.get('expressionText', '')!r} "
            f"after {len(steps)} reasoning steps."
        )
    if name == "AUGMENT":
        return "Replaced each key term with its matched class and entity predicate."
    if name == "PARSE-JVQL":
        return "Validated the jVQL document and restored the entity expression."
    if name == "COMPILE":
        return "Compiled the entity expression to jVQL, SPARQL, and a graph pattern."
    if name == "EXECUTE":
        return f"Resolved the audience: {out.get('audienceCount', 0)} recipients."
    if name == "EXPLAIN":
        return "Assembled this explanation from the recorded pipeline steps."
    if name == "SEARCH":
        return f"Found {len(out.get('matches', []))} matching entities."
    return record.description


def _logical_tree(e: EntityExpr | None, labels: dict[str, str]) -> str:
    if e is None:
        return "(no query expression)"
    lines: list[str] = []
    _tree_lines(e, labels, 0, lines)
    return "\n".join(lines)


def _tree_lines(
    e: EntityExpr, labels: dict[str, str], depth: int, lines: list[str]
) -> None:
    pad = "  " * depth
    if isinstance(e, PredLeaf):
        class_name = e.class_iri.value.rsplit("/", 1)[-1]
        entity_name = e.entity_iri.value.rsplit("/", 1)[-1]
        label = labels.get(e.entity_iri.value, entity_name)
        lines.append(f"{pad}{class_name} = {label} ({entity_name})")
        return
    if isinstance(e, Not):
        lines.append(f"{pad}NOT")
        _tree_lines(e.child, labels, depth + 1, lines)
        return
    lines.append(f"{pad}{'AND' if isinstance(e, And) else 'OR'}")
    for child in e.children:
        _tree_lines(child, labels, depth + 1, lines)


def _mapping_rows(result: PipelineResult, request: Request) -> tuple[MappingRow, ...]:
    rows: list[MappingRow] = []
    seen: set[str] = set()
    for term, match in result.links.items():
        rows.append(
            MappingRow(
                term=term,
                entity_iri=match.entity.iri.value,
                label=match.entity.primary_label,
                class_iri=match.entity.class_iri.value,
                score=match.score,
            )
        )
        seen.add(match.entity.iri.value)
    if result.entity_expr is not None:
        from .boolexpr import leaves

        for leaf in leaves(result.entity_expr):
            if isinstance(leaf, PredLeaf) and leaf.entity_iri.value not in seen:
                seen.add(leaf.entity_iri.value)
                label = _jvql_label(result.jvql, leaf.entity_iri.value)
                rows.append(
                    MappingRow(
                        term=None,
                        entity_iri=leaf.entity_iri.value,
                        label=label or leaf.entity_iri.value.rsplit("/", 1)[-1],
                        class_iri=leaf.class_iri.value,
                        score=None,
                    )
                )
    return tuple(rows)


def _jvql_label(doc: dict | None, entity_iri: str) -> str | None:
    if not doc:
        return None
    stack = [doc.get("root")]
    while stack:
        node = stack.pop()
        if not isinstance(node, dict):
            continue
        if node.get("kind") == "predicate" and node.get("entityIri") == entity_iri:
            return node.get("label")
        stack.extend(node.get("children", []))
        if "child" in node:
            stack.append(node["child"])
    return None


def build_report(
    plan: ExecutionPlan,
    records: list[StepRecord],
    result: PipelineResult,
    request: Request,
    include_explain: bool = False,
) -> ExplanationReport:
    """Render the report for the executed records (plus EXPLAIN itself if asked)."""
    sections = [
        StepSection(
            name=r.step_name,
            narrative=_narrative(r),
            outputs=r.output,
        )
        for r in records
    ]
    if include_explain:
        sections.append(
            StepSection(
                name="EXPLAIN",
                narrative="Assembled this explanation from the recorded pipeline steps.",
            )
        )

    rows = _mapping_rows(result, request)
    labels = {row.entity_iri: row.label for row in rows}
    caveats: list[str] = []
    if request.kind in ("nl-query", "formal-query"):
        caveats.append(
            CAVEAT_HIERARCHY_ON if request.expand_hierarchy else CAVEAT_HIERARCHY_OFF
        )
    if request.kind == "formal-query":
        caveats.append(CAVEAT_USER_SUPPLIED)

    return ExplanationReport(
        request_kind=plan.request_kind,
        sections=tuple(sections),
        entity_mapping=rows,
        logical_structure=_logical_tree(result.entity_expr, labels),
        audience_count=result.audience.total if result.audience else None,
        caveats=tuple(caveats),
    )


def render_text(report: ExplanationReport) -> str:
    """Plain-text rendering for the CLI; deterministic for identical reports."""
    lines = [f"=== Explanation ({report.request_kind}) ==="]
    for i, section in enumerate(report.sections, start=1):
        lines.append(f"Step {i}: {section.name}")
        lines.append(f"  {section.narrative}")
    if report.entity_mapping:
        lines.append("--- Entity mapping ---")
        for row in report.entity_mapping:
            term = f"term '{row.term}'" if row.term is not None else "(user-supplied)"
            score = f" (score {row.score:.2f})" if row.score is not None else ""
            class_name = row.class_iri.rsplit("/", 1)[-1]
            lines.append(
                f"  {term} -> {row.label} [{class_name}] {row.entity_iri}{score}"
            )
    lines.append("--- Logical structure ---")
    lines.extend("  " + line for line in report.logical_structure.splitlines())
    if report.audience_count is not None:
        lines.append(f"--- Audience: {report.audience_count} recipients ---")
    if report.caveats:
        lines.append("Caveats:")
        lines.extend(f"  - {c}" for c in report.caveats)
    return "\n".join(lines)
