"""Compile entity expressions into SPARQL text, pattern trees, and jVQL.

All three targets share one deterministic fresh-variable allocation: each
predicate leaf claims its intermediate variables in left-to-right leaf order,
so identical input always yields byte-identical SPARQL.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

from .boolexpr import (
    And,
    EntityExpr,
    Expr,
    Not,
    Or,
    PredLeaf,
    PrefixHeader,
    canonicalize,
    check_canonical,
)
from .mapping import MappingError, PredicateMapping
from .model import RDF_TYPE, Iri
from .patterns import (
    Bgp,
    DistinctProject,
    Group,
    NotExists,
    PatternNode,
    TriplePattern,
    Union,
    Var,
)

JVQL_VERSION = "1"

ClosureFn = Callable[[Iri, Iri], set[Iri]]


class JvqlError(ValueError):
    """A malformed jVQL document."""


class _VarCounter:
    def __init__(self) -> None:
        self.n = 0

    def fresh(self) -> Var:
        self.n += 1
        return Var(f"?v{self.n}")


_PERSON = Var("?person")


# -- SPARQL text ---------------------------------------------------------------


def _sparql_term(iri: Iri, header: PrefixHeader) -> str:
    if iri.value.startswith(header.class_ns.value):
        return "ont:" + iri.value[len(header.class_ns.value) :]
    if iri.value.startswith(header.entity_ns.value):
        return "ent:" + iri.value[len(header.entity_ns.value) :]
    return f"<{iri.value}>"


def _leaf_sparql(
    leaf: PredLeaf,
    mapping: PredicateMapping,
    header: PrefixHeader,
    counter: _VarCounter,
    indent: str,
) -> list[str]:
    path = mapping.for_class(leaf.class_iri.value).path
    lines = []
    subject = "?person"
    for i, prop in enumerate(path):
        last = i == len(path) - 1
        obj = _sparql_term(leaf.entity_iri, header) if last else counter.fresh().name
        lines.append(f"{indent}{subject} {_sparql_term(prop, header)} {obj} .")
        subject = obj
    return lines


def _node_sparql(
    e: Expr,
    mapping: PredicateMapping,
    header: PrefixHeader,
    counter: _VarCounter,
    indent: str,
) -> list[str]:
    if isinstance(e, PredLeaf):
        return _leaf_sparql(e, mapping, header, counter, indent)
    if isinstance(e, And):
        lines: list[str] = []
        for child in e.children:
            lines.extend(_node_sparql(child, mapping, header, counter, indent))
        return lines
    if isinstance(e, Or):
        lines = []
        for i, child in enumerate(e.children):
            if i:
                lines.append(f"{indent}UNION")
            lines.append(f"{indent}{{")
            lines.extend(_node_sparql(child, mapping, header, counter, indent + "  "))
            lines.append(f"{indent}}}")
        return lines
    if isinstance(e, Not):
        lines = [f"{indent}FILTER NOT EXISTS {{"]
        lines.extend(_node_sparql(e.child, mapping, header, counter, indent + "  "))
        lines.append(f"{indent}}}")
        return lines
    raise MappingError(f"cannot compile node {e!r}")


def to_sparql(e: EntityExpr, mapping: PredicateMapping, header: PrefixHeader) -> str:
    """Deterministic SPARQL: person-typed guard, UNION for OR, NOT EXISTS for NOT."""
    check_canonical(e)
    counter = _VarCounter()
    lines = [
        f"PREFIX ont: <{header.class_ns.value}>",
        f"PREFIX ent: <{header.entity_ns.value}>",
        "SELECT DISTINCT ?person WHERE {",
        "  ?person a ont:Person .",
    ]
    lines.extend(_node_sparql(e, mapping, header, counter, "  "))
    lines.append("}")
    return "\n".join(lines)


# -- pattern tree ---------------------------------------------------------------


def _leaf_patterns(
    entity: Iri, path: tuple[Iri, ...], counter: _VarCounter
) -> Bgp:
    patterns = []
    subject: Var | Iri = _PERSON
    for i, prop in enumerate(path):
        last = i == len(path) - 1
        obj: Var | Iri = entity if last else counter.fresh()
        patterns.append(TriplePattern(subject, prop, obj))
        subject = obj
    return Bgp(tuple(patterns))


def _node_pattern(
    e: Expr,
    mapping: PredicateMapping,
    counter: _VarCounter,
    expand: bool,
    closure: ClosureFn | None,
) -> PatternNode:
    if isinstance(e, PredLeaf):
        cm = mapping.for_class(e.class_iri.value)
        if expand and cm.hierarchy_property is not None:
            if closure is None:
                raise MappingError("hierarchy expansion requires a closure function")
            members = sorted(closure(e.entity_iri, cm.hierarchy_property))
            if len(members) > 1:
                return Union(
                    tuple(_leaf_patterns(m, cm.path, counter) for m in members)
                )
        return _leaf_patterns(e.entity_iri, cm.path, counter)
    if isinstance(e, And):
        return Group(
            tuple(_node_pattern(c, mapping, counter, expand, closure) for c in e.children)
        )
    if isinstance(e, Or):
        return Union(
            tuple(_node_pattern(c, mapping, counter, expand, closure) for c in e.children)
        )
    if isinstance(e, Not):
        return NotExists(_node_pattern(e.child, mapping, counter, expand, closure))
    raise MappingError(f"cannot compile node {e!r}")


def to_pattern_tree(
    e: EntityExpr,
    mapping: PredicateMapping,
    person_class: Iri,
    expand_hierarchy: bool = False,
    closure: ClosureFn | None = None,
) -> DistinctProject:
    """Compile to the embedded evaluator's language.

    With expand_hierarchy set, a leaf whose class declares a hierarchy
    property becomes a UNION over the entity's descendant closure.
    """
    check_canonical(e)
    counter = _VarCounter()
    guard = Bgp((TriplePattern(_PERSON, Iri(RDF_TYPE), person_class),))
    body = _node_pattern(e, mapping, counter, expand_hierarchy, closure)
    return DistinctProject(_PERSON, Group((guard, body)))


# -- jVQL -------------------------------------------------------------------------


@dataclass(frozen=True)
class LinkMeta:
    """Display metadata attached to a predicate node."""

    label: str
    matched_term: str | None = None
    link_score: float | None = None


def _local_name(iri: Iri) -> str:
    value = iri.value
    for sep in ("/", "#"):
        if sep in value:
            value = value.rsplit(sep, 1)[1] or value
    return value


def _node_jvql(e: Expr, meta: dict[str, LinkMeta]) -> dict[str, Any]:
    if isinstance(e, PredLeaf):
        node: dict[str, Any] = {
            "kind": "predicate",
            "classIri": e.class_iri.value,
            "entityIri": e.entity_iri.value,
        }
        m = meta.get(e.entity_iri.value)
        node["label"] = m.label if m else _local_name(e.entity_iri)
        if m and m.matched_term is not None:
            node["matchedTerm"] = m.matched_term
        if m and m.link_score is not None:
            node["linkScore"] = m.link_score
        return node
    if isinstance(e, Not):
        return {"kind": "not", "child": _node_jvql(e.child, meta)}
    kind = "and" if isinstance(e, And) else "or"
    return {"kind": kind, "children": [_node_jvql(c, meta) for c in e.children]}


def to_jvql(e: EntityExpr, meta: dict[str, LinkMeta] | None = None) -> dict[str, Any]:
    check_canonical(e)
    return {"version": JVQL_VERSION, "root": _node_jvql(e, meta or {})}


def _node_from_jvql(node: Any) -> Expr:
    if not isinstance(node, dict):
        raise JvqlError(f"node must be an object, got {type(node).__name__}")
    kind = node.get("kind")
    if kind == "predicate":
        try:
            return PredLeaf(
                class_iri=Iri(node["classIri"]), entity_iri=Iri(node["entityIri"])
            )
        except (KeyError, ValueError) as exc:
            raise JvqlError(f"bad predicate node: {exc}") from exc
    if kind == "not":
        if "child" not in node:
            raise JvqlError("'not' node needs exactly one child")
        return Not(_node_from_jvql(node["child"]))
    if kind in ("and", "or"):
        children = node.get("children")
        if not isinstance(children, list) or len(children) < 2:
            raise JvqlError(f"'{kind}' node needs at least 2 children")
        parsed = tuple(_node_from_jvql(c) for c in children)
        return And(parsed) if kind == "and" else Or(parsed)
    raise JvqlError(f"unknown node kind: {kind!r}")


def from_jvql(doc: dict[str, Any]) -> EntityExpr:
    """Parse and canonicalize a jVQL document."""
    if not isinstance(doc, dict):
        raise JvqlError("document must be an object")
    if doc.get("version") != JVQL_VERSION:
        raise JvqlError(f"unsupported jVQL version: {doc.get('version')!r}")
    if "root" not in doc:
        raise JvqlError("document needs a root node")
    return canonicalize(_node_from_jvql(doc["root"]))
